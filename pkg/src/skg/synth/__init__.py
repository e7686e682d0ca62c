"""Generate/verify/refine synthesis loop against an external model service."""

from .bundle import (
    BundleParseError,
    BundleSchemaError,
    BundleStructuralError,
    GenerationBundle,
    MultiplePayloadBlocks,
    NoPayloadBlock,
    bundle_to_doc,
    parse_bundle,
)
from .client import (
    AuthError,
    CompletionResult,
    HttpLlmClient,
    LlmClientConfig,
    ScriptedLlmClient,
    TransportError,
)
from .loop import LoopConfig, LoopOutcome, ParseFailure, call_generate, call_refine, run_batch, run_loop
from .mock import DeterministicLlmClient, make_bundle, make_bundle_text
from .templates import MissingPlaceholder, PromptTemplate, default_templates, render_prompt
from .verify import Finding, VerificationReport, run_verify

__all__ = [
    "AuthError",
    "BundleParseError",
    "BundleSchemaError",
    "BundleStructuralError",
    "CompletionResult",
    "DeterministicLlmClient",
    "Finding",
    "GenerationBundle",
    "HttpLlmClient",
    "LlmClientConfig",
    "LoopConfig",
    "LoopOutcome",
    "MissingPlaceholder",
    "MultiplePayloadBlocks",
    "NoPayloadBlock",
    "ParseFailure",
    "PromptTemplate",
    "ScriptedLlmClient",
    "TransportError",
    "VerificationReport",
    "bundle_to_doc",
    "call_generate",
    "call_refine",
    "default_templates",
    "make_bundle",
    "make_bundle_text",
    "parse_bundle",
    "render_prompt",
    "run_batch",
    "run_loop",
    "run_verify",
]
