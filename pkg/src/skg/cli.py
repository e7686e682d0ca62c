"""Command-line interface: synthesis, corpora, evaluation, and the review service."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .canonical import (
    canonical_text,
    canonicalize,
    canonicalize_case,
    parse_case,
    read_lines,
)
from .corpus.bench import build_cfpb_bench, build_mm_bench, build_text_bench, record_from_doc, record_to_doc
from .corpus.corrupt import CorruptionSpec, corrupt_evidence
from .corpus.ingest import ingest_cfpb_csv
from .corpus.training import STAGES as CORPUS_STAGES, emit_training_corpora
from .evaluation.report import write_csv, write_report
from .evaluation.runner import SLICES, ReplayClient, run_eval
from .evaluation.splits import SplitAssignment
from .pipeline import (
    ABLATION_FLAGS,
    PipelineConfig,
    mock_client_factory,
    read_emissions,
    run_pipeline,
    write_emissions,
    write_escalations,
)
from .rules import default_rules, parse_rules
from .synth.client import HttpLlmClient, LlmClientConfig
from .synth.loop import TraceWriter
from .synth.templates import default_templates, load_templates
from .synthetic import synthetic_cases

logger = logging.getLogger(__name__)


def _load_rules(path: str | None):
    if path is None:
        return default_rules()
    return parse_rules(Path(path).read_text(encoding="utf-8"))


def _load_cases(directory: str):
    cases = []
    for path in sorted(Path(directory).glob("*.case")):
        cases.append(parse_case(path.read_bytes()))
    if not cases:
        raise click.ClickException(f"no .case files under {directory}")
    return cases


def _ratio_splitter(ratios: str, seed: int) -> SplitAssignment:
    parts = [float(x) for x in ratios.split(",")]
    if len(parts) != 3:
        raise click.ClickException("ratios must be train,dev,test")
    return SplitAssignment(ratios={"train": parts[0], "dev": parts[1], "test": parts[2]}, seed=seed)


@click.group()
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
def main(verbose: bool):
    """Scene knowledge graph toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command("demo-data")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--count", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
def demo_data(out: str, count: int, seed: int):
    """Write synthetic complaint cases as .case files."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for case in synthetic_cases(count, seed):
        (out_dir / f"{case.case_id}.case").write_bytes(canonicalize_case(case) + b"\n")
    click.echo(f"wrote {count} cases to {out_dir}")


@main.command()
@click.option("--cases", "cases_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--templates", "templates_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--k-max", default=3, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--variants", default=8, show_default=True, help="Variant budget per final graph.")
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--ablate",
    default="",
    help=f"Comma-separated toggles from: {', '.join(ABLATION_FLAGS)}.",
)
@click.option("--mock-llm", is_flag=True, help="Use the deterministic offline generator.")
@click.option("--endpoint", help="Model service URL (chat-completions shape).")
@click.option("--model", "model_name", default="scene-writer", show_default=True)
@click.option("--token-env", default="SKG_MODEL_TOKEN", show_default=True)
def synth(
    cases_dir,
    rules_path,
    templates_dir,
    out_dir,
    k_max,
    workers,
    variants,
    seed,
    ablate,
    mock_llm,
    endpoint,
    model_name,
    token_env,
):
    """Run the generate/verify/refine loop and expand variants."""
    rules = _load_rules(rules_path)
    templates = load_templates(templates_dir) if templates_dir else default_templates()
    cases = _load_cases(cases_dir)
    flags = [f.strip() for f in ablate.split(",") if f.strip()]
    try:
        config = PipelineConfig.with_ablations(
            flags,
            k_max=k_max,
            workers=workers,
            variants_per_case=variants,
            seed=seed,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    if mock_llm:
        client_for_case = mock_client_factory(config)
    elif endpoint:
        client = HttpLlmClient(
            LlmClientConfig(endpoint_url=endpoint, model_name=model_name, auth_token_env_name=token_env)
        )
        client_for_case = lambda case: client  # noqa: E731 - shared client
    else:
        raise click.ClickException("pass --mock-llm or --endpoint")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "traces.tracel").open("w", encoding="utf-8") as trace_fp:
        result = run_pipeline(
            cases,
            rules,
            templates,
            client_for_case,
            config,
            trace_writer=TraceWriter(trace_fp),
        )
    n_emitted = write_emissions(result.emissions, out / "emissions.skgl")
    n_escalated = write_escalations(result.outcomes, out / "escalated.jsonl")
    click.echo(
        f"finals={len(result.finals)} escalated={n_escalated} "
        f"emissions={n_emitted} variant_failures={result.variant_failures}"
    )


@main.command("build-bench")
@click.option("--emissions", "emissions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--split-seed", default=0, show_default=True)
def build_bench(emissions_path, out_dir, ratios, split_seed):
    """Emit ComplaintScene-Text and ComplaintScene-MM benchmark streams."""
    splitter = _ratio_splitter(ratios, split_seed)
    emissions = read_emissions(emissions_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, builder in (("bench_text.jsonl", build_text_bench), ("bench_mm.jsonl", build_mm_bench)):
        count = 0
        with (out / name).open("w", encoding="utf-8") as fp:
            for record in builder(emissions, splitter):
                fp.write(canonical_text(record_to_doc(record)))
                fp.write("\n")
                count += 1
        click.echo(f"{name}: {count} records")


@main.command("emit-corpus")
@click.option("--emissions", "emissions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--stage", type=click.Choice(CORPUS_STAGES), required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def emit_corpus(emissions_path, stage, out_path):
    """Emit a training corpus stream (pt, sft, or mm)."""
    emissions = read_emissions(emissions_path)
    count = 0
    with Path(out_path).open("w", encoding="utf-8") as fp:
        for doc in emit_training_corpora(emissions, stage):
            fp.write(canonical_text(doc))
            fp.write("\n")
            count += 1
    click.echo(f"{stage}: {count} records -> {out_path}")


@main.command()
@click.option("--cases", "cases_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--level", required=True, type=float)
@click.option("--seed", default=0, show_default=True)
@click.option("--targets", default="evidence_assets", show_default=True,
              type=click.Choice(["evidence_assets", "metadata_fields", "both"]))
def corrupt(cases_dir, out_dir, level, seed, targets):
    """Write corrupted copies of every case in a directory."""
    spec = CorruptionSpec(level=level, seed=seed, targets=targets)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for case in _load_cases(cases_dir):
        damaged = corrupt_evidence(case, spec)
        (out / f"{damaged.case_id}.case").write_bytes(canonicalize_case(damaged) + b"\n")
        count += 1
    click.echo(f"corrupted {count} cases at level {level} -> {out}")


@main.command("ingest-cfpb")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--limit", type=int)
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--split-seed", default=0, show_default=True)
def ingest_cfpb(csv_path, out_dir, limit, ratios, split_seed):
    """Ingest a complaint export: .case files plus CFPB benchmark streams."""
    splitter = _ratio_splitter(ratios, split_seed)
    cases, labels, skipped = ingest_cfpb_csv(csv_path, limit=limit)
    out = Path(out_dir)
    (out / "cases").mkdir(parents=True, exist_ok=True)
    for case in cases:
        (out / "cases" / f"{case.case_id}.case").write_bytes(canonicalize_case(case) + b"\n")
    triples = [(case, lab.product, lab.issue) for case, lab in zip(cases, labels)]
    for which, name in (("product", "cfpb_product.jsonl"), ("issue", "cfpb_issue.jsonl")):
        with (out / name).open("w", encoding="utf-8") as fp:
            for record in build_cfpb_bench(triples, splitter, which):
                fp.write(canonical_text(record_to_doc(record)))
                fp.write("\n")
    click.echo(f"ingested {len(cases)} cases (skipped {skipped}) -> {out}")


@main.command("eval")
@click.option("--bench", "bench_paths", required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--replay", "replay_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model-endpoint", "endpoint")
@click.option("--model", "model_name", default="decision-model", show_default=True)
@click.option("--token-env", default="SKG_MODEL_TOKEN", show_default=True)
@click.option("--slices", default="full", show_default=True,
              help=f"Comma-separated from: {', '.join(SLICES)}.")
@click.option("--split", default="test", show_default=True)
@click.option("--cases", "cases_dir", type=click.Path(exists=True, file_okay=False),
              help="Case directory (required for corruption slices).")
@click.option("--emissions", "emissions_path", type=click.Path(exists=True, dir_okay=False),
              help="Emission stream for policy-consistency graphs.")
@click.option("--corruption-seed", default=0, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False))
def eval_cmd(
    bench_paths,
    rules_path,
    replay_path,
    endpoint,
    model_name,
    token_env,
    slices,
    split,
    cases_dir,
    emissions_path,
    corruption_seed,
    report_path,
    csv_path,
):
    """Score a model (or a replay file) on benchmark streams."""
    rules = _load_rules(rules_path)
    records = []
    for path in bench_paths:
        with Path(path).open(encoding="utf-8") as fp:
            records.extend(record_from_doc(doc) for doc in read_lines(fp))
    replay = ReplayClient(replay_path) if replay_path else None
    model = None
    if replay is None:
        if not endpoint:
            raise click.ClickException("pass --replay or --model-endpoint")
        model = HttpLlmClient(
            LlmClientConfig(endpoint_url=endpoint, model_name=model_name, auth_token_env_name=token_env)
        )
    cases = None
    if cases_dir:
        cases = {case.case_id: case for case in _load_cases(cases_dir)}
    graphs = None
    if emissions_path:
        graphs = {
            e.graph.graph_id: e.graph for e in read_emissions(emissions_path) if e.graph is not None
        }
    slice_names = [s.strip() for s in slices.split(",") if s.strip()]
    reports = run_eval(
        records,
        rules,
        model=model,
        replay=replay,
        slices=slice_names,
        cases=cases,
        graphs=graphs,
        eval_split=split,
        corruption_seed=corruption_seed,
    )
    write_report(reports, report_path)
    if csv_path:
        write_csv(reports, csv_path)
    for name, report in sorted(reports.items()):
        click.echo(f"[{name}] {report.counts} aggregates={ {k: str(v) for k, v in report.aggregates.items()} }")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--listen", default="127.0.0.1:8321", show_default=True)
@click.option("--tokens", "tokens_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lease-minutes", default=60, show_default=True)
def serve(store_dir, rules_path, listen, tokens_path, lease_minutes):
    """Run the review service over a content store."""
    import uvicorn

    from .review.service import create_app, load_tokens
    from .review.store import ContentStore

    rules = _load_rules(rules_path)
    store = ContentStore(store_dir)
    app = create_app(store, rules, load_tokens(tokens_path), lease_minutes=lease_minutes)
    host, _, port = listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8321), log_level="info")


@main.command()
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False))
def check(graph_path, rules_path):
    """Validate one .skg file and evaluate it against the rules."""
    from .canonical import parse_graph
    from .rules.evaluate import evaluate
    from .validate import validate_graph

    graph = parse_graph(Path(graph_path).read_bytes())
    result = validate_graph(graph)
    for violation in result.violations:
        click.echo(f"structural: {violation.code}: {violation.message}")
    rules = _load_rules(rules_path)
    for violation in evaluate(graph, rules):
        click.echo(f"rule[{violation.severity}]: {violation.rule_id}: {violation.message}")
    if result.ok and not evaluate(graph, rules):
        click.echo("ok")
    elif not result.ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
