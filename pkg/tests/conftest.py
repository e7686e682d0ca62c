from __future__ import annotations

from pathlib import Path

import pytest

from skg.canonical import parse_graph
from skg.rules import default_rules
from skg.synthetic import build_graph, synthetic_case

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture(scope="session")
def refund_graph():
    return parse_graph((FIXTURES / "canonical_refund.skg").read_bytes())


@pytest.fixture()
def sample_case():
    return synthetic_case(0, seed=42)


@pytest.fixture()
def sample_graph(sample_case):
    return build_graph(sample_case, variety_seed=42)


def graphs_for_sweep(count: int, seed: int = 0):
    """Valid, rule-consistent graphs with varied shapes."""
    return [build_graph(synthetic_case(i, seed=seed), variety_seed=seed) for i in range(count)]
