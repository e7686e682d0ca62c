"""Typed AST for the constraint rule language.

A rule is an implication: whenever the antecedent holds on a graph, the
consequent must hold too. Atoms are existential tests over nodes,
edges, the final decision, or a scene dimension; NOT uses closed-world
semantics (no element satisfies the test).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Union

from ..model import DecisionAction, NodeKind, RelationType
from ..values import TypedValue

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "in")
ORDERED_COMPARATORS = ("<", "<=", ">", ">=")
SEVERITIES = ("blocking", "advisory")


@dataclass(frozen=True)
class NodeAttrIs:
    kind: NodeKind
    attr_key: str
    cmp: str
    value: TypedValue | frozenset


@dataclass(frozen=True)
class EdgeExists:
    relation: RelationType
    src_kind: NodeKind
    dst_kind: NodeKind


@dataclass(frozen=True)
class DecisionIs:
    cmp: str
    action: DecisionAction | frozenset


@dataclass(frozen=True)
class DimIs:
    dim: str
    cmp: str
    value: str | frozenset


Atom = Union[NodeAttrIs, EdgeExists, DecisionIs, DimIs]


@dataclass(frozen=True)
class Not:
    expr: "PatternExpr"


@dataclass(frozen=True)
class And:
    parts: tuple["PatternExpr", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["PatternExpr", ...]


PatternExpr = Union[NodeAttrIs, EdgeExists, DecisionIs, DimIs, Not, And, Or]


@dataclass(frozen=True)
class ConstraintRule:
    rule_id: str
    severity: str
    antecedent: PatternExpr
    consequent: PatternExpr
    description: str = ""


@dataclass(frozen=True)
class ConstraintSet:
    rules: tuple[ConstraintRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def rule(self, rule_id: str) -> ConstraintRule | None:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        return None

    @property
    def ruleset_id(self) -> str:
        from .parser import print_rules

        return hashlib.sha256(print_rules(self).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Violation:
    rule_id: str
    severity: str
    message: str
    node_ids: tuple[str, ...] = ()
    edge_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "edge_ids", tuple(self.edge_ids))
