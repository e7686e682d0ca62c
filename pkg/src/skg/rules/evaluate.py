"""Rule evaluation over scene knowledge graphs.

Atoms are existential: a node atom holds when at least one node of the
kind carries the attribute and passes the comparison, an edge atom when
a matching typed edge exists. NOT is closed-world (no element
satisfies). A rule is violated when its antecedent holds but its
consequent does not; the emitted Violation carries the elements that
witnessed the antecedent. Type-mismatched comparisons are simply false,
never errors, so evaluation is total on valid graphs.
"""

from __future__ import annotations

from datetime import datetime
from decimal import Decimal

from ..model import DecisionAction, NodeKind, SceneKnowledgeGraph
from .ast import (
    And,
    ConstraintRule,
    ConstraintSet,
    DecisionIs,
    DimIs,
    EdgeExists,
    NodeAttrIs,
    Not,
    Or,
    PatternExpr,
    Violation,
)


def _same_family(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, (int, Decimal)) and isinstance(b, (int, Decimal)):
        return True
    return type(a) is type(b)


def compare(actual, cmp: str, wanted) -> bool:
    if cmp == "in":
        return any(_same_family(actual, w) and actual == w for w in wanted)
    if not _same_family(actual, wanted):
        # "!=" across families is deliberately false too: an atom only
        # holds when the attribute genuinely carries a comparable value
        return False
    if cmp == "=":
        return actual == wanted
    if cmp == "!=":
        return actual != wanted
    if not isinstance(actual, (int, Decimal, datetime)):
        return False
    if cmp == "<":
        return actual < wanted
    if cmp == "<=":
        return actual <= wanted
    if cmp == ">":
        return actual > wanted
    if cmp == ">=":
        return actual >= wanted
    raise ValueError(f"unknown comparator {cmp!r}")


class _Witnesses:
    def __init__(self):
        self.node_ids: set[str] = set()
        self.edge_ids: set[str] = set()

    def merge(self, other: "_Witnesses"):
        self.node_ids |= other.node_ids
        self.edge_ids |= other.edge_ids


def _atom_matches(graph: SceneKnowledgeGraph, atom) -> _Witnesses:
    found = _Witnesses()
    if isinstance(atom, NodeAttrIs):
        for node in graph.nodes:
            if node.kind != atom.kind or atom.attr_key not in node.attributes:
                continue
            if compare(node.attributes[atom.attr_key], atom.cmp, atom.value):
                found.node_ids.add(node.node_id)
    elif isinstance(atom, EdgeExists):
        kinds = {n.node_id: n.kind for n in graph.nodes}
        for edge in graph.edges:
            if (
                edge.relation == atom.relation
                and kinds.get(edge.src) == atom.src_kind
                and kinds.get(edge.dst) == atom.dst_kind
            ):
                found.edge_ids.add(edge.edge_id)
    elif isinstance(atom, DecisionIs):
        final = graph.final_decision()
        if final is not None:
            action = final.attr("action")
            wanted = atom.action
            if isinstance(wanted, frozenset):
                ok = any(action == a.value for a in wanted)
                if atom.cmp == "!=":  # pragma: no cover - parser forbids
                    ok = not ok
            elif atom.cmp == "=":
                ok = action == wanted.value
            elif atom.cmp == "!=":
                ok = action != wanted.value
            else:
                ok = False
            if ok:
                found.node_ids.add(final.node_id)
    elif isinstance(atom, DimIs):
        actual = graph.dim(atom.dim)
        if actual is not None and compare(actual, atom.cmp, atom.value):
            found.node_ids = set()  # dimension atoms have no element witness
            return _TRUE_WITNESS
    else:
        raise TypeError(f"not an atom: {atom!r}")
    return found


class _TrueWitness(_Witnesses):
    """Marker for atoms that hold without binding a graph element."""

    def __bool__(self):
        return True


_TRUE_WITNESS = _TrueWitness()


def _holds(graph: SceneKnowledgeGraph, expr: PatternExpr) -> tuple[bool, _Witnesses]:
    if isinstance(expr, Not):
        ok, _ = _holds(graph, expr.expr)
        return not ok, _Witnesses()
    if isinstance(expr, And):
        merged = _Witnesses()
        for part in expr.parts:
            ok, wit = _holds(graph, part)
            if not ok:
                return False, _Witnesses()
            merged.merge(wit)
        return True, merged
    if isinstance(expr, Or):
        for part in expr.parts:
            ok, wit = _holds(graph, part)
            if ok:
                return True, wit
        return False, _Witnesses()
    wit = _atom_matches(graph, expr)
    truthy = isinstance(wit, _TrueWitness) or bool(wit.node_ids or wit.edge_ids)
    return truthy, wit


def check_rule(graph: SceneKnowledgeGraph, rule: ConstraintRule) -> Violation | None:
    ant_ok, witnesses = _holds(graph, rule.antecedent)
    if not ant_ok:
        return None
    con_ok, _ = _holds(graph, rule.consequent)
    if con_ok:
        return None
    return Violation(
        rule_id=rule.rule_id,
        severity=rule.severity,
        message=f"{rule.rule_id}: antecedent holds but consequent is unsatisfied",
        node_ids=tuple(sorted(witnesses.node_ids)),
        edge_ids=tuple(sorted(witnesses.edge_ids)),
    )


def evaluate(graph: SceneKnowledgeGraph, rules: ConstraintSet) -> list[Violation]:
    """Every violated rule, with the antecedent's witnessing elements."""
    out = []
    for rule in rules:
        violation = check_rule(graph, rule)
        if violation is not None:
            out.append(violation)
    return out


def is_consistent(graph: SceneKnowledgeGraph, rules: ConstraintSet) -> bool:
    """True iff no blocking rule is violated (advisory findings do not count)."""
    for rule in rules:
        if rule.severity != "blocking":
            continue
        if check_rule(graph, rule) is not None:
            return False
    return True
