"""Parser and printer for the constraint rule DSL (`.skgr` files).

Grammar (one rule per RULE keyword; `#` comments; comment lines directly
above a rule become its description):

    ruleset  := rule+
    rule     := "RULE" id severity ":" "IF" expr "THEN" expr
    expr     := and_expr ("OR" and_expr)*          # OR binds loosest
    and_expr := term ("AND" term)*
    term     := ["NOT"] ( atom | "(" expr ")" )
    atom     := kind "(" attr cmp value ")"
              | "edge" "(" relation "," kind "," kind ")"
              | "decision" cmp action
              | "dim" "(" dimname cmp value ")"
    cmp      := "=" | "!=" | "<" | "<=" | ">" | ">=" | "in"
    severity := "blocking" | "advisory"

Values are bare words, quoted strings, numbers, RFC 3339 timestamps, or
`{v, v, ...}` sets (required by `in`, rejected elsewhere). Ordered
comparators demand numeric or timestamp literals. parse and print are
mutual fixed points: print(parse(src)) reparses to the same rule set.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import SkgError
from ..model import SCENE_DIM_KEYS, DecisionAction, NodeKind, RelationType
from ..values import TypedValue, render_decimal, render_timestamp, value_from_text
from .ast import (
    And,
    Atom,
    ConstraintRule,
    ConstraintSet,
    DecisionIs,
    DimIs,
    EdgeExists,
    NodeAttrIs,
    Not,
    Or,
    PatternExpr,
    ORDERED_COMPARATORS,
    SEVERITIES,
)

from datetime import datetime
from decimal import Decimal


class RuleSyntaxError(SkgError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class RuleTypeError(SkgError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class DuplicateRuleId(SkgError):
    def __init__(self, rule_id: str):
        super().__init__(f"rule id {rule_id!r} declared twice")
        self.rule_id = rule_id


_KIND_WORDS = {
    "entity": NodeKind.ENTITY,
    "evidence": NodeKind.EVIDENCE,
    "event": NodeKind.EVENT,
    "state": NodeKind.STATE,
    "policy": NodeKind.POLICY,
    "decision": NodeKind.DECISION,
}
_WORD_FOR_KIND = {v: k for k, v in _KIND_WORDS.items()}

_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<comment>\#[^\n]*)
      | (?P<nl>\n)
      | (?P<timestamp>\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z)
      | (?P<number>-?\d+(?:\.\d+)?)
      | (?P<string>"(?:[^"\\\n]|\\.)*")
      | (?P<word>[A-Za-z_][A-Za-z0-9_\-.]*)
      | (?P<cmp><=|>=|!=|=|<|>)
      | (?P<sym>[():,{}])
    """,
    re.X,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise RuleSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = match.lastgroup
        text = match.group()
        if kind == "nl":
            tokens.append(_Token("nl", "\n", line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws",):
                tokens.append(_Token(kind, text, line, col))
            col += len(text)
        pos = match.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    # -- cursor helpers ---------------------------------------------------

    def peek(self, skip_layout=True) -> _Token:
        i = self.pos
        while skip_layout and self.tokens[i].kind in ("nl", "comment"):
            i += 1
        return self.tokens[i]

    def next(self) -> _Token:
        while self.tokens[self.pos].kind in ("nl", "comment"):
            self.pos += 1
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect_word(self, word: str) -> _Token:
        tok = self.next()
        if tok.kind != "word" or tok.text != word:
            raise RuleSyntaxError(f"expected {word!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def expect_sym(self, sym: str) -> _Token:
        tok = self.next()
        if tok.kind != "sym" or tok.text != sym:
            raise RuleSyntaxError(f"expected {sym!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def expect_identifier(self) -> _Token:
        tok = self.next()
        if tok.kind != "word":
            raise RuleSyntaxError(f"expected an identifier, found {tok.text!r}", tok.line, tok.col)
        return tok

    # -- grammar ----------------------------------------------------------

    def parse_ruleset(self) -> ConstraintSet:
        rules: list[ConstraintRule] = []
        seen: set[str] = set()
        while True:
            description = self._collect_description()
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind != "word" or tok.text != "RULE":
                raise RuleSyntaxError(f"expected 'RULE', found {tok.text!r}", tok.line, tok.col)
            rule = self.parse_rule(description)
            if rule.rule_id in seen:
                raise DuplicateRuleId(rule.rule_id)
            seen.add(rule.rule_id)
            rules.append(rule)
        if not rules:
            tok = self.peek()
            raise RuleSyntaxError("rule set must contain at least one rule", tok.line, tok.col)
        return ConstraintSet(tuple(rules))

    def _collect_description(self) -> str:
        # comments immediately before a RULE keyword document that rule
        parts: list[str] = []
        while self.tokens[self.pos].kind in ("nl", "comment"):
            tok = self.tokens[self.pos]
            if tok.kind == "comment":
                parts.append(tok.text.lstrip("#").strip())
            self.pos += 1
        return " ".join(p for p in parts if p)

    def parse_rule(self, description: str) -> ConstraintRule:
        self.expect_word("RULE")
        rule_id = self.expect_identifier().text
        severity_tok = self.expect_identifier()
        if severity_tok.text not in SEVERITIES:
            raise RuleSyntaxError(
                f"severity must be one of {SEVERITIES}, found {severity_tok.text!r}",
                severity_tok.line,
                severity_tok.col,
            )
        self.expect_sym(":")
        self.expect_word("IF")
        antecedent = self.parse_expr()
        self.expect_word("THEN")
        consequent = self.parse_expr()
        return ConstraintRule(
            rule_id=rule_id,
            severity=severity_tok.text,
            antecedent=antecedent,
            consequent=consequent,
            description=description,
        )

    def parse_expr(self) -> PatternExpr:
        parts = [self.parse_and_expr()]
        while self.peek().kind == "word" and self.peek().text == "OR":
            self.next()
            parts.append(self.parse_and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and_expr(self) -> PatternExpr:
        parts = [self.parse_term()]
        while self.peek().kind == "word" and self.peek().text == "AND":
            self.next()
            parts.append(self.parse_term())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_term(self) -> PatternExpr:
        tok = self.peek()
        if tok.kind == "word" and tok.text == "NOT":
            self.next()
            return Not(self.parse_term())
        if tok.kind == "sym" and tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_sym(")")
            return inner
        return self.parse_atom()

    def parse_atom(self) -> Atom:
        tok = self.expect_identifier()
        word = tok.text
        if word == "edge":
            self.expect_sym("(")
            relation = self._parse_relation()
            self.expect_sym(",")
            src_kind = self._parse_kind()
            self.expect_sym(",")
            dst_kind = self._parse_kind()
            self.expect_sym(")")
            return EdgeExists(relation, src_kind, dst_kind)
        if word == "dim":
            self.expect_sym("(")
            dim_tok = self.expect_identifier()
            if dim_tok.text not in SCENE_DIM_KEYS:
                raise RuleTypeError(
                    f"unknown scene dimension {dim_tok.text!r}", dim_tok.line, dim_tok.col
                )
            cmp = self._parse_cmp()
            value = self._parse_value(cmp)
            self.expect_sym(")")
            self._require_string_domain(cmp, value, dim_tok)
            return DimIs(dim_tok.text, cmp, value)
        if word == "decision" and not (self.peek().kind == "sym" and self.peek().text == "("):
            cmp = self._parse_cmp()
            action = self._parse_action_value(cmp)
            return DecisionIs(cmp, action)
        if word in _KIND_WORDS:
            kind = _KIND_WORDS[word]
            self.expect_sym("(")
            attr_tok = self.expect_identifier()
            cmp = self._parse_cmp()
            value = self._parse_value(cmp)
            self.expect_sym(")")
            if cmp in ORDERED_COMPARATORS and not isinstance(value, (int, Decimal, datetime)):
                raise RuleTypeError(
                    f"comparator {cmp!r} needs a numeric or timestamp value",
                    attr_tok.line,
                    attr_tok.col,
                )
            return NodeAttrIs(kind, attr_tok.text, cmp, value)
        raise RuleSyntaxError(f"expected an atom, found {word!r}", tok.line, tok.col)

    def _parse_kind(self) -> NodeKind:
        tok = self.expect_identifier()
        if tok.text not in _KIND_WORDS:
            raise RuleTypeError(f"unknown node kind {tok.text!r}", tok.line, tok.col)
        return _KIND_WORDS[tok.text]

    def _parse_relation(self) -> RelationType:
        tok = self.expect_identifier()
        try:
            return RelationType(tok.text)
        except ValueError:
            raise RuleTypeError(f"unknown relation {tok.text!r}", tok.line, tok.col) from None

    def _parse_cmp(self) -> str:
        tok = self.next()
        if tok.kind == "cmp":
            return tok.text
        if tok.kind == "word" and tok.text == "in":
            return "in"
        raise RuleSyntaxError(f"expected a comparator, found {tok.text!r}", tok.line, tok.col)

    def _parse_value(self, cmp: str):
        tok = self.peek()
        if tok.kind == "sym" and tok.text == "{":
            if cmp != "in":
                raise RuleTypeError("value sets are only allowed with 'in'", tok.line, tok.col)
            return self._parse_value_set()
        if cmp == "in":
            raise RuleTypeError("'in' needs a {v, ...} value set", tok.line, tok.col)
        return self._parse_scalar()

    def _parse_value_set(self) -> frozenset:
        self.expect_sym("{")
        values = [self._parse_scalar()]
        while self.peek().kind == "sym" and self.peek().text == ",":
            self.next()
            values.append(self._parse_scalar())
        self.expect_sym("}")
        return frozenset(values)

    def _parse_scalar(self) -> TypedValue:
        tok = self.next()
        if tok.kind == "number":
            return int(tok.text) if "." not in tok.text else Decimal(tok.text)
        if tok.kind == "timestamp":
            return value_from_text(tok.text)
        if tok.kind == "string":
            try:
                return json.loads(tok.text)
            except json.JSONDecodeError:
                raise RuleSyntaxError("bad string escape", tok.line, tok.col) from None
        if tok.kind == "word":
            return value_from_text(tok.text)
        raise RuleSyntaxError(f"expected a value, found {tok.text!r}", tok.line, tok.col)

    def _parse_action_value(self, cmp: str):
        tok = self.peek()
        if cmp in ORDERED_COMPARATORS:
            raise RuleTypeError("decision actions are not ordered", tok.line, tok.col)
        starts_set = tok.kind == "sym" and tok.text == "{"
        if cmp == "in" and not starts_set:
            raise RuleTypeError("'in' needs a {v, ...} value set", tok.line, tok.col)
        if cmp != "in" and starts_set:
            raise RuleTypeError("value sets are only allowed with 'in'", tok.line, tok.col)
        if cmp == "in":
            raw = self._parse_value_set()
            return frozenset(self._to_action(item, tok) for item in raw)
        return self._to_action(self._parse_scalar(), tok)

    @staticmethod
    def _to_action(raw, tok) -> DecisionAction:
        try:
            return DecisionAction(raw)
        except ValueError:
            raise RuleTypeError(f"unknown decision action {raw!r}", tok.line, tok.col) from None

    @staticmethod
    def _require_string_domain(cmp, value, tok):
        if cmp in ORDERED_COMPARATORS:
            raise RuleTypeError("scene dimensions are categorical, not ordered", tok.line, tok.col)
        ok = (
            all(isinstance(v, str) for v in value)
            if isinstance(value, frozenset)
            else isinstance(value, str)
        )
        if not ok:
            raise RuleTypeError("scene dimension values are strings", tok.line, tok.col)


def parse_rules(source: str) -> ConstraintSet:
    """Parse `.skgr` source into a ConstraintSet (full grammar, typed errors)."""
    return _Parser(_tokenize(source)).parse_ruleset()


# ---------------------------------------------------------------------------
# printing


_BARE_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-.]*$")
_RESERVED = {"RULE", "IF", "THEN", "AND", "OR", "NOT", "true", "false", "in", "edge", "dim"}


def _print_scalar(value: TypedValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Decimal):
        return render_decimal(value)
    if isinstance(value, datetime):
        return render_timestamp(value)
    if _BARE_WORD_RE.match(value) and value not in _RESERVED:
        return value
    return json.dumps(value, ensure_ascii=False)


def _print_value(value) -> str:
    if isinstance(value, frozenset):
        return "{" + ", ".join(sorted(_print_scalar(v) for v in value)) + "}"
    return _print_scalar(value)


def _print_expr(expr: PatternExpr, parent: str = "or") -> str:
    if isinstance(expr, Or):
        body = " OR ".join(_print_expr(p, "or") for p in expr.parts)
        return f"({body})" if parent in ("and", "not") else body
    if isinstance(expr, And):
        body = " AND ".join(_print_expr(p, "and") for p in expr.parts)
        return f"({body})" if parent == "not" else body
    if isinstance(expr, Not):
        return "NOT " + _print_expr(expr.expr, "not")
    if isinstance(expr, NodeAttrIs):
        return f"{_WORD_FOR_KIND[expr.kind]}({expr.attr_key} {expr.cmp} {_print_value(expr.value)})"
    if isinstance(expr, EdgeExists):
        return (
            f"edge({expr.relation.value}, {_WORD_FOR_KIND[expr.src_kind]},"
            f" {_WORD_FOR_KIND[expr.dst_kind]})"
        )
    if isinstance(expr, DecisionIs):
        if isinstance(expr.action, frozenset):
            rendered = "{" + ", ".join(sorted(a.value for a in expr.action)) + "}"
        else:
            rendered = expr.action.value
        return f"decision {expr.cmp} {rendered}"
    if isinstance(expr, DimIs):
        return f"dim({expr.dim} {expr.cmp} {_print_value(expr.value)})"
    raise TypeError(f"not a PatternExpr: {expr!r}")


def print_rules(rules: ConstraintSet) -> str:
    """Canonical source text; parse(print_rules(parse(src))) is a fixed point."""
    blocks = []
    for rule in rules:
        lines = []
        if rule.description:
            lines.append(f"# {rule.description}")
        lines.append(
            f"RULE {rule.rule_id} {rule.severity}: "
            f"IF {_print_expr(rule.antecedent)} THEN {_print_expr(rule.consequent)}"
        )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
