"""Recursive-descent parser and name resolution for compact specifications.

Grammar::

    compact   := norm+
    norm      := kind IDENT '(' IDENT '->' IDENT (',' IDENT)* ')' ':' state+
    state     := IDENT ':' expr
    expr      := andExpr ('or' andExpr)*
    andExpr   := exExpr ('and' exExpr)*
    exExpr    := atom ('except' atom)*
    atom      := eventExpr | normRef | '(' expr ')'
    eventExpr := IDENT '.' IDENT '{' IDENT (',' IDENT)* '}' ('@' timeAnnot)?
    normRef   := IDENT '(' IDENT '->' IDENT (',' IDENT)* ')' ':' IDENT
    timeAnnot := IDENT | IDENT cmp arith | '[' arith ',' arith ']'
    arith     := IDENT (('+'|'-') INT)? | INT

A new state starts wherever an identifier is directly followed by a colon.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import errors
from .lexer import Token, tokenize
from .syntax import (
    COMPARE_OPS,
    NORM_KINDS,
    NOW,
    And,
    Arith,
    CompactSpec,
    Compare,
    EventExpr,
    Except,
    Formula,
    Interval,
    Label,
    NormRef,
    NormSpec,
    Or,
    Position,
    annot_binds,
    annot_uses,
    positive_labels,
)

DECLARED_STATES = {
    "commitment": ("created", "detached", "discharged"),
    "authorization": ("created", "detached", "discharged"),
    "prohibition": ("created", "violated"),
}

_CMP_TOKENS = {"LT": "<", "GT": ">", "LE": "<=", "GE": ">="}
assert set(_CMP_TOKENS.values()) == set(COMPARE_OPS)


def available_states(norm: NormSpec) -> list[str]:
    """Declared states followed by the ones derived from the norm kind."""
    declared = norm.state_names()
    derived: list[str] = []
    if norm.kind == "commitment":
        if "detached" in declared and "discharged" in declared:
            derived.append("violated")
        if "detached" in declared:
            derived.append("expired")
    elif norm.kind == "prohibition":
        if "violated" in declared:
            derived.append("satisfied")
    elif norm.kind == "authorization":
        if "detached" in declared and "discharged" in declared:
            derived.append("violated")
    return declared + derived


def inherited_states(kind: str, state: str) -> tuple[str, ...]:
    """States conjoined into ``state`` whose time labels it may use."""
    if state == "created":
        return ()
    if kind == "authorization" and state == "discharged":
        return ("created", "detached")
    return ("created",)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token helpers --

    def peek(self, k: int = 0) -> Optional[Token]:
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else None

    def _where(self) -> Optional[Position]:
        tok = self.peek()
        if tok is not None:
            return tok.position
        if self.tokens:
            return self.tokens[-1].position
        return Position(1, 1)

    def _fail(self, expected: str):
        tok = self.peek()
        found = "end of input" if tok is None else repr(tok)
        raise errors.CompactSyntaxError(self._where(), expected, found)

    def at(self, kind: str, value: Optional[str] = None, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok.kind == kind and (value is None or tok.value == value)

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        if not self.at(kind, value):
            self._fail(value or kind)
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def ident(self) -> str:
        return self.expect("IDENT").value

    # -- grammar --

    def compact(self, name: str) -> CompactSpec:
        norms: list[NormSpec] = []
        seen: set[str] = set()
        if self.peek() is None:
            self._fail("norm declaration")
        while self.peek() is not None:
            norm = self.norm()
            if norm.name in seen:
                raise errors.DuplicateNormName(f"norm {norm.name!r} declared twice", norm.position)
            seen.add(norm.name)
            norms.append(norm)
        return CompactSpec(norms=norms, name=name)

    def norm(self) -> NormSpec:
        tok = self.peek()
        if tok.kind == "IDENT":
            raise errors.UnknownNormType(
                f"unknown norm type {tok.value!r}; expected one of {', '.join(NORM_KINDS)}",
                tok.position,
            )
        if not (tok.kind == "KW" and tok.value in NORM_KINDS):
            self._fail("norm type")
        self.i += 1
        kind = tok.value
        name = self.ident()
        expectee, expector, params = self.role_args()
        self.expect("COLON")
        states: list[tuple[str, Formula]] = []
        if not (self.at("IDENT") and self.at("COLON", k=1)):
            self._fail("state")
        while self.at("IDENT") and self.at("COLON", k=1):
            state_tok = self.tokens[self.i]
            self.i += 2
            state = state_tok.value
            if any(s == state for s, _ in states):
                raise errors.DuplicateState(
                    f"state {state!r} declared twice in {name}", state_tok.position
                )
            if not states and state != "created":
                raise errors.MissingCreatedState(
                    f"norm {name} must declare 'created' as its first state", state_tok.position
                )
            if state not in DECLARED_STATES[kind]:
                raise errors.UnknownStateName(
                    f"{kind} {name} cannot declare state {state!r}", state_tok.position
                )
            states.append((state, self.expr()))
        return NormSpec(kind, name, expectee, expector, tuple(params), states, tok.position)

    def role_args(self) -> tuple[str, str, list[str]]:
        self.expect("LPAREN")
        first = self.ident()
        self.expect("ARROW")
        second = self.ident()
        rest = []
        while self.at("COMMA"):
            self.i += 1
            rest.append(self.ident())
        self.expect("RPAREN")
        return first, second, rest

    def expr(self) -> Formula:
        left = self.and_expr()
        while self.at("KW", "or"):
            self.i += 1
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Formula:
        left = self.ex_expr()
        while self.at("KW", "and"):
            self.i += 1
            left = And(left, self.ex_expr())
        return left

    def ex_expr(self) -> Formula:
        left = self.atom()
        while self.at("KW", "except"):
            self.i += 1
            left = Except(left, self.atom())
        return left

    def atom(self) -> Formula:
        if self.at("LPAREN"):
            self.i += 1
            inner = self.expr()
            self.expect("RPAREN")
            return inner
        if self.at("IDENT") and self.at("DOT", k=1):
            return self.event_expr()
        if self.at("IDENT") and self.at("LPAREN", k=1):
            norm = self.ident()
            r1, r2, params = self.role_args()
            self.expect("COLON")
            return NormRef(norm, (r1, r2), tuple(params), self.ident())
        self._fail("event expression, norm reference or '('")

    def event_expr(self) -> EventExpr:
        role = self.ident()
        self.expect("DOT")
        event = self.ident()
        self.expect("LBRACE")
        attrs = [self.ident()]
        while self.at("COMMA"):
            self.i += 1
            attrs.append(self.ident())
        self.expect("RBRACE")
        time = None
        if self.at("AT"):
            self.i += 1
            time = self.time_annot()
        return EventExpr(role, event, tuple(attrs), time)

    def time_annot(self):
        if self.at("LBRACK"):
            self.i += 1
            lo = self.arith()
            self.expect("COMMA")
            hi = self.arith()
            self.expect("RBRACK")
            return Interval(lo, hi)
        if self.at("IDENT", NOW):
            self._fail("time label (the name 'now' is reserved)")
        var = self.ident()
        tok = self.peek()
        if tok is not None and tok.kind in _CMP_TOKENS:
            self.i += 1
            return Compare(var, _CMP_TOKENS[tok.kind], self.arith())
        return Label(var)

    def arith(self) -> Arith:
        if self.at("INT"):
            return Arith(None, int(self.expect("INT").value))
        base = self.ident()
        if self.at("PLUS") or self.at("MINUS"):
            sign = 1 if self.tokens[self.i].kind == "PLUS" else -1
            self.i += 1
            return Arith(base, sign * int(self.expect("INT").value))
        return Arith(base, 0)


def parse_compact(tokens: list[Token], name: str = "compact") -> CompactSpec:
    return _Parser(tokens).compact(name)


def parse_text(source: str, name: str = "compact") -> CompactSpec:
    return parse_compact(tokenize(source), name)


# -- resolution -------------------------------------------------------------


@dataclass(frozen=True)
class Link:
    norm: str
    state: str
    substitution: tuple[tuple[str, str], ...]

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.substitution)


def _link(ref: NormRef, spec: CompactSpec, where: str) -> Link:
    target = spec.norm(ref.norm)
    if target is None:
        raise errors.UnresolvedNormRef(f"{where}: no norm named {ref.norm!r}")
    if ref.state not in available_states(target):
        raise errors.UnresolvedNormRef(f"{where}: norm {ref.norm} has no state {ref.state!r}")
    if len(ref.params) != len(target.params):
        raise errors.ArityMismatch(
            f"{where}: {ref.norm} takes {len(target.params)} parameter(s), got {len(ref.params)}"
        )
    pairs = [(target.expectee, ref.roles[0]), (target.expector, ref.roles[1])]
    pairs += list(zip(target.params, ref.params))
    return Link(ref.norm, ref.state, tuple(pairs))


def _check_scope(f: Formula, bound: frozenset, where: str, spec: CompactSpec, links: dict) -> frozenset:
    if isinstance(f, EventExpr):
        missing = annot_uses(f.time) - bound
        if missing:
            raise errors.UnboundTimeVariable(
                f"{where}: time variable(s) {', '.join(sorted(missing))} used before being labelled"
            )
        v = annot_binds(f.time)
        return bound | {v} if v else bound
    if isinstance(f, And):
        return _check_scope(f.right, _check_scope(f.left, bound, where, spec, links), where, spec, links)
    if isinstance(f, Or):
        left = _check_scope(f.left, bound, where, spec, links)
        right = _check_scope(f.right, bound, where, spec, links)
        return left & right
    if isinstance(f, Except):
        after = _check_scope(f.body, bound, where, spec, links)
        _check_scope(f.exception, after, where, spec, links)
        return after
    if isinstance(f, NormRef):
        links[f] = _link(f, spec, where)
        return bound
    return bound


def resolve(spec: CompactSpec) -> CompactSpec:
    """Link norm references and check time-variable scoping.

    Returns ``spec`` with ``spec.links`` populated, mapping every
    :class:`NormRef` node to its target and role/parameter substitution.
    """
    links: dict[NormRef, Link] = {}
    for norm in spec.norms:
        for state, formula in norm.states:
            inherited = frozenset()
            for s in inherited_states(norm.kind, state):
                g = norm.state(s)
                if g is not None:
                    inherited |= positive_labels(g)
            _check_scope(formula, inherited, f"{norm.name}.{state}", spec, links)
    spec.links = links
    return spec


def load_compact(path) -> CompactSpec:
    path = Path(path)
    spec = parse_text(path.read_text(encoding="utf-8"), name=path.stem)
    return resolve(spec)
