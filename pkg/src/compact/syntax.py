"""Abstract syntax for compact specifications and normalized norm formulas.

All nodes are frozen dataclasses so formulas can be shared between norm
tables, hashed, and compared structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

NORM_KINDS = ("commitment", "prohibition", "authorization")
KEYWORDS = frozenset(NORM_KINDS + ("and", "or", "except"))
COMPARE_OPS = ("<", ">", "<=", ">=")
NOW = "now"


@dataclass(frozen=True)
class Arith:
    """A time term: ``base + offset`` or an integer literal when ``base`` is None."""

    base: Optional[str]
    offset: int = 0

    def variables(self) -> set[str]:
        if self.base is None or self.base == NOW:
            return set()
        return {self.base}

    def value(self, times: dict, now: int) -> Optional[int]:
        if self.base is None:
            return self.offset
        if self.base == NOW:
            return now + self.offset
        t = times.get(self.base)
        return None if t is None else t + self.offset

    def rename(self, mapping: dict[str, str]) -> "Arith":
        if self.base is None or self.base not in mapping:
            return self
        return Arith(mapping[self.base], self.offset)


@dataclass(frozen=True)
class Label:
    var: str


@dataclass(frozen=True)
class Compare:
    var: str
    op: str
    rhs: Arith


@dataclass(frozen=True)
class Interval:
    lo: Arith
    hi: Arith


TimeAnnot = Union[Label, Compare, Interval]


def annot_binds(annot: Optional[TimeAnnot]) -> Optional[str]:
    if isinstance(annot, (Label, Compare)):
        return annot.var
    return None


def annot_uses(annot: Optional[TimeAnnot]) -> set[str]:
    if isinstance(annot, Compare):
        return annot.rhs.variables()
    if isinstance(annot, Interval):
        return annot.lo.variables() | annot.hi.variables()
    return set()


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class EventExpr:
    role: str
    event: str
    attrs: tuple[str, ...]
    time: Optional[TimeAnnot] = None


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Except:
    body: "Formula"
    exception: "Formula"


@dataclass(frozen=True)
class NormRef:
    norm: str
    roles: tuple[str, str]
    params: tuple[str, ...]
    state: str


# The nodes below never come out of the parser; norm derivation introduces them.


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class NowAfter:
    """Holds when the evaluation clock is strictly past ``bound``."""

    bound: Arith


Formula = Union[EventExpr, And, Or, Except, NormRef, Not, Const, NowAfter]

TRUE = Const(True)
FALSE = Const(False)


def conj(*parts: Formula) -> Formula:
    """Left-nested conjunction, dropping constant-true parts."""
    parts = tuple(p for p in parts if p != TRUE)
    if not parts:
        return TRUE
    if FALSE in parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, (And, Or)):
        yield from walk(f.left)
        yield from walk(f.right)
    elif isinstance(f, Except):
        yield from walk(f.body)
        yield from walk(f.exception)
    elif isinstance(f, Not):
        yield from walk(f.operand)


def events(f: Formula) -> Iterator[EventExpr]:
    return (n for n in walk(f) if isinstance(n, EventExpr))


def uses_now(f: Formula) -> bool:
    for n in walk(f):
        if isinstance(n, NowAfter):
            return True
        if isinstance(n, EventExpr):
            t = n.time
            if isinstance(t, Compare) and t.rhs.base == NOW:
                return True
            if isinstance(t, Interval) and NOW in (t.lo.base, t.hi.base):
                return True
    return False


def positive_labels(f: Formula) -> set[str]:
    """Time variables bound outside any negated context."""
    if isinstance(f, EventExpr):
        v = annot_binds(f.time)
        return {v} if v else set()
    if isinstance(f, (And, Or)):
        return positive_labels(f.left) | positive_labels(f.right)
    if isinstance(f, Except):
        return positive_labels(f.body)
    return set()


def time_variables(f: Formula) -> set[str]:
    out: set[str] = set()
    for n in walk(f):
        if isinstance(n, EventExpr):
            v = annot_binds(n.time)
            if v:
                out.add(v)
            out |= annot_uses(n.time)
        elif isinstance(n, NowAfter):
            out |= n.bound.variables()
    return out


# -- specs ------------------------------------------------------------------


@dataclass(frozen=True)
class Position:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass
class NormSpec:
    kind: str
    name: str
    expectee: str
    expector: str
    params: tuple[str, ...]
    states: list[tuple[str, Formula]]
    position: Optional[Position] = field(default=None, compare=False)

    @property
    def roles(self) -> tuple[str, str]:
        return (self.expectee, self.expector)

    def state(self, name: str) -> Optional[Formula]:
        for s, f in self.states:
            if s == name:
                return f
        return None

    def state_names(self) -> list[str]:
        return [s for s, _ in self.states]


@dataclass
class CompactSpec:
    norms: list[NormSpec]
    name: str = "compact"
    links: dict = field(default_factory=dict, compare=False, repr=False)

    def norm(self, name: str) -> Optional[NormSpec]:
        for n in self.norms:
            if n.name == name:
                return n
        return None


# -- pretty printing --------------------------------------------------------

_PREC = {Or: 1, And: 2, Except: 3}


def format_arith(a: Arith) -> str:
    if a.base is None:
        return str(a.offset)
    if a.offset > 0:
        return f"{a.base}+{a.offset}"
    if a.offset < 0:
        return f"{a.base}-{-a.offset}"
    return a.base


def format_annot(t: TimeAnnot) -> str:
    if isinstance(t, Label):
        return t.var
    if isinstance(t, Compare):
        return f"{t.var} {t.op} {format_arith(t.rhs)}"
    return f"[{format_arith(t.lo)}, {format_arith(t.hi)}]"


def format_formula(f: Formula) -> str:
    if isinstance(f, EventExpr):
        text = f"{f.role}.{f.event}{{{', '.join(f.attrs)}}}"
        if f.time is not None:
            text += f" @ {format_annot(f.time)}"
        return text
    if isinstance(f, NormRef):
        args = ", ".join((f"{f.roles[0]}->{f.roles[1]}",) + f.params)
        return f"{f.norm}({args}):{f.state}"
    if isinstance(f, Not):
        return f"not ({format_formula(f.operand)})"
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, NowAfter):
        return f"now > {format_arith(f.bound)}"
    prec = _PREC[type(f)]
    if isinstance(f, Except):
        left, right, word = f.body, f.exception, "except"
        # the exception operand must be an atom
        right_text = _wrap(right, 99)
    else:
        left, right, word = f.left, f.right, "and" if isinstance(f, And) else "or"
        right_text = _wrap(right, prec + 1)
    return f"{_wrap(left, prec)} {word} {right_text}"


def _wrap(f: Formula, min_prec: int) -> str:
    p = _PREC.get(type(f))
    text = format_formula(f)
    if p is not None and p < min_prec:
        return f"({text})"
    return text


def format_norm(n: NormSpec) -> str:
    args = ", ".join((f"{n.expectee}->{n.expector}",) + n.params)
    lines = [f"{n.kind} {n.name}({args}):"]
    for state, f in n.states:
        lines.append(f" {state}: {format_formula(f)}")
    return "\n".join(lines)


def pretty_print(spec: CompactSpec) -> str:
    return "\n\n".join(format_norm(n) for n in spec.norms) + "\n"
