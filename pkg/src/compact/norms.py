"""Norm state derivation, cross-norm inlining and formula evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import CyclicNormReference, UnresolvedNormRef
from .parser import available_states
from .syntax import (
    FALSE,
    TRUE,
    And,
    Arith,
    CompactSpec,
    Compare,
    Const,
    EventExpr,
    Except,
    Formula,
    Interval,
    Label,
    Not,
    NormRef,
    NormSpec,
    NowAfter,
    Or,
    conj,
    time_variables,
)

_COMPARE = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


@dataclass
class NormStateTable:
    """Every state of one norm, declared and derived, as closed formulas.

    ``components`` keeps the state formulas exactly as declared (after
    inlining) so back ends can reproduce alternative but equivalent forms.
    """

    norm: str
    kind: str
    roles: tuple[str, str]
    params: tuple[str, ...]
    states: dict[str, Formula]
    components: dict[str, Formula]
    deadlines: dict[str, Arith] = field(default_factory=dict)

    def state_names(self) -> list[str]:
        return list(self.states)


def deadline(f: Formula) -> Optional[Arith]:
    """Upper time bound carried by the first bounded event in ``f``, if any."""
    if isinstance(f, EventExpr):
        t = f.time
        if isinstance(t, Interval):
            return t.hi
        if isinstance(t, Compare) and t.op == "<=":
            return t.rhs
        if isinstance(t, Compare) and t.op == "<":
            return Arith(t.rhs.base, t.rhs.offset - 1)
        return None
    if isinstance(f, (And, Or)):
        return deadline(f.left) or deadline(f.right)
    if isinstance(f, Except):
        return deadline(f.body)
    return None


def derive_states(norm: NormSpec) -> NormStateTable:
    declared = dict(norm.states)
    c = declared["created"]
    d = declared.get("detached")
    s = declared.get("discharged")
    states: dict[str, Formula] = {"created": c}
    deadlines: dict[str, Arith] = {}

    if norm.kind == "commitment":
        if d is not None:
            states["detached"] = conj(c, d)
        if s is not None:
            states["discharged"] = conj(c, s)
        if d is not None and s is not None:
            states["violated"] = conj(c, d, Not(s))
        if d is not None:
            limit = deadline(d)
            if limit is None:
                states["expired"] = FALSE
            else:
                deadlines["expired"] = limit
                states["expired"] = conj(c, Not(d), NowAfter(limit))
    elif norm.kind == "authorization":
        if d is not None:
            states["detached"] = conj(c, d)
        if s is not None:
            states["discharged"] = conj(c, d or TRUE, s)
        if d is not None and s is not None:
            limit = deadline(s)
            if limit is None:
                states["violated"] = conj(c, d, Not(s))
            else:
                deadlines["violated"] = limit
                states["violated"] = conj(c, d, Not(s), NowAfter(limit))
    elif norm.kind == "prohibition":
        v = declared.get("violated")
        if v is not None:
            states["violated"] = conj(c, v)
            states["satisfied"] = conj(c, Not(v))
    else:  # pragma: no cover - parser rejects other kinds
        raise ValueError(norm.kind)

    assert list(states) == available_states(norm)
    return NormStateTable(
        norm=norm.name,
        kind=norm.kind,
        roles=norm.roles,
        params=norm.params,
        states=states,
        components=declared,
        deadlines=deadlines,
    )


# -- inlining ---------------------------------------------------------------


def rename(f: Formula, names: dict[str, str], times: dict[str, str]) -> Formula:
    """Substitute role/attribute names and time variables throughout ``f``."""
    if isinstance(f, EventExpr):
        t = f.time
        if isinstance(t, Label):
            t = Label(times.get(t.var, t.var))
        elif isinstance(t, Compare):
            t = Compare(times.get(t.var, t.var), t.op, t.rhs.rename(times))
        elif isinstance(t, Interval):
            t = Interval(t.lo.rename(times), t.hi.rename(times))
        return EventExpr(
            names.get(f.role, f.role),
            f.event,
            tuple(names.get(a, a) for a in f.attrs),
            t,
        )
    if isinstance(f, And):
        return And(rename(f.left, names, times), rename(f.right, names, times))
    if isinstance(f, Or):
        return Or(rename(f.left, names, times), rename(f.right, names, times))
    if isinstance(f, Except):
        return Except(rename(f.body, names, times), rename(f.exception, names, times))
    if isinstance(f, Not):
        return Not(rename(f.operand, names, times))
    if isinstance(f, NowAfter):
        return NowAfter(f.bound.rename(times))
    if isinstance(f, NormRef):
        return NormRef(
            f.norm,
            tuple(names.get(r, r) for r in f.roles),
            tuple(names.get(p, p) for p in f.params),
            f.state,
        )
    return f


def _fresh(name: str, used: set[str]) -> str:
    if name not in used:
        return name
    k = 1
    while f"{name}_{k}" in used:
        k += 1
    return f"{name}_{k}"


class _Inliner:
    def __init__(self, spec: CompactSpec):
        self.spec = spec
        self.done: dict[tuple[str, str], Formula] = {}
        self.stack: list[tuple[str, str]] = []

    def state(self, norm_name: str, state: str) -> Formula:
        key = (norm_name, state)
        if key in self.done:
            return self.done[key]
        if key in self.stack:
            cycle = " -> ".join(f"{n}:{s}" for n, s in self.stack[self.stack.index(key):] + [key])
            raise CyclicNormReference(f"cyclic norm reference: {cycle}")
        norm = self.spec.norm(norm_name)
        if norm is None or state not in available_states(norm):
            raise UnresolvedNormRef(f"no state {norm_name}:{state}")
        self.stack.append(key)
        try:
            raw = derive_states(norm).states[state]
            out = self.formula(raw, set(time_variables(raw)))
        finally:
            self.stack.pop()
        self.done[key] = out
        return out

    def formula(self, f: Formula, used: set[str]) -> Formula:
        if isinstance(f, NormRef):
            target = self.spec.norm(f.norm)
            if target is None:
                raise UnresolvedNormRef(f"no norm named {f.norm!r}")
            body = self.state(f.norm, f.state)
            names = {target.expectee: f.roles[0], target.expector: f.roles[1]}
            names.update(zip(target.params, f.params))
            times = {}
            for v in sorted(time_variables(body)):
                times[v] = _fresh(v, used)
                used.add(times[v])
            return rename(body, names, times)
        if isinstance(f, And):
            return And(self.formula(f.left, used), self.formula(f.right, used))
        if isinstance(f, Or):
            return Or(self.formula(f.left, used), self.formula(f.right, used))
        if isinstance(f, Except):
            return Except(self.formula(f.body, used), self.formula(f.exception, used))
        if isinstance(f, Not):
            return Not(self.formula(f.operand, used))
        return f


def inline_refs(table: NormStateTable, spec: CompactSpec) -> NormStateTable:
    """Replace every norm-state reference in ``table`` by the referenced formula."""
    inl = _Inliner(spec)

    def go(f: Formula, key: tuple[str, str]) -> Formula:
        inl.stack.append(key)
        try:
            return inl.formula(f, set(time_variables(f)))
        finally:
            inl.stack.pop()

    return NormStateTable(
        norm=table.norm,
        kind=table.kind,
        roles=table.roles,
        params=table.params,
        states={s: go(f, (table.norm, s)) for s, f in table.states.items()},
        components={s: go(f, (table.norm, s)) for s, f in table.components.items()},
        deadlines=dict(table.deadlines),
    )


def build_tables(spec: CompactSpec) -> dict[str, NormStateTable]:
    return {n.name: inline_refs(derive_states(n), spec) for n in spec.norms}


# -- evaluation -------------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    times: dict = field(default_factory=dict)
    roles: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"times": dict(self.times), "roles": dict(self.roles), "params": dict(self.params)}


def default_now(doc) -> int:
    return max((e.time for e in doc.events.values()), default=0)


def _match_event(f: EventExpr, doc, env: Binding, now: int) -> Optional[Binding]:
    ev = doc.events.get(f.event)
    if ev is None:
        return None
    agent = doc.attrs.get(f.role)
    if agent is None or ev.by != agent:
        return None
    for a in f.attrs:
        if a not in ev.attrs:
            return None
    times = env.times
    t = f.time
    if t is not None:
        if isinstance(t, Interval):
            lo = t.lo.value(times, now)
            hi = t.hi.value(times, now)
            if lo is None or hi is None or not (lo <= ev.time <= hi):
                return None
        else:
            prior = times.get(t.var)
            if prior is not None and prior != ev.time:
                return None
            times = {**times, t.var: ev.time}
            if isinstance(t, Compare):
                rhs = t.rhs.value(times, now)
                if rhs is None or not _COMPARE[t.op](ev.time, rhs):
                    return None
    roles = env.roles if env.roles.get(f.role) == agent else {**env.roles, f.role: agent}
    params = {**env.params, **{a: ev.attrs[a] for a in f.attrs}}
    return Binding(times, roles, params)


def solutions(f: Formula, doc, env: Binding, now: int) -> Iterator[Binding]:
    """Enumerate every binding extending ``env`` under which ``f`` holds."""
    if isinstance(f, EventExpr):
        b = _match_event(f, doc, env, now)
        if b is not None:
            yield b
    elif isinstance(f, And):
        for b in solutions(f.left, doc, env, now):
            yield from solutions(f.right, doc, b, now)
    elif isinstance(f, Or):
        yield from solutions(f.left, doc, env, now)
        yield from solutions(f.right, doc, env, now)
    elif isinstance(f, Except):
        for b in solutions(f.body, doc, env, now):
            if next(solutions(f.exception, doc, b, now), None) is None:
                yield b
    elif isinstance(f, Not):
        if next(solutions(f.operand, doc, env, now), None) is None:
            yield env
    elif isinstance(f, Const):
        if f.value:
            yield env
    elif isinstance(f, NowAfter):
        bound = f.bound.value(env.times, now)
        if bound is not None and now > bound:
            yield env
    elif isinstance(f, NormRef):
        raise TypeError(f"norm reference {f.norm}:{f.state} must be inlined before evaluation")
    else:
        raise TypeError(f"not a formula: {f!r}")


def evaluate(formula: Formula, doc, now: Optional[int] = None) -> tuple[bool, Binding]:
    """Decide ``formula`` on a history document.

    ``now`` defaults to the latest event time in ``doc``. On success the
    returned binding holds the first satisfying assignment found.
    """
    if now is None:
        now = default_now(doc)
    b = next(solutions(formula, doc, Binding(), now), None)
    if b is None:
        return False, Binding()
    return True, b
