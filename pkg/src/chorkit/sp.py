"""Stateful process networks: the local language compilation targets.

Each participant runs a behaviour; a network maps process names to behaviours
and steps when two processes perform matching send/receive or select/offer
actions, or when one process resolves a local conditional or unfolds a call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .cc import (
    BExpr,
    BudgetExceeded,
    CommEvent,
    Expr,
    Label,
    Pid,
    ProcName,
    SelectEvent,
    State,
    TauEvent,
    TransitionLabel,
    VarName,
    eval_bexpr,
    eval_expr,
    label_key,
)


@dataclass(frozen=True)
class End:
    """The terminated behaviour."""


@dataclass(frozen=True)
class Send:
    """Evaluate expr locally and send the result to dst."""

    dst: Pid
    expr: Expr
    cont: "Behaviour"


@dataclass(frozen=True)
class Recv:
    """Receive a value from src into var."""

    src: Pid
    var: VarName
    cont: "Behaviour"


@dataclass(frozen=True)
class Choose:
    """Send the selection label to dst."""

    dst: Pid
    label: Label
    cont: "Behaviour"


@dataclass(frozen=True)
class Offer:
    """Wait for a selection label from src; either option may be missing."""

    src: Pid
    left: Optional["Behaviour"]
    right: Optional["Behaviour"]


@dataclass(frozen=True)
class Cond:
    """Branch on a locally evaluated guard."""

    guard: BExpr
    then_b: "Behaviour"
    else_b: "Behaviour"


@dataclass(frozen=True)
class Call:
    """Invocation of a named behaviour procedure."""

    name: ProcName


Behaviour = Union[End, Send, Recv, Choose, Offer, Cond, Call]


class Network:
    """Finite map from process names to behaviours; absent entries are End.

    Canonical: terminated entries are never stored, so extensional equality
    coincides with equality of the underlying maps.
    """

    __slots__ = ("_map",)

    def __init__(self, mapping: Mapping[Pid, Behaviour] | None = None):
        self._map = {p: b for p, b in (mapping or {}).items() if b != End()}

    def get(self, p: Pid) -> Behaviour:
        return self._map.get(p, End())

    def set(self, p: Pid, b: Behaviour) -> "Network":
        out = dict(self._map)
        if b == End():
            out.pop(p, None)
        else:
            out[p] = b
        fresh = Network.__new__(Network)
        fresh._map = out
        return fresh

    def support(self) -> tuple[Pid, ...]:
        """Processes with a non-terminated behaviour, in canonical order."""
        return tuple(sorted(self._map))

    def items(self) -> tuple[tuple[Pid, Behaviour], ...]:
        return tuple(sorted(self._map.items()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Network) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        return f"Network({dict(sorted(self._map.items()))!r})"


def singleton(p: Pid, b: Behaviour) -> Network:
    return Network({p: b})


def compose(n1: Network, n2: Network) -> Network:
    """Left-biased composition: n1's entry wins wherever it is not End."""
    merged = dict(n2._map)
    merged.update(n1._map)
    return Network(merged)


def remove(n: Network, p: Pid) -> Network:
    return n.set(p, End())


@dataclass
class SPProgram:
    """A finite set of behaviour procedures plus the running network."""

    procedures: dict[ProcName, Behaviour]
    net: Network


def _self_addressed(p: Pid, b: Behaviour) -> bool:
    if isinstance(b, Send):
        return b.dst == p or _self_addressed(p, b.cont)
    if isinstance(b, Recv):
        return b.src == p or _self_addressed(p, b.cont)
    if isinstance(b, Choose):
        return b.dst == p or _self_addressed(p, b.cont)
    if isinstance(b, Offer):
        if b.src == p:
            return True
        for opt in (b.left, b.right):
            if opt is not None and _self_addressed(p, opt):
                return True
        return False
    if isinstance(b, Cond):
        return _self_addressed(p, b.then_b) or _self_addressed(p, b.else_b)
    return False


def network_wf(n: Network) -> bool:
    """No behaviour may address a communication to its own process."""
    return not any(_self_addressed(p, b) for p, b in n.items())


class IllFormedNetworkError(ValueError):
    """An operation was handed a network that fails well-formedness."""


class UndefinedProcedureError(RuntimeError):
    """A running behaviour invoked a procedure that has no definition."""


Transition = tuple[TransitionLabel, Network, State]
TraceEntry = tuple[tuple[TransitionLabel, ...], Network, State]


def _transition_key(tr: Transition) -> tuple:
    return (label_key(tr[0]), repr(tr[1].items()), tr[2].items())


def _enabled(
    defs: Mapping[ProcName, Behaviour], n: Network, s: State
) -> tuple[Transition, ...]:
    out: list[Transition] = []
    for p in n.support():
        b = n.get(p)
        if isinstance(b, Send):
            partner = n.get(b.dst)
            if isinstance(partner, Recv) and partner.src == p:
                v = eval_expr(b.expr, s, p)
                n2 = n.set(p, b.cont).set(b.dst, partner.cont)
                out.append((CommEvent(p, v, b.dst), n2, s.set(b.dst, partner.var, v)))
        elif isinstance(b, Choose):
            partner = n.get(b.dst)
            if isinstance(partner, Offer) and partner.src == p:
                option = partner.left if b.label is Label.LEFT else partner.right
                if option is not None:
                    n2 = n.set(p, b.cont).set(b.dst, option)
                    out.append((SelectEvent(p, b.dst, b.label), n2, s))
        elif isinstance(b, Cond):
            chosen = b.then_b if eval_bexpr(b.guard, s, p) else b.else_b
            out.append((TauEvent(p), n.set(p, chosen), s))
        elif isinstance(b, Call):
            if b.name not in defs:
                raise UndefinedProcedureError(f"procedure {b.name} is not defined")
            out.append((TauEvent(p), n.set(p, defs[b.name]), s))
    return tuple(sorted(set(out), key=_transition_key))


def enabled(
    defs: Mapping[ProcName, Behaviour], n: Network, s: State
) -> tuple[Transition, ...]:
    """All single-step transitions of (defs, n, s), canonically ordered."""
    if not network_wf(n):
        raise IllFormedNetworkError("network contains a self-addressed action")
    return _enabled(defs, n, s)


def traces(
    defs: Mapping[ProcName, Behaviour],
    n: Network,
    s: State,
    depth: int,
    max_states: int | None = None,
) -> list[TraceEntry]:
    """All (trace, configuration) pairs reachable in at most `depth` steps."""
    if not network_wf(n):
        raise IllFormedNetworkError("network contains a self-addressed action")
    memo: dict[tuple[Network, State], tuple[Transition, ...]] = {}

    def step(n0: Network, s0: State) -> tuple[Transition, ...]:
        key = (n0, s0)
        if key not in memo:
            memo[key] = _enabled(defs, n0, s0)
        return memo[key]

    start: TraceEntry = ((), n, s)
    out = [start]
    seen = {start}
    frontier = [start]
    for _ in range(depth):
        nxt: list[TraceEntry] = []
        for tl, n0, s0 in frontier:
            for t, n1, s1 in step(n0, s0):
                entry = (tl + (t,), n1, s1)
                if entry not in seen:
                    seen.add(entry)
                    if max_states is not None and len(seen) > max_states:
                        raise BudgetExceeded(f"more than {max_states} trace entries")
                    out.append(entry)
                    nxt.append(entry)
        if not nxt:
            break
        frontier = nxt
    return out
