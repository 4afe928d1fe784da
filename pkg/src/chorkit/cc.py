"""Core choreographies: the global protocol language and its transition system.

Terms describe a multi-party protocol from a bird's-eye view.  A configuration
(procedure definitions, choreography, store) evolves through labelled
transitions.  Causally independent actions may fire ahead of syntactically
earlier ones (the delay rules), which gives choreographies genuine concurrency.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

Pid = str
VarName = str
ProcName = str


class Label(Enum):
    """Selection labels; exactly two exist."""

    LEFT = "left"
    RIGHT = "right"

    def __repr__(self) -> str:
        return f"Label.{self.name}"


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Lit:
    """Natural number literal."""

    value: int


@dataclass(frozen=True)
class Ref:
    """Read of a local variable; unset variables read 0."""

    name: VarName


@dataclass(frozen=True)
class Succ:
    """Successor of a sub-expression."""

    arg: "Expr"


Expr = Union[Lit, Ref, Succ]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Eq:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Le:
    left: Expr
    right: Expr


BExpr = Union[BoolLit, Eq, Le]


# ---------------------------------------------------------------------------
# Interactions and choreographies


@dataclass(frozen=True)
class Com:
    """Value communication: sender evaluates expr, receiver stores it in var."""

    sender: Pid
    expr: Expr
    receiver: Pid
    var: VarName


@dataclass(frozen=True)
class Sel:
    """Selection: sender tells receiver which branch of a choice was taken."""

    sender: Pid
    receiver: Pid
    label: Label


Eta = Union[Com, Sel]


@dataclass(frozen=True)
class End:
    """The terminated choreography."""


@dataclass(frozen=True)
class Prefix:
    """An interaction followed by a continuation."""

    action: Eta
    cont: "Choreography"


@dataclass(frozen=True)
class Cond:
    """pid evaluates guard locally and the protocol branches on the outcome."""

    pid: Pid
    guard: BExpr
    then_c: "Choreography"
    else_c: "Choreography"


@dataclass(frozen=True)
class Call:
    """Invocation of a named procedure."""

    name: ProcName


@dataclass(frozen=True)
class RunningCall:
    """A procedure call some participants have already entered.

    Runtime-only term: `pending` lists the processes that still have to enter;
    entered processes may already run the body as long as they do not touch a
    pending one.
    """

    name: ProcName
    pending: tuple[Pid, ...]
    body: "Choreography"


Choreography = Union[Prefix, Cond, Call, RunningCall, End]


@dataclass(frozen=True)
class Procedure:
    """A procedure definition: the processes it involves and its body."""

    pids: tuple[Pid, ...]
    body: Choreography


@dataclass
class ChorProgram:
    """A finite set of procedure definitions plus the running choreography."""

    procedures: dict[ProcName, Procedure]
    main: Choreography


# ---------------------------------------------------------------------------
# Stores


class State:
    """Store mapping (process, variable) pairs to naturals; absent entries read 0.

    Kept canonical: zero entries are never stored, so extensional equality
    coincides with equality of the underlying maps.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[tuple[Pid, VarName], int] | None = None):
        self._entries = {k: v for k, v in (entries or {}).items() if v != 0}

    def get(self, p: Pid, x: VarName) -> int:
        return self._entries.get((p, x), 0)

    def set(self, p: Pid, x: VarName, v: int) -> "State":
        out = dict(self._entries)
        if v == 0:
            out.pop((p, x), None)
        else:
            out[(p, x)] = v
        fresh = State.__new__(State)
        fresh._entries = out
        return fresh

    def items(self) -> tuple[tuple[tuple[Pid, VarName], int], ...]:
        return tuple(sorted(self._entries.items()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, State) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        return f"State({dict(sorted(self._entries.items()))!r})"


def state_text(s: State) -> str:
    """Render a store in the initial-state file format, one binding per line."""
    lines = [f"{p}.{x} = {v}" for (p, x), v in s.items()]
    return "\n".join(lines) if lines else "(all zero)"


# ---------------------------------------------------------------------------
# Transition labels


@dataclass(frozen=True)
class CommEvent:
    """A value travelled over the network."""

    sender: Pid
    value: int
    receiver: Pid


@dataclass(frozen=True)
class SelectEvent:
    """A selection label travelled over the network."""

    sender: Pid
    receiver: Pid
    label: Label


@dataclass(frozen=True)
class TauEvent:
    """An internal action of a single process (guard evaluation, call entry)."""

    pid: Pid


TransitionLabel = Union[CommEvent, SelectEvent, TauEvent]


def label_processes(t: TransitionLabel) -> frozenset[Pid]:
    if isinstance(t, CommEvent):
        return frozenset((t.sender, t.receiver))
    if isinstance(t, SelectEvent):
        return frozenset((t.sender, t.receiver))
    return frozenset((t.pid,))


def label_key(t: TransitionLabel) -> tuple:
    """Stable encoding used to order labels deterministically."""
    if isinstance(t, CommEvent):
        return (0, t.sender, t.receiver, t.value)
    if isinstance(t, SelectEvent):
        return (1, t.sender, t.receiver, t.label.value)
    return (2, t.pid)


def label_text(t: TransitionLabel) -> str:
    if isinstance(t, CommEvent):
        return f"{t.sender} -> {t.receiver} : {t.value}"
    if isinstance(t, SelectEvent):
        return f"{t.sender} -> {t.receiver} [{t.label.value}]"
    return f"tau {t.pid}"


def is_selection(t: TransitionLabel) -> bool:
    return isinstance(t, SelectEvent)


# ---------------------------------------------------------------------------
# Evaluation


def eval_expr(e: Expr, s: State, p: Pid) -> int:
    """Evaluate an expression at process p.  Total and deterministic."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Ref):
        return s.get(p, e.name)
    if isinstance(e, Succ):
        return eval_expr(e.arg, s, p) + 1
    raise TypeError(f"not an expression: {e!r}")


def eval_bexpr(b: BExpr, s: State, p: Pid) -> bool:
    """Evaluate a boolean expression at process p.  Total and deterministic."""
    if isinstance(b, BoolLit):
        return b.value
    if isinstance(b, Eq):
        return eval_expr(b.left, s, p) == eval_expr(b.right, s, p)
    if isinstance(b, Le):
        return eval_expr(b.left, s, p) <= eval_expr(b.right, s, p)
    raise TypeError(f"not a boolean expression: {b!r}")


# ---------------------------------------------------------------------------
# Well-formedness


def eta_processes(eta: Eta) -> frozenset[Pid]:
    return frozenset((eta.sender, eta.receiver))


def well_formed(c: Choreography) -> bool:
    """No self-communication anywhere; pending lists free of duplicates."""
    if isinstance(c, Prefix):
        return c.action.sender != c.action.receiver and well_formed(c.cont)
    if isinstance(c, Cond):
        return well_formed(c.then_c) and well_formed(c.else_c)
    if isinstance(c, RunningCall):
        return len(set(c.pending)) == len(c.pending) and well_formed(c.body)
    return True


def chor_processes(c: Choreography) -> frozenset[Pid]:
    """Processes occurring syntactically in a choreography."""
    if isinstance(c, Prefix):
        return eta_processes(c.action) | chor_processes(c.cont)
    if isinstance(c, Cond):
        return frozenset((c.pid,)) | chor_processes(c.then_c) | chor_processes(c.else_c)
    if isinstance(c, RunningCall):
        return frozenset(c.pending) | chor_processes(c.body)
    return frozenset()


def called_procedures(c: Choreography) -> frozenset[ProcName]:
    if isinstance(c, Prefix):
        return called_procedures(c.cont)
    if isinstance(c, Cond):
        return called_procedures(c.then_c) | called_procedures(c.else_c)
    if isinstance(c, Call):
        return frozenset((c.name,))
    if isinstance(c, RunningCall):
        return frozenset((c.name,)) | called_procedures(c.body)
    return frozenset()


def wf_violations(prog: ChorProgram) -> list[str]:
    """All reasons why a program is ill-formed, empty when it is fine.

    A procedure body may only use processes declared for it, where "use"
    includes the declared processes of any procedure the body invokes; this
    makes the declaration cover everything the body can engage at runtime.
    """
    out: list[str] = []
    if not well_formed(prog.main):
        out.append("the main choreography is not well-formed")
    sites = [("main", prog.main)]
    for name in sorted(prog.procedures):
        proc = prog.procedures[name]
        sites.append((f"procedure {name}", proc.body))
        if not proc.pids:
            out.append(f"procedure {name} declares no processes")
        if len(set(proc.pids)) != len(proc.pids):
            out.append(f"procedure {name} declares a process twice")
        if not well_formed(proc.body):
            out.append(f"the body of procedure {name} is not well-formed")
    for site, term in sites:
        for called in sorted(called_procedures(term)):
            if called not in prog.procedures:
                out.append(f"{site} calls undefined procedure {called}")
    for name in sorted(prog.procedures):
        proc = prog.procedures[name]
        used = set(chor_processes(proc.body))
        for called in called_procedures(proc.body):
            target = prog.procedures.get(called)
            if target is not None:
                used |= set(target.pids)
        extra = used - set(proc.pids)
        if extra:
            out.append(
                f"the body of procedure {name} uses undeclared processes: "
                + ", ".join(sorted(extra))
            )
    return out


def program_well_formed(prog: ChorProgram) -> bool:
    return not wf_violations(prog)


def process_names(prog: ChorProgram) -> frozenset[Pid]:
    """Every process a program can involve: those of the main choreography plus
    the declared processes of all procedures."""
    out = set(chor_processes(prog.main))
    for proc in prog.procedures.values():
        out |= set(proc.pids)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Semantics


Transition = tuple[TransitionLabel, Choreography, State]
TraceEntry = tuple[tuple[TransitionLabel, ...], Choreography, State]


class IllFormedError(ValueError):
    """An operation was handed a program that fails well-formedness."""


class BudgetExceeded(RuntimeError):
    """A bounded exploration hit its configuration budget."""


def _transition_key(tr: Transition) -> tuple:
    return (label_key(tr[0]), repr(tr[1]), tr[2].items())


def _ensure_program(defs: Mapping[ProcName, Procedure], c: Choreography) -> None:
    problems = wf_violations(ChorProgram(dict(defs), c))
    if problems:
        raise IllFormedError("; ".join(problems))


def _enabled(
    defs: Mapping[ProcName, Procedure], c: Choreography, s: State
) -> tuple[Transition, ...]:
    out: list[Transition] = []
    if isinstance(c, Prefix):
        eta = c.action
        if isinstance(eta, Com):
            v = eval_expr(eta.expr, s, eta.sender)
            out.append((CommEvent(eta.sender, v, eta.receiver), c.cont, s.set(eta.receiver, eta.var, v)))
        else:
            out.append((SelectEvent(eta.sender, eta.receiver, eta.label), c.cont, s))
        blocked = eta_processes(eta)
        for t, c2, s2 in _enabled(defs, c.cont, s):
            if label_processes(t).isdisjoint(blocked):
                out.append((t, Prefix(eta, c2), s2))
    elif isinstance(c, Cond):
        branch = c.then_c if eval_bexpr(c.guard, s, c.pid) else c.else_c
        out.append((TauEvent(c.pid), branch, s))
        # Both branches must take the very same step for it to commute past
        # the conditional; the successors are recombined under the guard.
        thens = _enabled(defs, c.then_c, s)
        elses = _enabled(defs, c.else_c, s)
        for t, c1, s1 in thens:
            if c.pid in label_processes(t):
                continue
            for t2, c2, s2 in elses:
                if t2 == t and s2 == s1:
                    out.append((t, Cond(c.pid, c.guard, c1, c2), s1))
    elif isinstance(c, Call):
        proc = defs[c.name]
        for p in proc.pids:
            rest = tuple(x for x in proc.pids if x != p)
            succ = proc.body if not rest else RunningCall(c.name, rest, proc.body)
            out.append((TauEvent(p), succ, s))
    elif isinstance(c, RunningCall):
        for p in c.pending:
            rest = tuple(x for x in c.pending if x != p)
            succ = c.body if not rest else RunningCall(c.name, rest, c.body)
            out.append((TauEvent(p), succ, s))
        pending = frozenset(c.pending)
        for t, b2, s2 in _enabled(defs, c.body, s):
            if label_processes(t).isdisjoint(pending):
                out.append((t, RunningCall(c.name, c.pending, b2), s2))
    return tuple(sorted(set(out), key=_transition_key))


def enabled(
    defs: Mapping[ProcName, Procedure], c: Choreography, s: State
) -> tuple[Transition, ...]:
    """All single-step transitions of (defs, c, s), canonically ordered.

    Raises IllFormedError when (defs, c) is not a well-formed program.
    """
    _ensure_program(defs, c)
    return _enabled(defs, c, s)


def traces(
    defs: Mapping[ProcName, Procedure],
    c: Choreography,
    s: State,
    depth: int,
    max_states: int | None = None,
) -> list[TraceEntry]:
    """All (trace, configuration) pairs reachable in at most `depth` steps.

    Includes the empty trace.  Deterministic: breadth-first over canonically
    ordered transitions.
    """
    _ensure_program(defs, c)
    memo: dict[tuple[Choreography, State], tuple[Transition, ...]] = {}

    def step(c0: Choreography, s0: State) -> tuple[Transition, ...]:
        key = (c0, s0)
        if key not in memo:
            memo[key] = _enabled(defs, c0, s0)
        return memo[key]

    start: TraceEntry = ((), c, s)
    out = [start]
    seen = {start}
    frontier = [start]
    for _ in range(depth):
        nxt: list[TraceEntry] = []
        for tl, c0, s0 in frontier:
            for t, c1, s1 in step(c0, s0):
                entry = (tl + (t,), c1, s1)
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
