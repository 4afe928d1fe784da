"""Compiling choreographies to networks: merging, projection, and EPP.

Projection extracts the local behaviour one process must run to play its part
in a choreography.  For a conditional it evaluates, a process gets a local
conditional; for one it does not, the two branch projections are merged, which
succeeds only when the process can act without knowing the outcome (identical
behaviour, or branch offers distinguished by incoming selection labels).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from . import cc, sp


class _Undefined(Exception):
    """Internal: merging or projection failed."""


def _merge(b1: sp.Behaviour, b2: sp.Behaviour) -> sp.Behaviour:
    if type(b1) is not type(b2):
        raise _Undefined
    if isinstance(b1, sp.End):
        return b1
    if isinstance(b1, sp.Send):
        if (b1.dst, b1.expr) != (b2.dst, b2.expr):
            raise _Undefined
        return sp.Send(b1.dst, b1.expr, _merge(b1.cont, b2.cont))
    if isinstance(b1, sp.Recv):
        if (b1.src, b1.var) != (b2.src, b2.var):
            raise _Undefined
        return sp.Recv(b1.src, b1.var, _merge(b1.cont, b2.cont))
    if isinstance(b1, sp.Choose):
        if (b1.dst, b1.label) != (b2.dst, b2.label):
            raise _Undefined
        return sp.Choose(b1.dst, b1.label, _merge(b1.cont, b2.cont))
    if isinstance(b1, sp.Cond):
        if b1.guard != b2.guard:
            raise _Undefined
        return sp.Cond(b1.guard, _merge(b1.then_b, b2.then_b), _merge(b1.else_b, b2.else_b))
    if isinstance(b1, sp.Call):
        if b1.name != b2.name:
            raise _Undefined
        return b1
    if isinstance(b1, sp.Offer):
        if b1.src != b2.src:
            raise _Undefined
        return sp.Offer(
            b1.src,
            _merge_option(b1.left, b2.left),
            _merge_option(b1.right, b2.right),
        )
    raise TypeError(f"not a behaviour: {b1!r}")


def _merge_option(
    o1: Optional[sp.Behaviour], o2: Optional[sp.Behaviour]
) -> Optional[sp.Behaviour]:
    if o1 is None:
        return o2
    if o2 is None:
        return o1
    return _merge(o1, o2)


def merge(b1: sp.Behaviour, b2: sp.Behaviour) -> Optional[sp.Behaviour]:
    """Combine two candidate behaviours for one process, None when impossible.

    Branch offers on the same partner combine slot-wise; every other
    constructor must match exactly and merging recurses into continuations.
    """
    try:
        return _merge(b1, b2)
    except _Undefined:
        return None


def _bproj(
    defs: Mapping[cc.ProcName, cc.Procedure], c: cc.Choreography, r: cc.Pid
) -> sp.Behaviour:
    if isinstance(c, cc.Prefix):
        eta = c.action
        cont = _bproj(defs, c.cont, r)
        if isinstance(eta, cc.Com):
            if r == eta.sender:
                return sp.Send(eta.receiver, eta.expr, cont)
            if r == eta.receiver:
                return sp.Recv(eta.sender, eta.var, cont)
            return cont
        if r == eta.sender:
            return sp.Choose(eta.receiver, eta.label, cont)
        if r == eta.receiver:
            if eta.label is cc.Label.LEFT:
                return sp.Offer(eta.sender, cont, None)
            return sp.Offer(eta.sender, None, cont)
        return cont
    if isinstance(c, cc.Cond):
        if r == c.pid:
            return sp.Cond(c.guard, _bproj(defs, c.then_c, r), _bproj(defs, c.else_c, r))
        merged = merge(_bproj(defs, c.then_c, r), _bproj(defs, c.else_c, r))
        if merged is None:
            raise _Undefined(c)
        return merged
    if isinstance(c, cc.Call):
        proc = defs.get(c.name)
        if proc is not None and r in proc.pids:
            return sp.Call(c.name)
        return sp.End()
    if isinstance(c, cc.RunningCall):
        if r in c.pending:
            return sp.Call(c.name)
        return _bproj(defs, c.body, r)
    return sp.End()


def bproj(
    defs: Mapping[cc.ProcName, cc.Procedure], c: cc.Choreography, r: cc.Pid
) -> Optional[sp.Behaviour]:
    """Project a choreography onto one process; None when unprojectable."""
    try:
        return _bproj(defs, c, r)
    except _Undefined:
        return None


def blame(
    defs: Mapping[cc.ProcName, cc.Procedure], c: cc.Choreography, r: cc.Pid
) -> Optional[cc.Choreography]:
    """The innermost conditional whose branch merge fails when projecting on r."""
    try:
        _bproj(defs, c, r)
        return None
    except _Undefined as exc:
        return exc.args[0]


def projectable(
    defs: Mapping[cc.ProcName, cc.Procedure], c: cc.Choreography, r: cc.Pid
) -> bool:
    return bproj(defs, c, r) is not None


def projectable_all(
    defs: Mapping[cc.ProcName, cc.Procedure],
    c: cc.Choreography,
    pids: Iterable[cc.Pid],
) -> bool:
    return all(projectable(defs, c, p) for p in pids)


@dataclass(frozen=True)
class ProjectionFailure:
    """One (term, process) pair at which projection is undefined."""

    process: cc.Pid
    term: cc.Choreography
    site: str  # "main" or the procedure name


class UnprojectableError(ValueError):
    """EPP is undefined; carries every failing (term, process) pair."""

    def __init__(self, failures: list[ProjectionFailure]):
        self.failures = failures
        parts = [f"({f.site}, {f.process})" for f in failures]
        super().__init__("cannot project at " + ", ".join(parts))


def instance_name(name: cc.ProcName, p: cc.Pid) -> cc.ProcName:
    """Behaviour-procedure name for one participant of a choreographic procedure."""
    return f"{name}@{p}"


def _with_instances(b: sp.Behaviour, p: cc.Pid) -> sp.Behaviour:
    if isinstance(b, sp.Send):
        return sp.Send(b.dst, b.expr, _with_instances(b.cont, p))
    if isinstance(b, sp.Recv):
        return sp.Recv(b.src, b.var, _with_instances(b.cont, p))
    if isinstance(b, sp.Choose):
        return sp.Choose(b.dst, b.label, _with_instances(b.cont, p))
    if isinstance(b, sp.Offer):
        left = None if b.left is None else _with_instances(b.left, p)
        right = None if b.right is None else _with_instances(b.right, p)
        return sp.Offer(b.src, left, right)
    if isinstance(b, sp.Cond):
        return sp.Cond(b.guard, _with_instances(b.then_b, p), _with_instances(b.else_b, p))
    if isinstance(b, sp.Call):
        return sp.Call(instance_name(b.name, p))
    return b


def project_failures(prog: cc.ChorProgram) -> list[ProjectionFailure]:
    """Every (term, process) pair at which EPP of the program is undefined."""
    failures: list[ProjectionFailure] = []
    for p in sorted(cc.process_names(prog)):
        term = blame(prog.procedures, prog.main, p)
        if term is not None:
            failures.append(ProjectionFailure(p, term, "main"))
    for name in sorted(prog.procedures):
        proc = prog.procedures[name]
        for p in proc.pids:
            term = blame(prog.procedures, proc.body, p)
            if term is not None:
                failures.append(ProjectionFailure(p, term, name))
    return failures


def projectable_program(prog: cc.ChorProgram) -> bool:
    return not project_failures(prog)


def epp(prog: cc.ChorProgram) -> sp.SPProgram:
    """Endpoint projection of a whole program.

    The network maps each used process to its main projection; each
    choreographic procedure becomes one behaviour procedure per participant,
    and projected calls reference the participant's own instance.

    Raises IllFormedError on ill-formed programs and UnprojectableError (with
    the full failure report) when any required projection is undefined.
    """
    problems = cc.wf_violations(prog)
    if problems:
        raise cc.IllFormedError("; ".join(problems))
    failures = project_failures(prog)
    if failures:
        raise UnprojectableError(failures)
    net: dict[cc.Pid, sp.Behaviour] = {}
    for p in sorted(cc.process_names(prog)):
        body = _bproj(prog.procedures, prog.main, p)
        net[p] = _with_instances(body, p)
    procedures: dict[cc.ProcName, sp.Behaviour] = {}
    for name in sorted(prog.procedures):
        proc = prog.procedures[name]
        for p in proc.pids:
            body = _bproj(prog.procedures, proc.body, p)
            procedures[instance_name(name, p)] = _with_instances(body, p)
    return sp.SPProgram(procedures, sp.Network(net))
