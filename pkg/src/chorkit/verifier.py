"""Bounded state-space checkers for the amendment and projection correspondences.

Every check explores configurations up to an explicit depth and returns a
Report: the property held within the bound, a replayable counterexample was
found, or the exploration budget ran out before either.  Counterexamples carry
an actual firing sequence so they can be fed back through the semantics.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

from . import amendment, cc, projection, sp

HOLDS = "holds-within-bound"
COUNTEREXAMPLE = "counterexample"
EXHAUSTED = "resource-exhausted"

DEFAULT_DEPTH = 6
DEFAULT_SEARCH_BOUND = 6
DEFAULT_STATE_BUDGET = 10**6


@dataclass
class SearchStats:
    states_explored: int = 0
    max_depth: int = 0


@dataclass
class Witness:
    """A replayable finding: the trace and the configuration it reaches."""

    trace: tuple[cc.TransitionLabel, ...]
    term: object  # Choreography or Network
    state: cc.State
    note: str = ""


@dataclass
class Report:
    check: str
    verdict: str
    witness: Optional[Witness]
    stats: SearchStats

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def is_counterexample(self) -> bool:
        return self.verdict == COUNTEREXAMPLE

    def to_dict(self) -> dict:
        """Machine-readable form: one record per check."""
        witness = None
        if self.witness is not None:
            witness = {
                "trace": [cc.label_text(t) for t in self.witness.trace],
                "term": repr(self.witness.term),
                "state": cc.state_text(self.witness.state),
                "note": self.witness.note,
            }
        return {
            "check": self.check,
            "verdict": self.verdict,
            "witness": witness,
            "stats": {
                "states_explored": self.stats.states_explored,
                "max_depth": self.stats.max_depth,
            },
        }

    def text(self) -> str:
        lines = [f"check: {self.check}", f"verdict: {self.verdict}"]
        if self.witness is not None:
            shown = ", ".join(cc.label_text(t) for t in self.witness.trace) or "(empty)"
            lines.append(f"witness trace: {shown}")
            lines.append(f"witness state: {cc.state_text(self.witness.state)}")
            if self.witness.note:
                lines.append(f"note: {self.witness.note}")
        lines.append(
            f"stats: {self.stats.states_explored} states explored, "
            f"max depth {self.stats.max_depth}"
        )
        return "\n".join(lines)


@dataclass
class FnTable:
    """A finite, desk-scale function table: input tuples to result or None."""

    arity: int
    entries: dict[tuple[int, ...], Optional[int]]

    def __post_init__(self) -> None:
        for key in self.entries:
            if len(key) != self.arity:
                raise ValueError(f"entry {key} does not match arity {self.arity}")


class _Budget:
    __slots__ = ("limit", "used")

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise cc.BudgetExceeded(f"more than {self.limit} configurations explored")


class _Space:
    """Memoized one-step relation over hashable configurations."""

    def __init__(self, step: Callable[[Hashable], tuple]):
        self._step = step
        self._memo: dict = {}

    def enabled(self, cfg: Hashable) -> tuple:
        if cfg not in self._memo:
            self._memo[cfg] = self._step(cfg)
        return self._memo[cfg]


def _chor_space(defs: Mapping[cc.ProcName, cc.Procedure]) -> _Space:
    def step(cfg):
        c, s = cfg
        return tuple((t, (c2, s2)) for t, c2, s2 in cc._enabled(defs, c, s))

    return _Space(step)


def _net_space(defs: Mapping[cc.ProcName, sp.Behaviour]) -> _Space:
    def step(cfg):
        n, s = cfg
        return tuple((t, (n2, s2)) for t, n2, s2 in sp._enabled(defs, n, s))

    return _Space(step)


MultisetKey = tuple  # labels sorted by cc.label_key


def _mkey_add(mk: MultisetKey, t: cc.TransitionLabel) -> MultisetKey:
    return tuple(sorted(mk + (t,), key=cc.label_key))


def _mkey(labels: Iterable[cc.TransitionLabel]) -> MultisetKey:
    return tuple(sorted(labels, key=cc.label_key))


def _tau_count(mk: MultisetKey) -> int:
    return sum(1 for t in mk if isinstance(t, cc.TauEvent))


def _nonsel(mk: MultisetKey) -> MultisetKey:
    return tuple(t for t in mk if not cc.is_selection(t))


def _expansion_mkeys(base: MultisetKey, expanded: MultisetKey) -> bool:
    missing = Counter(base) - Counter(expanded)
    if missing:
        return False
    extra = Counter(expanded) - Counter(base)
    return all(cc.is_selection(t) for t in extra)


def _reach(
    space: _Space, start: Hashable, depth: int, budget: _Budget
) -> dict[Hashable, dict[MultisetKey, tuple]]:
    """Bounded reachability keyed by the multiset of fired labels.

    Trace orderings that fire the same labels and land in the same
    configuration collapse into one entry; the stored representative is an
    actual firing sequence, so counterexamples stay replayable.
    """
    out: dict[Hashable, dict[MultisetKey, tuple]] = {start: {(): ()}}
    frontier = [(start, (), ())]
    budget.charge()
    for _ in range(depth):
        nxt = []
        for cfg, mk, rep in frontier:
            for t, cfg2 in space.enabled(cfg):
                mk2 = _mkey_add(mk, t)
                bucket = out.setdefault(cfg2, {})
                if mk2 not in bucket:
                    budget.charge()
                    rep2 = rep + (t,)
                    bucket[mk2] = rep2
                    nxt.append((cfg2, mk2, rep2))
        if not nxt:
            break
        frontier = nxt
    return out


def _cfg_key(cfg) -> tuple:
    term, state = cfg
    return (repr(term), state.items())


def _deletes_to(
    base: Sequence[cc.TransitionLabel], expanded: Sequence[cc.TransitionLabel]
) -> bool:
    """True if deleting selection labels (only) from `expanded` yields `base`,
    preserving order."""
    reachable = {0}
    for t in expanded:
        nxt = set()
        for i in reachable:
            if i < len(base) and base[i] == t:
                nxt.add(i + 1)
            if cc.is_selection(t):
                nxt.add(i)
        reachable = nxt
        if not reachable:
            return False
    return len(base) in reachable


def _require_wf(prog: cc.ChorProgram) -> None:
    problems = cc.wf_violations(prog)
    if problems:
        raise cc.IllFormedError("; ".join(problems))


def _max_insertions(
    defs: Mapping[cc.ProcName, cc.Procedure],
    pids: Sequence[cc.Pid],
    c: cc.Choreography,
) -> int:
    if isinstance(c, cc.Prefix):
        return _max_insertions(defs, pids, c.cont)
    if isinstance(c, cc.Cond):
        then_a = amendment.amend(defs, pids, c.then_c)
        else_a = amendment.amend(defs, pids, c.else_c)
        here = len(amendment.needs_selection(defs, c.pid, c.guard, pids, then_a, else_a))
        return max(
            here,
            _max_insertions(defs, pids, c.then_c),
            _max_insertions(defs, pids, c.else_c),
        )
    if isinstance(c, cc.RunningCall):
        return _max_insertions(defs, pids, c.body)
    return 0


def _program_max_insertions(prog: cc.ChorProgram, pids: Sequence[cc.Pid]) -> int:
    """Most selections amendment inserts at any single conditional.

    Every inserted selection fires after its conditional's internal action, so
    a trace with k internal actions carries at most k times this many extra
    selections; searches on the amended side are bounded accordingly.
    """
    out = _max_insertions(prog.procedures, pids, prog.main)
    for proc in prog.procedures.values():
        out = max(out, _max_insertions(prog.procedures, pids, proc.body))
    return out


@dataclass
class _AmendedView:
    pids: list[cc.Pid]
    defs: Mapping[cc.ProcName, cc.Procedure]
    amended_defs: dict[cc.ProcName, cc.Procedure]
    amended_main: cc.Choreography
    max_insertions: int
    _cache: dict = field(default_factory=dict)

    def amend_term(self, c: cc.Choreography) -> cc.Choreography:
        if c not in self._cache:
            self._cache[c] = amendment.amend(self.defs, self.pids, c)
        return self._cache[c]


def _amended_view(prog: cc.ChorProgram) -> _AmendedView:
    pids = amendment.amend_pids(prog)
    return _AmendedView(
        pids=pids,
        defs=prog.procedures,
        amended_defs=amendment.amend_defs(prog.procedures, pids),
        amended_main=amendment.amend(prog.procedures, pids, prog.main),
        max_insertions=_program_max_insertions(prog, pids),
    )


def check_naive_correspondence(
    prog: cc.ChorProgram,
    state: cc.State | None = None,
    depth: int = DEFAULT_DEPTH,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Check the too-strong claim that amendment preserves reachability exactly.

    For every configuration the program reaches, the amended program must
    reach the amendment of that very configuration by a trace with the same
    non-selection events.  Amendment introduces ordering constraints that can
    make this impossible, so a counterexample is the expected outcome on
    choreographies where a conditional can be resolved out of order.
    """
    state = state if state is not None else cc.State()
    _require_wf(prog)
    view = _amended_view(prog)
    budget = _Budget(state_budget)
    stats = SearchStats(max_depth=depth)
    try:
        orig = _reach(_chor_space(prog.procedures), (prog.main, state), depth, budget)
        depth_a = depth + depth * (1 + view.max_insertions)
        stats.max_depth = max(stats.max_depth, depth_a)
        amended = _reach(
            _chor_space(view.amended_defs), (view.amended_main, state), depth_a, budget
        )
        for cfg in sorted(orig, key=_cfg_key):
            c1, s1 = cfg
            target = (view.amend_term(c1), s1)
            candidates = amended.get(target, {})
            for mk, rep in sorted(orig[cfg].items(), key=repr):
                want = _nonsel(mk)
                if not any(_nonsel(amk) == want for amk in candidates):
                    stats.states_explored = budget.used
                    return Report(
                        "naive-correspondence",
                        COUNTEREXAMPLE,
                        Witness(
                            rep,
                            c1,
                            s1,
                            "the amended program cannot reach the amendment of "
                            "this configuration with the same non-selection events",
                        ),
                        stats,
                    )
    except cc.BudgetExceeded:
        stats.states_explored = budget.used
        return Report("naive-correspondence", EXHAUSTED, None, stats)
    stats.states_explored = budget.used
    return Report("naive-correspondence", HOLDS, None, stats)


def check_amend_complete(
    prog: cc.ChorProgram,
    state: cc.State | None = None,
    depth: int = DEFAULT_DEPTH,
    search_bound: int = DEFAULT_SEARCH_BOUND,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Every run of the program is simulated by its amendment, up to extra
    selections and reordering.

    For each trace tl reaching (C', s'), some extension tl' to (C'', s'')
    exists such that the amended program reaches (amend C'', s'') by a trace
    that is a permutation of tl ++ tl' plus extra selections.
    """
    state = state if state is not None else cc.State()
    _require_wf(prog)
    view = _amended_view(prog)
    budget = _Budget(state_budget)
    stats = SearchStats()
    try:
        orig_space = _chor_space(prog.procedures)
        amended_space = _chor_space(view.amended_defs)
        orig = _reach(orig_space, (prog.main, state), depth, budget)
        total = depth + search_bound
        depth_a = total + total * view.max_insertions
        stats.max_depth = depth_a
        amended = _reach(amended_space, (view.amended_main, state), depth_a, budget)
        ext_cache: dict = {}
        for cfg in sorted(orig, key=_cfg_key):
            if cfg not in ext_cache:
                ext_cache[cfg] = _reach(orig_space, cfg, search_bound, budget)
            extensions = ext_cache[cfg]
            for mk, rep in sorted(orig[cfg].items(), key=repr):
                matched = False
                for cfg2 in sorted(extensions, key=_cfg_key):
                    c2, s2 = cfg2
                    target = (view.amend_term(c2), s2)
                    candidates = amended.get(target)
                    if not candidates:
                        continue
                    for emk in extensions[cfg2]:
                        full = _mkey(mk + emk)
                        if any(_expansion_mkeys(full, amk) for amk in candidates):
                            matched = True
                            break
                    if matched:
                        break
                if not matched:
                    stats.states_explored = budget.used
                    return Report(
                        "amend-complete",
                        COUNTEREXAMPLE,
                        Witness(
                            rep,
                            cfg[0],
                            cfg[1],
                            "no extension of this run is matched by the amended "
                            "program up to extra selections and reordering",
                        ),
                        stats,
                    )
    except cc.BudgetExceeded:
        stats.states_explored = budget.used
        return Report("amend-complete", EXHAUSTED, None, stats)
    stats.states_explored = budget.used
    return Report("amend-complete", HOLDS, None, stats)


def check_amend_sound(
    prog: cc.ChorProgram,
    state: cc.State | None = None,
    depth: int = DEFAULT_DEPTH,
    search_bound: int = DEFAULT_SEARCH_BOUND,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Every run of the amendment can be completed to mirror a run of the
    original program, up to dropping the extra selections and reordering.

    For each amended trace tl reaching (A', s1), some extension tl' reaches
    the amendment of a configuration (C'', s'') that the original program
    reaches by a trace tl'' with tl ++ tl' a selection-expansion of tl''.
    """
    state = state if state is not None else cc.State()
    _require_wf(prog)
    view = _amended_view(prog)
    budget = _Budget(state_budget)
    stats = SearchStats()
    try:
        orig_space = _chor_space(prog.procedures)
        amended_space = _chor_space(view.amended_defs)
        # The amended run of length <= depth is the premise; the extension that
        # discharges lingering selections is existential, so only it gets the
        # insertion allowance.
        e_depth = search_bound + (depth + search_bound) * view.max_insertions
        stats.max_depth = depth + e_depth
        orig = _reach(orig_space, (prog.main, state), depth + e_depth, budget)
        index: dict = {}
        for (c3, s3), buckets in orig.items():
            key = (view.amend_term(c3), s3)
            index.setdefault(key, []).extend(buckets.keys())
        a_reach = _reach(amended_space, (view.amended_main, state), depth, budget)
        ext_cache: dict = {}
        for cfg in sorted(a_reach, key=_cfg_key):
            if cfg not in ext_cache:
                ext_cache[cfg] = _reach(amended_space, cfg, e_depth, budget)
            extensions = ext_cache[cfg]
            for mk, rep in sorted(a_reach[cfg].items(), key=repr):
                matched = False
                for cfg2 in sorted(extensions, key=_cfg_key):
                    originals = index.get(cfg2)
                    if not originals:
                        continue
                    for emk in extensions[cfg2]:
                        full = _mkey(mk + emk)
                        if any(_expansion_mkeys(omk, full) for omk in originals):
                            matched = True
                            break
                    if matched:
                        break
                if not matched:
                    stats.states_explored = budget.used
                    return Report(
                        "amend-sound",
                        COUNTEREXAMPLE,
                        Witness(
                            rep,
                            cfg[0],
                            cfg[1],
                            "no extension of this amended run lands on the "
                            "amendment of a configuration the original reaches",
                        ),
                        stats,
                    )
    except cc.BudgetExceeded:
        stats.states_explored = budget.used
        return Report("amend-sound", EXHAUSTED, None, stats)
    stats.states_explored = budget.used
    return Report("amend-sound", HOLDS, None, stats)


def check_intermediate_formulation(
    prog: cc.ChorProgram,
    state: cc.State | None = None,
    depth: int = DEFAULT_DEPTH,
    search_bound: int = DEFAULT_SEARCH_BOUND,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Check the rejected strengthening where the amendment must mirror each
    first step immediately.

    For every reachable configuration and every step t it can take, the
    amendment of that configuration must take t as its very first step and
    then catch up (extensions related by selection insertion only, order
    preserved).  Fails exactly when a step commutes past a conditional in the
    original but is blocked behind the inserted selections in the amendment.
    """
    state = state if state is not None else cc.State()
    _require_wf(prog)
    view = _amended_view(prog)
    budget = _Budget(state_budget)
    stats = SearchStats(max_depth=depth)
    allowance = (search_bound + 1) * (1 + view.max_insertions)
    try:
        reached = cc.traces(prog.procedures, prog.main, state, depth, max_states=state_budget)
        budget.charge(len(reached))
        seen_cfgs = set()
        for prefix, c0, s0 in reached:
            if (c0, s0) in seen_cfgs:
                continue
            seen_cfgs.add((c0, s0))
            a0 = view.amend_term(c0)
            first_steps = cc._enabled(prog.procedures, c0, s0)
            amended_firsts = cc._enabled(view.amended_defs, a0, s0)
            for t, c1, s1 in first_steps:
                starts = [
                    (ac1, as1)
                    for at, ac1, as1 in amended_firsts
                    if at == t and as1 == s1
                ]
                witness = Witness(
                    prefix + (t,),
                    c1,
                    s1,
                    "the amendment of the reached configuration cannot take "
                    "this step first",
                )
                if not starts:
                    stats.states_explored = budget.used
                    return Report(
                        "intermediate-formulation", COUNTEREXAMPLE, witness, stats
                    )
                orig_ext = cc.traces(prog.procedures, c1, s1, search_bound)
                budget.charge(len(orig_ext))
                matched = False
                for a1, as1 in starts:
                    a_ext = cc.traces(
                        view.amended_defs, a1, as1, search_bound + allowance
                    )
                    budget.charge(len(a_ext))
                    by_cfg: dict = {}
                    for atl, ac2, as2 in a_ext:
                        by_cfg.setdefault((ac2, as2), []).append(atl)
                    for tl, c2, s2 in orig_ext:
                        target = (view.amend_term(c2), s2)
                        for atl in by_cfg.get(target, []):
                            if _deletes_to(tuple(tl), tuple(atl)):
                                matched = True
                                break
                        if matched:
                            break
                    if matched:
                        break
                if not matched:
                    witness.note = (
                        "the amendment matches this step but cannot catch up "
                        "by inserting selections in order"
                    )
                    stats.states_explored = budget.used
                    return Report(
                        "intermediate-formulation", COUNTEREXAMPLE, witness, stats
                    )
    except cc.BudgetExceeded:
        stats.states_explored = budget.used
        return Report("intermediate-formulation", EXHAUSTED, None, stats)
    stats.states_explored = budget.used
    return Report("intermediate-formulation", HOLDS, None, stats)


def check_epp_correspondence(
    prog: cc.ChorProgram,
    state: cc.State | None = None,
    depth: int = DEFAULT_DEPTH,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """The projected network produces exactly the label traces of the
    choreography, up to the bound."""
    state = state if state is not None else cc.State()
    _require_wf(prog)
    compiled = projection.epp(prog)
    stats = SearchStats(max_depth=depth)
    try:
        chor_entries = cc.traces(
            prog.procedures, prog.main, state, depth, max_states=state_budget
        )
        net_entries = sp.traces(
            compiled.procedures, compiled.net, state, depth, max_states=state_budget
        )
    except cc.BudgetExceeded:
        return Report("epp-correspondence", EXHAUSTED, None, stats)
    stats.states_explored = len(chor_entries) + len(net_entries)
    chor_traces = {tl for tl, _, _ in chor_entries}
    net_traces = {tl for tl, _, _ in net_entries}
    key = lambda tl: tuple(cc.label_key(t) for t in tl)
    only_chor = sorted(chor_traces - net_traces, key=key)
    only_net = sorted(net_traces - chor_traces, key=key)
    if only_chor:
        tl = only_chor[0]
        _, term, st = next(e for e in chor_entries if e[0] == tl)
        return Report(
            "epp-correspondence",
            COUNTEREXAMPLE,
            Witness(tl, term, st, "choreography trace missing from the projection"),
            stats,
        )
    if only_net:
        tl = only_net[0]
        _, term, st = next(e for e in net_entries if e[0] == tl)
        return Report(
            "epp-correspondence",
            COUNTEREXAMPLE,
            Witness(tl, term, st, "projection trace missing from the choreography"),
            stats,
        )
    return Report("epp-correspondence", HOLDS, None, stats)


def _terminal_analysis(space: _Space, start, bound: int, budget: _Budget):
    """Configurations reachable within `bound` steps, with a shortest trace to
    each, plus the ones that are dead (no transitions)."""
    reached = {start: ()}
    dead = []
    budget.charge()
    if not space.enabled(start):
        dead.append(start)
    frontier = [start]
    for _ in range(bound):
        nxt = []
        for cfg in frontier:
            for t, cfg2 in space.enabled(cfg):
                if cfg2 not in reached:
                    budget.charge()
                    reached[cfg2] = reached[cfg] + (t,)
                    if not space.enabled(cfg2):
                        dead.append(cfg2)
                    nxt.append(cfg2)
        if not nxt:
            break
        frontier = nxt
    return reached, dead


def _implements_verdict(
    check_name: str,
    table: FnTable,
    inputs: Sequence[cc.Pid],
    output: cc.Pid,
    bound: int,
    state_budget: int,
    space_of: Callable[[], _Space],
    start_of: Callable[[cc.State], Hashable],
    is_done: Callable[[object], bool],
) -> Report:
    if len(inputs) != table.arity:
        raise ValueError(f"{len(inputs)} input processes for arity {table.arity}")
    budget = _Budget(state_budget)
    stats = SearchStats(max_depth=bound)
    space = space_of()
    try:
        for ins in sorted(table.entries):
            expected = table.entries[ins]
            s0 = cc.State({(p, "x"): v for p, v in zip(inputs, ins)})
            reached, dead = _terminal_analysis(space, start_of(s0), bound, budget)
            for cfg in dead:
                term, s_end = cfg
                trace = reached[cfg]
                if expected is None:
                    if is_done(term):
                        stats.states_explored = budget.used
                        return Report(
                            check_name,
                            COUNTEREXAMPLE,
                            Witness(
                                trace,
                                term,
                                s_end,
                                f"inputs {ins}: terminated although the function "
                                "is undefined here",
                            ),
                            stats,
                        )
                    continue
                if not is_done(term):
                    stats.states_explored = budget.used
                    return Report(
                        check_name,
                        COUNTEREXAMPLE,
                        Witness(trace, term, s_end, f"inputs {ins}: stuck before completion"),
                        stats,
                    )
                got = s_end.get(output, "x")
                if got != expected:
                    stats.states_explored = budget.used
                    return Report(
                        check_name,
                        COUNTEREXAMPLE,
                        Witness(
                            trace,
                            term,
                            s_end,
                            f"inputs {ins}: {output}.x = {got}, expected {expected}",
                        ),
                        stats,
                    )
    except cc.BudgetExceeded:
        stats.states_explored = budget.used
        return Report(check_name, EXHAUSTED, None, stats)
    stats.states_explored = budget.used
    return Report(check_name, HOLDS, None, stats)


def check_implements(
    prog: cc.ChorProgram,
    table: FnTable,
    inputs: Sequence[cc.Pid],
    output: cc.Pid,
    bound: int = 50,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Does the program implement the table as a function?

    Inputs are placed in each input process's variable x; where the table is
    defined every run must end with the output process holding the result in
    x, and where it is undefined no run may complete within the bound.
    """
    _require_wf(prog)
    return _implements_verdict(
        "implements",
        table,
        inputs,
        output,
        bound,
        state_budget,
        lambda: _chor_space(prog.procedures),
        lambda s0: (prog.main, s0),
        lambda term: term == cc.End(),
    )


def check_implements_network(
    program: sp.SPProgram,
    table: FnTable,
    inputs: Sequence[cc.Pid],
    output: cc.Pid,
    bound: int = 50,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Report:
    """Network analogue of check_implements: done means every process ended."""
    if not sp.network_wf(program.net):
        raise sp.IllFormedNetworkError("network contains a self-addressed action")
    return _implements_verdict(
        "implements-network",
        table,
        inputs,
        output,
        bound,
        state_budget,
        lambda: _net_space(program.procedures),
        lambda s0: (program.net, s0),
        lambda term: not term.support(),
    )
