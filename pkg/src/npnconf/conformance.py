"""Perfect-fitness checking, monolithic and compositional.

Monolithic checking replays each trace directly on the nested net, matching
events to steps positionally. Compositional checking verifies syntactic
correctness, then replays each projected trace on its component (the system
net over agent names, and each agent's element net). The two verdicts are
equivalent for well-labeled models; ``check_both`` runs both and reports any
per-trace disagreement as an internal-consistency failure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import (Dict, Hashable, Iterable, Iterator, List, Mapping,
                    Optional, Set, Tuple)

from .colored import Binding, _assign_values
from .events import (AgentEvent, Event, EventLog, SyncEvent, SyntacticReport,
                     SystemEvent, Trace, log_syntactically_correct)
from .multiset import Multiset
from .nested import (ElementStep, NestedNet, NotEnabledError, NpMarking, Step,
                     SyncStep, SystemStep, apply_step, _system_binding_enables)
from .nets import ReplayResult, SearchLimitExceeded, WorkflowNet, is_run_wf
from .projection import (AgentTrace, ProjectedSystemEvent,
                         SystemComponent, SystemTrace, project_system_net,
                         project_trace_agent, project_trace_system)
from .colored import replay_colored

MONOLITHIC_COMPONENT = "model"
SYSTEM_COMPONENT = "SN"


@dataclass(frozen=True)
class ReplayLimits:
    """Search limits for the fitness oracles.

    ``max_states`` bounds visited (marking, position) states per trace;
    exceeding it yields an inconclusive verdict, never a misfit. When
    ``deterministic`` is set, exploration follows the canonical order so
    failure positions are reproducible.
    """

    max_states: int = 1_000_000
    deterministic: bool = True

    def __post_init__(self):
        if self.max_states <= 0:
            raise ValueError("max_states must be positive")


DEFAULT_LIMITS = ReplayLimits()


@dataclass(frozen=True)
class TraceVerdict:
    """Per-trace, per-component outcome.

    For conclusive verdicts, ``fits`` holds iff ``failure_position`` is
    absent; the position is the longest replayable prefix. A witness (the
    replayed step or firing sequence) is present only when the trace fits.
    """

    fits: bool
    failure_position: Optional[int] = None
    witness: Optional[Tuple] = None
    inconclusive: bool = False


def _verdict(result: ReplayResult) -> TraceVerdict:
    if result.ok:
        return TraceVerdict(True, witness=result.witness)
    return TraceVerdict(False, failure_position=result.prefix)


INCONCLUSIVE = TraceVerdict(False, inconclusive=True)


@dataclass(frozen=True)
class TraceResult:
    """All component verdicts for one distinct trace of the log."""

    trace: Trace
    frequency: int
    components: Mapping[str, TraceVerdict]
    syntactic_ok: Optional[bool]  # None when the mode does not check syntax

    def __init__(self, trace, frequency, components, syntactic_ok):
        object.__setattr__(self, "trace", trace)
        object.__setattr__(self, "frequency", frequency)
        object.__setattr__(self, "components", dict(components))
        object.__setattr__(self, "syntactic_ok", syntactic_ok)

    @property
    def fits(self) -> bool:
        return (self.syntactic_ok is not False
                and all(v.fits for v in self.components.values()))

    @property
    def inconclusive(self) -> bool:
        # a conclusive failure anywhere outweighs an inconclusive search
        if self.syntactic_ok is False:
            return False
        if any(not v.fits and not v.inconclusive for v in self.components.values()):
            return False
        return any(v.inconclusive for v in self.components.values())


@dataclass(frozen=True)
class ConformanceReport:
    """Aggregate verdicts: per-trace results, the fitting-weight fraction,
    and the overall perfect-fitness boolean."""

    mode: str
    results: Tuple[TraceResult, ...]
    syntactic: Optional[SyntacticReport]
    aggregate: float
    overall: bool
    inconclusive: bool
    discrepancies: Tuple[int, ...] = ()

    @property
    def weight(self) -> int:
        return sum(r.frequency for r in self.results)


def _assemble(mode: str, results: List[TraceResult],
              syntactic: Optional[SyntacticReport],
              discrepancies: Tuple[int, ...] = ()) -> ConformanceReport:
    total = sum(r.frequency for r in results)
    fitting = sum(r.frequency for r in results if r.fits)
    aggregate = (fitting / total) if total else 1.0
    overall = all(r.fits for r in results)
    inconclusive = any(r.inconclusive for r in results)
    return ConformanceReport(mode, tuple(results), syntactic, aggregate,
                             overall, inconclusive, discrepancies)


# ----------------------------------------------------------------------
# component fitness


def fits_agent(agent_log: Multiset, w: WorkflowNet,
               limits: ReplayLimits = DEFAULT_LIMITS) -> Dict[AgentTrace, TraceVerdict]:
    """Replay each distinct projected agent trace on the element net
    (synchronization labels play no role in autonomous replay)."""
    verdicts: Dict[AgentTrace, TraceVerdict] = {}
    for seq, _ in agent_log.items():
        verdicts[seq] = _agent_trace_verdict(w, seq, limits)
    return verdicts


def _agent_trace_verdict(w: WorkflowNet, seq: AgentTrace,
                         limits: ReplayLimits) -> TraceVerdict:
    try:
        return _verdict(is_run_wf(w, seq, max_states=limits.max_states))
    except SearchLimitExceeded:
        return INCONCLUSIVE


def fits_system(system_log: Multiset, component: SystemComponent,
                limits: ReplayLimits = DEFAULT_LIMITS) -> Dict[SystemTrace, TraceVerdict]:
    """Replay each distinct projected system trace on the system component;
    each event's payload must match the step binding's values, agents against
    agent-typed variables and data against data-typed variables."""
    verdicts: Dict[SystemTrace, TraceVerdict] = {}
    for seq, _ in system_log.items():
        verdicts[seq] = _system_trace_verdict(component, seq, limits)
    return verdicts


def _system_trace_verdict(component: SystemComponent, seq: SystemTrace,
                          limits: ReplayLimits) -> TraceVerdict:
    cn = component.net

    def candidates(t: str, event: ProjectedSystemEvent) -> Iterator[Binding]:
        variables = cn.transition_variables(t)
        agent_vars = [v for v in variables if v in component.agent_vars]
        data_vars = [v for v in variables if v not in component.agent_vars]

        def agent_fits(var: str, name: Hashable) -> bool:
            return name in cn.domains[cn.var_type[var]].values

        def data_fits(var: str, item: Hashable) -> bool:
            dom, value = item
            return dom == cn.var_type[var] and value in cn.domains[dom].values

        seen: Set[Binding] = set()
        for ab in _assign_values(agent_vars, Multiset(event.agents), agent_fits):
            for db in _assign_values(data_vars, event.data, data_fits):
                b = Binding(tuple(ab.items)
                            + tuple((v, item[1]) for v, item in db.items))
                if b not in seen:
                    seen.add(b)
                    yield b

    steps = [(e.activity, e) for e in seq]
    try:
        return _verdict(replay_colored(cn, steps, candidates,
                                       max_states=limits.max_states))
    except SearchLimitExceeded:
        return INCONCLUSIVE


# ----------------------------------------------------------------------
# monolithic replay


def _event_bindings(np: NestedNet, m: NpMarking, t: str,
                    agent_names: Iterable[str], data: Multiset) -> Iterator[Binding]:
    """Bindings of ``t`` pinned by an event: net variables take the current
    net tokens of the named agents, data variables take the tagged values."""
    net_vars = list(np.net_variables(t))
    data_vars = list(np.data_variables(t))
    names = sorted(agent_names)
    if len(net_vars) != len(names) or len(data_vars) != data.total():
        return
    tokens = {}
    for r in names:
        located = m.locate(r)
        if located is None:
            return
        tokens[r] = located[1]

    def name_fits(var: str, r: str) -> bool:
        return np.agents.get(r) == np.var_type[var]

    def data_fits(var: str, item: Hashable) -> bool:
        dom, value = item
        declared = np.var_type[var]
        return dom == declared and value in np.domains[declared].values

    for nb in _assign_values(net_vars, Multiset(names), name_fits):
        for db in _assign_values(data_vars, data, data_fits):
            yield Binding(tuple((v, tokens[r]) for v, r in nb.items)
                          + tuple((v, item[1]) for v, item in db.items))


def _step_candidates(np: NestedNet, m: NpMarking, event: Event) -> List[Step]:
    """Enabled steps that event could correspond to, in deterministic order."""
    steps: List[Step] = []
    if isinstance(event, AgentEvent):
        located = m.locate(event.agent)
        if located is None or event.agent not in np.agents:
            return steps
        _, token = located
        w = np.elements.get(np.agents[event.agent])
        if w is None:
            return steps
        for ti in sorted(w.net.transitions):
            if (w.activity_label.get(ti) == event.activity
                    and w.sync_label.get(ti) is None
                    and all(token.inner.count(p) >= 1 for p in w.net.preset(ti))):
                steps.append(ElementStep(event.agent, ti))
        return steps

    if isinstance(event, SystemEvent):
        for t in sorted(np.system.transitions):
            if np.system_activity.get(t) != event.activity or np.system_sync.get(t) is not None:
                continue
            for b in _event_bindings(np, m, t, event.involved, event.data):
                if _system_binding_enables(np, m, t, b):
                    steps.append(SystemStep(t, b))
        return steps

    if isinstance(event, SyncEvent):
        participant_names = [r for _, r in event.participants]
        for t in sorted(np.system.transitions):
            label = np.system_sync.get(t)
            if label is None or np.system_activity.get(t) != event.activity:
                continue
            for b in _event_bindings(np, m, t, participant_names, event.data):
                if not _system_binding_enables(np, m, t, b):
                    continue
                per_agent: Optional[List[List[Tuple[str, str]]]] = []
                for a_i, r_i in sorted(event.participants, key=lambda p: p[1]):
                    w = np.elements[np.agents[r_i]]
                    token = m.locate(r_i)[1]
                    cands = [ti for ti in sorted(w.net.transitions)
                             if w.activity_label.get(ti) == a_i
                             and w.sync_label.get(ti) == label
                             and all(token.inner.count(p) >= 1
                                     for p in w.net.preset(ti))]
                    if not cands:
                        per_agent = None
                        break
                    per_agent.append([(r_i, ti) for ti in cands])
                if per_agent is None:
                    continue
                for combo in itertools.product(*per_agent):
                    steps.append(SyncStep(t, b, combo))
        return steps

    raise TypeError(f"unknown event type: {event!r}")


def _monolithic_trace_verdict(np: NestedNet, trace: Trace,
                              limits: ReplayLimits) -> TraceVerdict:
    """Backtracking search for a step sequence from the initial marking to a
    final marking where step i matches event i."""
    events = trace.events
    n = len(events)
    failed: Set[Tuple[NpMarking, int]] = set()
    visited = 0
    best = 0

    def dfs(m: NpMarking, pos: int) -> Optional[Tuple[Step, ...]]:
        nonlocal visited, best
        best = max(best, pos)
        if pos == n:
            return () if m in np.final_markings else None
        key = (m, pos)
        if key in failed:
            return None
        visited += 1
        if visited > limits.max_states:
            raise SearchLimitExceeded(
                f"monolithic replay visited more than {limits.max_states} states")
        for step in _step_candidates(np, m, events[pos]):
            try:
                m2 = apply_step(np, m, step)
            except NotEnabledError:
                continue
            rest = dfs(m2, pos + 1)
            if rest is not None:
                return (step,) + rest
        failed.add(key)
        return None

    try:
        witness = dfs(np.initial_marking, 0)
    except SearchLimitExceeded:
        return INCONCLUSIVE
    if witness is None:
        return TraceVerdict(False, failure_position=best)
    return TraceVerdict(True, witness=witness)


# ----------------------------------------------------------------------
# the three checkers


def check_monolithic(log: EventLog, np: NestedNet,
                     limits: ReplayLimits = DEFAULT_LIMITS) -> ConformanceReport:
    """Direct replay of every trace on the nested net."""
    results = []
    cache: Dict[Trace, TraceVerdict] = {}
    for trace, freq in log.items():
        if trace not in cache:
            cache[trace] = _monolithic_trace_verdict(np, trace, limits)
        results.append(TraceResult(trace, freq,
                                   {MONOLITHIC_COMPONENT: cache[trace]}, None))
    return _assemble("monolithic", results, None)


def check_compositional(log: EventLog, np: NestedNet,
                        limits: ReplayLimits = DEFAULT_LIMITS) -> ConformanceReport:
    """Syntactic correctness plus per-component fitness of every projection.

    Each trace's verdict aggregates the system component and every roster
    agent; failures are attributed to the component that rejected them.
    Events naming agents outside the roster surface as syntactic failures.
    """
    syntactic = log_syntactically_correct(log, np)
    failing = syntactic.failing_traces()
    component = project_system_net(np)
    roster = sorted(np.agents)

    sys_cache: Dict[SystemTrace, TraceVerdict] = {}
    agent_cache: Dict[Tuple[str, AgentTrace], TraceVerdict] = {}
    results = []
    for ti, (trace, freq) in enumerate(log.items()):
        verdicts: Dict[str, TraceVerdict] = {}
        st = project_trace_system(trace)
        if st not in sys_cache:
            sys_cache[st] = _system_trace_verdict(component, st, limits)
        verdicts[SYSTEM_COMPONENT] = sys_cache[st]
        for r in roster:
            at = project_trace_agent(trace, r)
            key = (r, at)
            if key not in agent_cache:
                agent_cache[key] = _agent_trace_verdict(
                    np.elements[np.agents[r]], at, limits)
            verdicts[r] = agent_cache[key]
        results.append(TraceResult(trace, freq, verdicts, ti not in failing))
    return _assemble("compositional", results, syntactic)


def check_both(log: EventLog, np: NestedNet,
               limits: ReplayLimits = DEFAULT_LIMITS) -> ConformanceReport:
    """Run both checkers and compare per-trace verdicts; any disagreement on
    conclusive traces is reported as an internal-consistency failure (it
    would falsify the implementation, not the underlying equivalence)."""
    mono = check_monolithic(log, np, limits)
    comp = check_compositional(log, np, limits)
    results = []
    discrepancies = []
    for ti, (mr, cr) in enumerate(zip(mono.results, comp.results)):
        components = dict(mr.components)
        components.update(cr.components)
        merged = TraceResult(mr.trace, mr.frequency, components, cr.syntactic_ok)
        results.append(merged)
        if not mr.inconclusive and not cr.inconclusive and mr.fits != cr.fits:
            discrepancies.append(ti)
    return _assemble("both", results, comp.syntactic, tuple(discrepancies))
