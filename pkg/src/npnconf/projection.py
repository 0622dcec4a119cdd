"""Projections of traces, logs, and markings onto model components.

A trace projects onto an agent as its sequence of agent activities, and onto
the system net as a sequence of (activity, payload) pairs. Payloads keep
agent names and data values apart so the colored replay of the system
component can type-check them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .colored import ColoredMarking, ColoredNet, Domain
from .events import (AgentEvent, EventLog, SyncEvent, SystemEvent, Trace,
                     canonical_dumps)
from .multiset import Multiset
from .nested import NestedNet, NpMarking, RosterError

SN_LOG_SCHEMA = "maslog-sn/1"


@dataclass(frozen=True)
class ProjectedSystemEvent:
    """One system-net step as seen in a projected trace: the activity plus
    the agents it moved and the data it used. Agent names are a set, stored
    sorted."""

    activity: str
    agents: Tuple[str, ...]
    data: Multiset

    def __init__(self, activity: str, agents: Iterable[str] = (),
                 data: Multiset | Iterable = ()):
        object.__setattr__(self, "activity", activity)
        object.__setattr__(self, "agents", tuple(sorted(set(agents))))
        object.__setattr__(self, "data",
                           data if isinstance(data, Multiset) else Multiset(data))


SystemTrace = Tuple[ProjectedSystemEvent, ...]
AgentTrace = Tuple[str, ...]


@dataclass(frozen=True)
class ComponentLogs:
    """The projected logs: one for the system net, one per roster agent."""

    system_log: Multiset  # of SystemTrace
    agent_logs: Mapping[str, Multiset]  # agent -> Multiset of AgentTrace

    def __init__(self, system_log: Multiset, agent_logs: Mapping[str, Multiset]):
        object.__setattr__(self, "system_log", system_log)
        object.__setattr__(self, "agent_logs", dict(agent_logs))


def project_trace_agent(trace: Trace, agent: str) -> AgentTrace:
    """Agent events of ``agent`` keep their activity; sync events where the
    agent participates contribute the agent's own activity; everything else
    (including system events that merely move the agent) is dropped."""
    out: List[str] = []
    for e in trace:
        if isinstance(e, AgentEvent) and e.agent == agent:
            out.append(e.activity)
        elif isinstance(e, SyncEvent):
            for a_i, r_i in e.participants:
                if r_i == agent:
                    out.append(a_i)
                    break
    return tuple(out)


def project_trace_system(trace: Trace) -> SystemTrace:
    """System events map to (activity, involved + data); sync events map to
    (activity, participant names + data); agent events are dropped."""
    out: List[ProjectedSystemEvent] = []
    for e in trace:
        if isinstance(e, SystemEvent):
            out.append(ProjectedSystemEvent(e.activity, e.involved, e.data))
        elif isinstance(e, SyncEvent):
            out.append(ProjectedSystemEvent(
                e.activity, (r for _, r in e.participants), e.data))
    return tuple(out)


def _project_log_unchecked(log: EventLog, roster: Iterable[str]) -> ComponentLogs:
    roster = sorted(roster)
    system_counts: Dict[SystemTrace, int] = {}
    agent_counts: Dict[str, Dict[AgentTrace, int]] = {r: {} for r in roster}
    for trace, freq in log.items():
        st = project_trace_system(trace)
        system_counts[st] = system_counts.get(st, 0) + freq
        for r in roster:
            at = project_trace_agent(trace, r)
            agent_counts[r][at] = agent_counts[r].get(at, 0) + freq
    return ComponentLogs(
        Multiset.from_counts(system_counts),
        {r: Multiset.from_counts(c) for r, c in agent_counts.items()})


def project_log(log: EventLog, roster: Iterable[str]) -> ComponentLogs:
    """Project every trace onto the system net and every roster agent,
    preserving multiplicities; empty projected traces are kept so the total
    weight of each component log equals the source log's weight."""
    roster = set(roster)
    unknown = sorted(log.agent_names() - roster)
    if unknown:
        raise RosterError(f"log names agents outside the roster: {', '.join(unknown)}")
    return _project_log_unchecked(log, roster)


def project_marking_system(m: NpMarking) -> ColoredMarking:
    """Replace every net token by its agent name; atom places unchanged."""
    assignment: Dict[str, Multiset] = {}
    for place, tokens in m.net_tokens:
        assignment[place] = Multiset(tk.agent for tk in tokens)
    for place, values in m.atoms:
        assignment[place] = values
    return ColoredMarking(assignment)


def project_marking_agent(m: NpMarking, agent: str) -> Multiset:
    """The inner marking of the agent's net token."""
    located = m.locate(agent)
    if located is None:
        raise RosterError(f"agent {agent!r} has no net token in this marking")
    return located[1].inner


# ----------------------------------------------------------------------
# the system-net component


@dataclass(frozen=True, eq=False)
class SystemComponent:
    """The system net as a colored net over agent names, with sync labels
    dropped; ``agent_vars`` records which variables carry agent names."""

    net: ColoredNet
    agent_vars: FrozenSet[str]


def _agent_domain_name(element_names: Iterable[str]) -> str:
    return "agents(%s)" % ",".join(sorted(element_names))


def project_system_net(np: NestedNet) -> SystemComponent:
    """Build the system-net component: net places are retyped over the agent
    names of their element classes, net variables likewise, and the initial
    and final markings are projected."""
    domains: Dict[str, Domain] = dict(np.domains)
    by_class: Dict[str, Set[str]] = {}
    for r, cls in np.agents.items():
        by_class.setdefault(cls, set()).add(r)

    def ensure_agent_domain(element_names: FrozenSet[str] | Set[str]) -> str:
        name = _agent_domain_name(element_names)
        if name not in domains:
            values: Set[str] = set()
            for e in element_names:
                values.update(by_class.get(e, ()))
            domains[name] = Domain(name, values)
        return name

    place_type: Dict[str, str] = {}
    for p, classes in np.net_place_type.items():
        place_type[p] = ensure_agent_domain(classes)
    place_type.update(np.atom_place_type)

    var_type: Dict[str, str] = {}
    agent_vars: Set[str] = set()
    for v, vt in np.var_type.items():
        if vt in np.elements:
            var_type[v] = ensure_agent_domain({vt})
            agent_vars.add(v)
        else:
            var_type[v] = vt

    net = ColoredNet(
        net=np.system,
        domains=domains,
        place_type=place_type,
        arc_expr=np.arc_expr,
        var_type=var_type,
        activity_label=np.system_activity,
        initial_marking=project_marking_system(np.initial_marking),
        final_markings={project_marking_system(mf) for mf in np.final_markings},
    )
    return SystemComponent(net, frozenset(agent_vars))


# ----------------------------------------------------------------------
# component log serialization (the ``project`` command's file formats)


def agent_component_log(agent: str, traces: Multiset) -> EventLog:
    """Represent a projected agent log as a standard log of agent events."""
    counts = {Trace(AgentEvent(a, agent) for a in seq): freq
              for seq, freq in traces.items()}
    return EventLog(Multiset.from_counts(counts))


def serialize_system_log(traces: Multiset, model: Optional[str] = None) -> bytes:
    """Serialize a projected system log (schema variant of the log format)."""
    doc = {
        "schema": SN_LOG_SCHEMA,
        "model": model,
        "traces": [
            {"frequency": freq,
             "events": [
                 {"activity": e.activity,
                  "agents": list(e.agents),
                  "data": [[dom, value] for dom, value in e.data]}
                 for e in seq]}
            for seq, freq in traces.items()
        ],
    }
    return canonical_dumps(doc)


def parse_system_log(data: bytes | str) -> Multiset:
    """Inverse of serialize_system_log."""
    import json

    from .events import LogParseError, _require

    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LogParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _require(isinstance(doc, dict) and doc.get("schema") == SN_LOG_SCHEMA,
             "document", f"expected schema {SN_LOG_SCHEMA!r}")
    counts: Dict[SystemTrace, int] = {}
    for ti, entry in enumerate(doc.get("traces", [])):
        where = f"trace {ti}"
        _require(isinstance(entry, dict), where, "trace entry must be an object")
        freq = entry.get("frequency", 1)
        _require(isinstance(freq, int) and freq >= 1, where, "bad frequency")
        events = []
        for raw in entry.get("events", []):
            _require(isinstance(raw, dict) and isinstance(raw.get("activity"), str),
                     where, "bad projected event")
            events.append(ProjectedSystemEvent(
                raw["activity"], raw.get("agents", []),
                Multiset(tuple(d) for d in raw.get("data", []))))
        seq = tuple(events)
        counts[seq] = counts.get(seq, 0) + freq
    return Multiset.from_counts(counts)
