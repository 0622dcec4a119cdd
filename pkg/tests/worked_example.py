"""The worked-example log, built in code: five distinct traces with
frequencies 4, 1, 1, 1, 2 over agents r1 and r2 (nine traces in total).
Mirrors tests/fixtures/assistant_log.json."""

from npnconf.events import AgentEvent, EventLog, SyncEvent, SystemEvent, Trace
from npnconf.multiset import Multiset


def trace1():
    return Trace([
        AgentEvent("d", "r1"), AgentEvent("d", "r2"),
        AgentEvent("h", "r1"), AgentEvent("h", "r2"),
        SyncEvent("a", [("f", "r1")]), SyncEvent("a", [("f", "r2")]),
        SystemEvent("b", ["r2"]), SystemEvent("b", ["r1"]),
    ])


def trace2():
    return Trace([
        AgentEvent("d", "r2"), AgentEvent("h", "r2"),
        AgentEvent("d", "r1"), AgentEvent("h", "r1"),
        SyncEvent("a", [("f", "r2")]), SyncEvent("a", [("f", "r1")]),
        SystemEvent("b", ["r1"]), SystemEvent("b", ["r2"]),
    ])


def trace3():
    return Trace([
        AgentEvent("d", "r2"), AgentEvent("e", "r2"),
        AgentEvent("d", "r1"), AgentEvent("h", "r1"),
        SyncEvent("c", [("g", "r1")]), SyncEvent("c", [("g", "r2")]),
    ])


def trace4():
    return Trace([
        AgentEvent("d", "r1"), AgentEvent("d", "r2"),
        AgentEvent("h", "r2"), AgentEvent("e", "r1"),
        SyncEvent("c", [("g", "r2")]), SyncEvent("c", [("g", "r1")]),
    ])


def trace5():
    return Trace([
        AgentEvent("d", "r1"), AgentEvent("d", "r2"),
        AgentEvent("e", "r1"), AgentEvent("e", "r2"),
        SyncEvent("a", [("f", "r1")]), SyncEvent("c", [("g", "r2")]),
        SystemEvent("b", ["r1"]),
    ])


def worked_example_log():
    counts = {trace1(): 4, trace2(): 1, trace3(): 1, trace4(): 1, trace5(): 2}
    return EventLog(Multiset.from_counts(counts))
