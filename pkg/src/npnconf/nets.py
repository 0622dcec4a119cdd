"""Place/transition nets, workflow nets, the firing rule, and run replay.

A marking is a ``Multiset`` over place ids. Nets are immutable after
construction and every operation is pure, so callers may share nets across
any number of concurrent checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Set, Tuple

from .multiset import Multiset

Marking = Multiset  # marking over place ids: place -> token count


class NetStructureError(ValueError):
    """A net, marking, or label map is structurally malformed."""


class NotEnabledError(RuntimeError):
    """A transition (or step) was fired without being enabled."""

    def __init__(self, transition: str, missing: Iterable[str] = (), detail: str = ""):
        self.transition = transition
        self.missing = tuple(missing)
        msg = f"transition {transition!r} is not enabled"
        if self.missing:
            msg += f" (missing tokens in: {', '.join(map(repr, self.missing))})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SearchLimitExceeded(RuntimeError):
    """A replay search visited more states than its configured limit."""


@dataclass(frozen=True)
class PetriNet:
    """A plain place/transition net with unweighted arcs."""

    places: FrozenSet[str]
    transitions: FrozenSet[str]
    arcs: FrozenSet[Tuple[str, str]]

    def __init__(self, places: Iterable[str], transitions: Iterable[str],
                 arcs: Iterable[Tuple[str, str]]):
        object.__setattr__(self, "places", frozenset(places))
        object.__setattr__(self, "transitions", frozenset(transitions))
        object.__setattr__(self, "arcs", frozenset(tuple(a) for a in arcs))
        overlap = self.places & self.transitions
        if overlap:
            raise NetStructureError(f"places and transitions overlap: {sorted(overlap)}")
        nodes = self.places | self.transitions
        for src, dst in self.arcs:
            if src not in nodes or dst not in nodes:
                raise NetStructureError(f"arc ({src!r}, {dst!r}) references unknown node")
            if (src in self.places) == (dst in self.places):
                raise NetStructureError(f"arc ({src!r}, {dst!r}) connects nodes of the same kind")

    @cached_property
    def _pre(self) -> Dict[str, FrozenSet[str]]:
        pre: Dict[str, Set[str]] = {n: set() for n in self.places | self.transitions}
        for src, dst in self.arcs:
            pre[dst].add(src)
        return {n: frozenset(v) for n, v in pre.items()}

    @cached_property
    def _post(self) -> Dict[str, FrozenSet[str]]:
        post: Dict[str, Set[str]] = {n: set() for n in self.places | self.transitions}
        for src, dst in self.arcs:
            post[src].add(dst)
        return {n: frozenset(v) for n, v in post.items()}

    def preset(self, node: str) -> FrozenSet[str]:
        return self._pre[node]

    def postset(self, node: str) -> FrozenSet[str]:
        return self._post[node]


def _check_marking(net: PetriNet, m: Marking) -> None:
    unknown = [p for p, _ in m.items() if p not in net.places]
    if unknown:
        raise NetStructureError(f"marking references unknown places: {unknown}")


def enabled_transitions(net: PetriNet, m: Marking) -> Set[str]:
    """Transitions whose whole preset is marked."""
    _check_marking(net, m)
    return {t for t in net.transitions
            if all(m.count(p) >= 1 for p in net.preset(t))}


def fire(net: PetriNet, m: Marking, t: str) -> Marking:
    """Fire ``t``: remove one token per preset place, add one per postset place."""
    if t not in net.transitions:
        raise NetStructureError(f"unknown transition {t!r}")
    _check_marking(net, m)
    missing = sorted(p for p in net.preset(t) if m.count(p) < 1)
    if missing:
        raise NotEnabledError(t, missing)
    return m - Multiset(net.preset(t)) + Multiset(net.postset(t))


@dataclass(frozen=True, eq=False)
class WorkflowNet:
    """A net with a source, a sink, activity labels, and optional sync labels."""

    net: PetriNet
    source: str
    sink: str
    activity_label: Mapping[str, str]
    sync_label: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "activity_label", dict(self.activity_label))
        object.__setattr__(self, "sync_label", dict(self.sync_label))
        if self.source not in self.net.places:
            raise NetStructureError(f"source {self.source!r} is not a place")
        if self.sink not in self.net.places:
            raise NetStructureError(f"sink {self.sink!r} is not a place")
        for label_map, what in ((self.activity_label, "activity"), (self.sync_label, "sync")):
            unknown = [t for t in label_map if t not in self.net.transitions]
            if unknown:
                raise NetStructureError(f"{what} labels reference unknown transitions: {unknown}")

    @property
    def initial_marking(self) -> Marking:
        return Multiset([self.source])

    @property
    def final_marking(self) -> Marking:
        return Multiset([self.sink])


def validate_workflow_net(w: WorkflowNet) -> list[str]:
    """Report every violated workflow-net condition; empty list means valid."""
    violations = []
    if w.net.preset(w.source):
        violations.append(f"source place {w.source!r} has incoming arcs")
    if w.net.postset(w.sink):
        violations.append(f"sink place {w.sink!r} has outgoing arcs")
    for t in sorted(w.net.transitions):
        if t not in w.activity_label:
            violations.append(f"transition {t!r} has no activity label")

    forward = _reach(w.net, w.source, w.net.postset)
    backward = _reach(w.net, w.sink, w.net.preset)
    for node in sorted(w.net.places | w.net.transitions):
        if node not in forward or node not in backward:
            violations.append(f"node {node!r} is not on a path from source to sink")
    return violations


def _reach(net: PetriNet, start: str, step) -> Set[str]:
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nxt in step(node):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


@dataclass(frozen=True)
class ReplayResult:
    """Outcome of a run-membership search.

    ``prefix`` is the longest number of leading events that some firing
    sequence can replay; it equals the sequence length when every event
    fired but no final marking was reached.
    """

    ok: bool
    prefix: int
    witness: Optional[Tuple] = None


def is_run_wf(w: WorkflowNet, activities: Sequence[str],
              max_states: Optional[int] = None) -> ReplayResult:
    """Decide whether ``activities`` is a run of ``w`` from {source} to {sink}.

    Depth-first search over (marking, position); duplicate activity labels
    make the replay nondeterministic, so failed states are memoized and
    transitions are explored in lexicographic id order for deterministic
    failure positions. Synchronization labels are ignored.
    """
    n = len(activities)
    final = w.final_marking
    by_label: Dict[str, list[str]] = {}
    for t in sorted(w.net.transitions):
        by_label.setdefault(w.activity_label.get(t), []).append(t)

    failed: Set[Tuple[Marking, int]] = set()
    visited = 0
    best = 0

    def dfs(m: Marking, pos: int) -> Optional[Tuple[str, ...]]:
        nonlocal visited, best
        best = max(best, pos)
        if pos == n:
            return () if m == final else None
        key = (m, pos)
        if key in failed:
            return None
        visited += 1
        if max_states is not None and visited > max_states:
            raise SearchLimitExceeded(f"replay visited more than {max_states} states")
        for t in by_label.get(activities[pos], ()):
            if all(m.count(p) >= 1 for p in w.net.preset(t)):
                rest = dfs(fire(w.net, m, t), pos + 1)
                if rest is not None:
                    return (t,) + rest
        failed.add(key)
        return None

    witness = dfs(w.initial_marking, 0)
    if witness is None:
        return ReplayResult(False, best)
    return ReplayResult(True, n, witness)
