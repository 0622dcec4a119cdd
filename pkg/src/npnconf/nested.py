"""Nested Petri nets: a colored system net whose tokens are marked workflow
nets (net tokens) or atomic data values, plus the three step kinds.

The system net's net places are typed by sets of element-net names and hold
distinguishable net tokens; atom places are typed by data domains and hold
value multisets. Conservative nets never clone or destroy net tokens, so the
set of agents is stable along every run.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import (Dict, FrozenSet, Hashable, Iterable, Iterator, List,
                    Mapping, Optional, Sequence, Set, Tuple, Union)

from .colored import ArcExpr, Binding, Domain, eval_arc_expr
from .multiset import Multiset, MultisetUnderflow, sort_key
from .nets import (Marking, NotEnabledError, PetriNet, WorkflowNet,
                   enabled_transitions, fire, validate_workflow_net)


class RosterError(ValueError):
    """An agent name is not part of the model's roster (or marking)."""


@dataclass(frozen=True)
class NetToken:
    """A net token: an agent name together with its current inner marking."""

    agent: str
    inner: Marking


@dataclass(frozen=True)
class NpMarking:
    """A system-net marking: net tokens on net places, values on atom places.

    Net tokens are distinguishable; each agent name occurs at most once in
    the whole marking. Empty places are dropped, entries are kept sorted, so
    equal markings compare and hash equal.
    """

    net_tokens: Tuple[Tuple[str, Tuple[NetToken, ...]], ...]
    atoms: Tuple[Tuple[str, Multiset], ...]

    def __init__(self,
                 net_tokens: Mapping[str, Iterable[NetToken]] = (),
                 atoms: Mapping[str, Multiset | Iterable[Hashable]] = ()):
        nt_pairs = net_tokens.items() if isinstance(net_tokens, Mapping) else net_tokens
        cleaned_nt = []
        seen_agents: Set[str] = set()
        for place, tokens in nt_pairs:
            toks = tuple(sorted(tokens, key=lambda tk: tk.agent))
            for tk in toks:
                if tk.agent in seen_agents:
                    raise RosterError(f"agent {tk.agent!r} occurs more than once in marking")
                seen_agents.add(tk.agent)
            if toks:
                cleaned_nt.append((place, toks))
        cleaned_nt.sort(key=lambda e: e[0])
        atom_pairs = atoms.items() if isinstance(atoms, Mapping) else atoms
        cleaned_at = []
        for place, values in atom_pairs:
            ms = values if isinstance(values, Multiset) else Multiset(values)
            if ms:
                cleaned_at.append((place, ms))
        cleaned_at.sort(key=lambda e: e[0])
        object.__setattr__(self, "net_tokens", tuple(cleaned_nt))
        object.__setattr__(self, "atoms", tuple(cleaned_at))

    def tokens_at(self, place: str) -> Tuple[NetToken, ...]:
        for p, toks in self.net_tokens:
            if p == place:
                return toks
        return ()

    def atoms_at(self, place: str) -> Multiset:
        for p, ms in self.atoms:
            if p == place:
                return ms
        return Multiset()

    def iter_tokens(self) -> Iterator[Tuple[str, NetToken]]:
        for place, toks in self.net_tokens:
            for tk in toks:
                yield place, tk

    def locate(self, agent: str) -> Optional[Tuple[str, NetToken]]:
        for place, tk in self.iter_tokens():
            if tk.agent == agent:
                return place, tk
        return None

    def agent_names(self) -> FrozenSet[str]:
        return frozenset(tk.agent for _, tk in self.iter_tokens())

    def replace_token(self, place: str, old: NetToken, new: NetToken) -> "NpMarking":
        nt = {p: list(toks) for p, toks in self.net_tokens}
        nt[place].remove(old)
        nt[place].append(new)
        return NpMarking(nt, dict(self.atoms))


@dataclass(frozen=True)
class ElementStep:
    """Autonomous firing of an unlabeled transition inside one net token."""

    agent: str
    transition: str


@dataclass(frozen=True)
class SystemStep:
    """Autonomous firing of an unlabeled system transition under a binding."""

    transition: str
    binding: Binding


@dataclass(frozen=True)
class SyncStep:
    """Labeled system firing synchronized with one equally-labeled inner
    transition per involved net token; inner transitions fire first."""

    transition: str
    binding: Binding
    participants: Tuple[Tuple[str, str], ...]  # (agent, inner transition)

    def __init__(self, transition: str, binding: Binding,
                 participants: Iterable[Tuple[str, str]]):
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "binding", binding)
        object.__setattr__(self, "participants", tuple(sorted(participants)))


Step = Union[ElementStep, SystemStep, SyncStep]


@dataclass(frozen=True, eq=False)
class NestedNet:
    """A two-level net: colored system net over element-net classes.

    ``agents`` names the stable set of net tokens and assigns each its
    element-net class. Activity labels are total (system transitions here,
    element transitions on their workflow nets); sync labels are partial.
    """

    system: PetriNet
    net_place_type: Mapping[str, FrozenSet[str]]
    atom_place_type: Mapping[str, str]
    domains: Mapping[str, Domain]
    arc_expr: Mapping[Tuple[str, str], ArcExpr]
    var_type: Mapping[str, str]
    elements: Mapping[str, WorkflowNet]
    system_activity: Mapping[str, str]
    system_sync: Mapping[str, str]
    agents: Mapping[str, str]
    initial_marking: NpMarking
    final_markings: FrozenSet[NpMarking]

    def __init__(self, system, net_place_type, atom_place_type, domains, arc_expr,
                 var_type, elements, system_activity, system_sync, agents,
                 initial_marking, final_markings):
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "net_place_type",
                           {p: frozenset(s) for p, s in dict(net_place_type).items()})
        object.__setattr__(self, "atom_place_type", dict(atom_place_type))
        object.__setattr__(self, "domains", dict(domains))
        object.__setattr__(self, "arc_expr", dict(arc_expr))
        object.__setattr__(self, "var_type", dict(var_type))
        object.__setattr__(self, "elements", dict(elements))
        object.__setattr__(self, "system_activity", dict(system_activity))
        object.__setattr__(self, "system_sync", dict(system_sync))
        object.__setattr__(self, "agents", dict(agents))
        object.__setattr__(self, "initial_marking", initial_marking)
        object.__setattr__(self, "final_markings", frozenset(final_markings))

    # -- label resolution over the union of system and element transitions --

    def activity_of(self, t: str) -> Optional[str]:
        if t in self.system_activity:
            return self.system_activity[t]
        for w in self.elements.values():
            if t in w.net.transitions:
                return w.activity_label.get(t)
        return None

    def sync_of(self, t: str) -> Optional[str]:
        if t in self.system.transitions:
            return self.system_sync.get(t)
        for w in self.elements.values():
            if t in w.net.transitions:
                return w.sync_label.get(t)
        return None

    def agent_class(self, agent: str) -> WorkflowNet:
        if agent not in self.agents:
            raise RosterError(f"unknown agent {agent!r}")
        return self.elements[self.agents[agent]]

    def is_net_var(self, var: str) -> bool:
        return self.var_type.get(var) in self.elements

    def transition_variables(self, t: str) -> Tuple[str, ...]:
        names: Set[str] = set()
        for p in self.system.preset(t):
            names.update(self.arc_expr[(p, t)].variables())
        for p in self.system.postset(t):
            names.update(self.arc_expr[(t, p)].variables())
        return tuple(sorted(names))

    def net_variables(self, t: str) -> Tuple[str, ...]:
        return tuple(v for v in self.transition_variables(t) if self.is_net_var(v))

    def data_variables(self, t: str) -> Tuple[str, ...]:
        return tuple(v for v in self.transition_variables(t) if not self.is_net_var(v))

    def input_net_variables(self, t: str) -> Tuple[str, ...]:
        names: Set[str] = set()
        for p in self.system.preset(t):
            names.update(v for v in self.arc_expr[(p, t)].variables()
                         if self.is_net_var(v))
        return tuple(sorted(names))


def validate_nested_net(np: NestedNet) -> List[str]:
    """Report every violated well-formedness condition; empty means valid."""
    violations: List[str] = []

    all_nets = [("system", np.system)] + [(name, w.net) for name, w in np.elements.items()]
    owner: Dict[str, str] = {}
    for name, net in all_nets:
        for node in sorted(net.places | net.transitions):
            if node in owner:
                violations.append(
                    f"node id {node!r} used by both {owner[node]!r} and {name!r}")
            else:
                owner[node] = name

    for name, w in sorted(np.elements.items()):
        for issue in validate_workflow_net(w):
            violations.append(f"element net {name!r}: {issue}")

    typed = set(np.net_place_type) | set(np.atom_place_type)
    for p in sorted(np.system.places):
        if p not in typed:
            violations.append(f"system place {p!r} has no type")
    for p in sorted(set(np.net_place_type) & set(np.atom_place_type)):
        violations.append(f"system place {p!r} typed as both net and atom place")
    for p, names in sorted(np.net_place_type.items()):
        if not names:
            violations.append(f"net place {p!r} has an empty type set")
        for e in sorted(names - set(np.elements)):
            violations.append(f"net place {p!r} typed over unknown element net {e!r}")
    for p, dom in sorted(np.atom_place_type.items()):
        if dom not in np.domains:
            violations.append(f"atom place {p!r} typed over unknown domain {dom!r}")
    for dom in sorted(np.domains):
        if not np.domains[dom].values:
            violations.append(f"declared domain {dom!r} is empty")

    for t in sorted(np.system.transitions):
        if t not in np.system_activity:
            violations.append(f"system transition {t!r} has no activity label")

    for arc in sorted(np.system.arcs):
        if arc not in np.arc_expr:
            violations.append(f"system arc {arc!r} has no expression")
    for (src, dst), expr in sorted(np.arc_expr.items(), key=lambda kv: kv[0]):
        if (src, dst) not in np.system.arcs:
            violations.append(f"expression attached to unknown arc ({src!r}, {dst!r})")
            continue
        place = src if src in np.system.places else dst
        if place in np.net_place_type:
            if expr.constants():
                violations.append(
                    f"arc ({src!r}, {dst!r}): net-place expressions cannot contain constants")
            for v in expr.variables():
                vt = np.var_type.get(v)
                if vt is None:
                    violations.append(f"arc ({src!r}, {dst!r}): variable {v!r} has no type")
                elif vt not in np.elements:
                    violations.append(
                        f"arc ({src!r}, {dst!r}): variable {v!r} is not net-typed")
                elif vt not in np.net_place_type[place]:
                    violations.append(
                        f"arc ({src!r}, {dst!r}): variable {v!r} (type {vt!r}) does not fit "
                        f"place {place!r}")
        elif place in np.atom_place_type:
            dom_name = np.atom_place_type[place]
            dom = np.domains.get(dom_name)
            variables = expr.variables()
            if len(set(variables)) != len(variables):
                violations.append(
                    f"arc ({src!r}, {dst!r}): atom-place expression repeats a variable")
            for v in variables:
                vt = np.var_type.get(v)
                if vt is None:
                    violations.append(f"arc ({src!r}, {dst!r}): variable {v!r} has no type")
                elif vt in np.elements:
                    violations.append(
                        f"arc ({src!r}, {dst!r}): net-typed variable {v!r} on an atom place")
                elif vt != dom_name:
                    violations.append(
                        f"arc ({src!r}, {dst!r}): variable {v!r} (domain {vt!r}) does not "
                        f"match place domain {dom_name!r}")
            if dom is not None:
                for c in expr.constants():
                    if c not in dom.values:
                        violations.append(
                            f"arc ({src!r}, {dst!r}): constant {c!r} outside domain {dom_name!r}")

    for r, cls in sorted(np.agents.items()):
        if cls not in np.elements:
            violations.append(f"agent {r!r} has unknown class {cls!r}")

    for label, marking in [("initial marking", np.initial_marking)] + [
            (f"final marking {i}", mf) for i, mf in
            enumerate(sorted(np.final_markings, key=sort_key))]:
        violations.extend(f"{label}: {issue}" for issue in _check_np_marking(np, marking))

    return violations


def _check_np_marking(np: NestedNet, m: NpMarking) -> List[str]:
    issues = []
    for place, tokens in m.net_tokens:
        if place not in np.net_place_type:
            issues.append(f"net tokens on non-net place {place!r}")
            continue
        for tk in tokens:
            cls = np.agents.get(tk.agent)
            if cls is None:
                issues.append(f"net token names unknown agent {tk.agent!r}")
                continue
            if cls not in np.net_place_type[place]:
                issues.append(
                    f"agent {tk.agent!r} (class {cls!r}) not allowed in place {place!r}")
            element = np.elements.get(cls)
            if element is not None:
                bad = [p for p, _ in tk.inner.items() if p not in element.net.places]
                if bad:
                    issues.append(
                        f"inner marking of {tk.agent!r} references foreign places {bad}")
    for place, values in m.atoms:
        if place not in np.atom_place_type:
            issues.append(f"atomic values on non-atom place {place!r}")
            continue
        dom = np.domains.get(np.atom_place_type[place])
        if dom is not None:
            for value, _ in values.items():
                if value not in dom.values:
                    issues.append(
                        f"value {value!r} in place {place!r} outside domain {dom.name!r}")
    return issues


def check_conservative(np: NestedNet) -> List[str]:
    """Structural conservativeness: per system transition, the multiset of
    net-typed variables on input arcs must equal the one on output arcs,
    so net tokens are neither cloned nor destroyed."""
    violations = []
    for t in sorted(np.system.transitions):
        inbound: List[str] = []
        outbound: List[str] = []
        for p in np.system.preset(t):
            inbound.extend(v for v in np.arc_expr[(p, t)].variables() if np.is_net_var(v))
        for p in np.system.postset(t):
            outbound.extend(v for v in np.arc_expr[(t, p)].variables() if np.is_net_var(v))
        if Multiset(inbound) != Multiset(outbound):
            violations.append(
                f"transition {t!r} consumes net variables {sorted(inbound)} but "
                f"produces {sorted(outbound)}")
    return violations


def _place_content(np: NestedNet, m: NpMarking, place: str) -> Multiset:
    if place in np.net_place_type:
        return Multiset(m.tokens_at(place))
    return m.atoms_at(place)


def _binding_well_typed(np: NestedNet, t: str, b: Binding) -> bool:
    for v in np.transition_variables(t):
        try:
            value = b[v]
        except KeyError:
            return False
        if np.is_net_var(v):
            if not isinstance(value, NetToken):
                return False
            if np.agents.get(value.agent) != np.var_type[v]:
                return False
        else:
            dom = np.domains.get(np.var_type[v])
            if dom is None or value not in dom.values:
                return False
    return True


def _system_binding_enables(np: NestedNet, m: NpMarking, t: str, b: Binding) -> bool:
    if not _binding_well_typed(np, t, b):
        return False
    try:
        return all(eval_arc_expr(np.arc_expr[(p, t)], b) <= _place_content(np, m, p)
                   for p in np.system.preset(t))
    except KeyError:
        return False


def system_bindings(np: NestedNet, m: NpMarking, t: str) -> List[Binding]:
    """Enabling bindings of a system transition in an NP-net marking.

    Net variables range over the net tokens residing in the input places
    their arcs read from; data variables range over their full domains.
    """
    variables = np.transition_variables(t)
    pools: List[Tuple[Hashable, ...]] = []
    for v in variables:
        if np.is_net_var(v):
            candidates: Set[NetToken] = set()
            for p in np.system.preset(t):
                if v in np.arc_expr[(p, t)].variables():
                    candidates.update(tk for tk in m.tokens_at(p)
                                      if np.agents.get(tk.agent) == np.var_type[v])
            pools.append(tuple(sorted(candidates, key=sort_key)))
        else:
            pools.append(np.domains[np.var_type[v]].sorted_values())
    found = []
    for combo in itertools.product(*pools):
        b = Binding(zip(variables, combo))
        if _system_binding_enables(np, m, t, b):
            found.append(b)
    return found


def involved_tokens(np: NestedNet, t: str, b: Binding) -> Tuple[NetToken, ...]:
    """Net tokens bound to variables occurring in input arc expressions."""
    toks = {b[v] for v in np.input_net_variables(t) if v in b}
    return tuple(sorted(toks, key=sort_key))


def _sync_inner_candidates(np: NestedNet, token: NetToken, label: str) -> List[str]:
    w = np.elements[np.agents[token.agent]]
    return [ti for ti in sorted(w.net.transitions)
            if w.sync_label.get(ti) == label
            and all(token.inner.count(p) >= 1 for p in w.net.preset(ti))]


def enabled_steps(np: NestedNet, m: NpMarking) -> List[Step]:
    """All enabled element-autonomous, system-autonomous, and synchronization
    steps of ``m``, in deterministic order."""
    steps: List[Step] = []
    for _, token in sorted(m.iter_tokens(), key=lambda pt: pt[1].agent):
        cls = np.agents.get(token.agent)
        if cls not in np.elements:
            continue
        w = np.elements[cls]
        for ti in sorted(enabled_transitions(w.net, token.inner)):
            if w.sync_label.get(ti) is None:
                steps.append(ElementStep(token.agent, ti))
    for t in sorted(np.system.transitions):
        label = np.system_sync.get(t)
        for b in system_bindings(np, m, t):
            if label is None:
                steps.append(SystemStep(t, b))
            else:
                per_agent = []
                for token in involved_tokens(np, t, b):
                    cands = _sync_inner_candidates(np, token, label)
                    if not cands:
                        per_agent = None
                        break
                    per_agent.append([(token.agent, ti) for ti in cands])
                if per_agent is None:
                    continue
                for combo in itertools.product(*per_agent):
                    steps.append(SyncStep(t, b, combo))
    return steps


def _fire_system(np: NestedNet, m: NpMarking, t: str, b: Binding) -> NpMarking:
    nt: Dict[str, List[NetToken]] = {p: list(toks) for p, toks in m.net_tokens}
    atoms: Dict[str, Multiset] = dict(m.atoms)
    for p in np.system.preset(t):
        demand = eval_arc_expr(np.arc_expr[(p, t)], b)
        if p in np.net_place_type:
            have = nt.get(p, [])
            for tok in demand:
                if tok not in have:
                    raise NotEnabledError(t, [p])
                have.remove(tok)
            nt[p] = have
        else:
            try:
                atoms[p] = atoms.get(p, Multiset()) - demand
            except MultisetUnderflow as exc:
                raise NotEnabledError(t, [p], str(exc)) from exc
    for p in np.system.postset(t):
        produced = eval_arc_expr(np.arc_expr[(t, p)], b)
        if p in np.net_place_type:
            nt.setdefault(p, []).extend(produced)
        else:
            atoms[p] = atoms.get(p, Multiset()) + produced
    return NpMarking(nt, atoms)


def apply_step(np: NestedNet, m: NpMarking, step: Step) -> NpMarking:
    """Apply one step, raising NotEnabledError when it is not enabled.

    Element-autonomous steps advance one inner marking in place; system
    steps move net tokens with unchanged inner markings; synchronization
    steps fire the inner transitions first and then move the updated tokens.
    """
    if isinstance(step, ElementStep):
        located = m.locate(step.agent)
        if located is None:
            raise NotEnabledError(step.transition,
                                  detail=f"agent {step.agent!r} not in marking")
        place, token = located
        w = np.agent_class(step.agent)
        if step.transition not in w.net.transitions:
            raise NotEnabledError(step.transition,
                                  detail=f"not a transition of class {np.agents[step.agent]!r}")
        if w.sync_label.get(step.transition) is not None:
            raise NotEnabledError(step.transition,
                                  detail="labeled transitions cannot fire autonomously")
        new_inner = fire(w.net, token.inner, step.transition)
        return m.replace_token(place, token, NetToken(step.agent, new_inner))

    if isinstance(step, SystemStep):
        t = step.transition
        if t not in np.system.transitions or np.system_sync.get(t) is not None:
            raise NotEnabledError(t, detail="not an unlabeled system transition")
        if not _system_binding_enables(np, m, t, step.binding):
            raise NotEnabledError(t, detail="binding does not enable it")
        return _fire_system(np, m, t, step.binding)

    if isinstance(step, SyncStep):
        t = step.transition
        label = np.system_sync.get(t)
        if t not in np.system.transitions or label is None:
            raise NotEnabledError(t, detail="not a labeled system transition")
        if not _system_binding_enables(np, m, t, step.binding):
            raise NotEnabledError(t, detail="binding does not enable it")
        involved = involved_tokens(np, t, step.binding)
        by_agent = dict(step.participants)
        if len(by_agent) != len(step.participants):
            raise NotEnabledError(t, detail="duplicate participant agent")
        if set(by_agent) != {tok.agent for tok in involved}:
            raise NotEnabledError(
                t, detail="participants do not match the involved net tokens")
        # stage one: fire the matching-label inner transitions
        staged = m
        updated: Dict[NetToken, NetToken] = {}
        for token in involved:
            ti = by_agent[token.agent]
            w = np.agent_class(token.agent)
            if ti not in w.net.transitions or w.sync_label.get(ti) != label:
                raise NotEnabledError(ti, detail=f"sync label mismatch with {t!r}")
            place, _ = staged.locate(token.agent)
            new_token = NetToken(token.agent, fire(w.net, token.inner, ti))
            staged = staged.replace_token(place, token, new_token)
            updated[token] = new_token
        # stage two: the system transition moves the updated tokens
        new_binding = Binding((v, updated.get(val, val)) for v, val in step.binding.items)
        return _fire_system(np, staged, t, new_binding)

    raise TypeError(f"unknown step type: {step!r}")


def is_run_np(np: NestedNet, steps: Sequence[Step]) -> bool:
    """Whether the steps fire in sequence from the initial marking and end in
    a declared final marking."""
    m = np.initial_marking
    for step in steps:
        try:
            m = apply_step(np, m, step)
        except NotEnabledError:
            return False
    return m in np.final_markings
