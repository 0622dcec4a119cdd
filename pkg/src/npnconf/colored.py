"""Colored Petri nets: typed places, arc expressions, bindings, colored firing.

Domains are finite and explicitly enumerated so that binding enumeration is
decidable. This module is also the semantic target of the system-net
projection, where net tokens are replaced by their agent names.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import (Dict, FrozenSet, Hashable, Iterable, Iterator, List,
                    Mapping, Optional, Sequence, Set, Tuple, Union)

from .multiset import Multiset, sort_key
from .nets import (NetStructureError, NotEnabledError, PetriNet, ReplayResult,
                   SearchLimitExceeded)

AtomValue = Hashable  # atomic token values: strings or ints in practice


class ExprSyntaxError(ValueError):
    """An arc expression does not conform to the concrete syntax."""


class BindingError(ValueError):
    """An expression was evaluated under a binding missing some variable."""


@dataclass(frozen=True)
class Domain:
    """A named, finite set of atomic values.

    Model files must declare nonempty domains; emptiness is tolerated here
    because projected agent-name domains can be empty for agentless classes.
    """

    name: str
    values: FrozenSet[AtomValue]

    def __init__(self, name: str, values: Iterable[AtomValue]):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "values", frozenset(values))

    def sorted_values(self) -> Tuple[AtomValue, ...]:
        return tuple(sorted(self.values, key=sort_key))


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: AtomValue

    def __str__(self) -> str:
        return f"`{self.value}`"


Term = Union[Var, Const]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_INT = re.compile(r"[+-]?[0-9]+$")


@dataclass(frozen=True)
class ArcExpr:
    """A formal sum of atoms: variables and backtick-quoted constants."""

    terms: Tuple[Term, ...]

    def __init__(self, terms: Iterable[Term]):
        terms = tuple(terms)
        if not terms:
            raise ExprSyntaxError("arc expression must have at least one term")
        object.__setattr__(self, "terms", terms)

    def variables(self) -> Tuple[str, ...]:
        """Variable names in order of occurrence, with repetitions."""
        return tuple(t.name for t in self.terms if isinstance(t, Var))

    def constants(self) -> Tuple[AtomValue, ...]:
        return tuple(t.value for t in self.terms if isinstance(t, Const))

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms)


def parse_arc_expr(text: str) -> ArcExpr:
    """Parse ``atom ( '+' atom )*``; atoms are identifiers or `quoted` literals."""
    terms: List[Term] = []
    for chunk in text.split("+"):
        atom = chunk.strip()
        if not atom:
            raise ExprSyntaxError(f"empty atom in arc expression {text!r}")
        if atom.startswith("`"):
            if not atom.endswith("`") or len(atom) < 2:
                raise ExprSyntaxError(f"unterminated constant in {text!r}")
            literal = atom[1:-1]
            terms.append(Const(int(literal) if _INT.match(literal) else literal))
        elif _IDENT.match(atom):
            terms.append(Var(atom))
        else:
            raise ExprSyntaxError(f"bad atom {atom!r} in arc expression {text!r}")
    return ArcExpr(terms)


@dataclass(frozen=True)
class Binding:
    """An assignment of values to variable names."""

    items: Tuple[Tuple[str, Hashable], ...]

    def __init__(self, assignment: Mapping[str, Hashable] | Iterable[Tuple[str, Hashable]]):
        pairs = assignment.items() if isinstance(assignment, Mapping) else assignment
        object.__setattr__(self, "items", tuple(sorted(pairs)))

    def __getitem__(self, var: str) -> Hashable:
        for name, value in self.items:
            if name == var:
                return value
        raise KeyError(var)

    def __contains__(self, var: str) -> bool:
        return any(name == var for name, _ in self.items)

    def as_dict(self) -> Dict[str, Hashable]:
        return dict(self.items)

    def values_over(self, variables: Iterable[str]) -> Multiset:
        """Bound values of the given (distinct) variables, one each."""
        return Multiset(self[v] for v in variables)


@dataclass(frozen=True)
class ColoredMarking:
    """Mapping from places to value multisets; empty places are dropped."""

    entries: Tuple[Tuple[str, Multiset], ...]

    def __init__(self, assignment: Mapping[str, Multiset | Iterable[AtomValue]] = ()):
        if isinstance(assignment, Mapping):
            pairs = assignment.items()
        else:
            pairs = assignment
        cleaned = []
        for place, tokens in pairs:
            ms = tokens if isinstance(tokens, Multiset) else Multiset(tokens)
            if ms:
                cleaned.append((place, ms))
        cleaned.sort(key=lambda e: e[0])
        object.__setattr__(self, "entries", tuple(cleaned))

    def get(self, place: str) -> Multiset:
        for p, ms in self.entries:
            if p == place:
                return ms
        return Multiset()

    def places(self) -> Tuple[str, ...]:
        return tuple(p for p, _ in self.entries)

    def set(self, place: str, tokens: Multiset) -> "ColoredMarking":
        kept = [(p, ms) for p, ms in self.entries if p != place]
        if tokens:
            kept.append((place, tokens))
        return ColoredMarking(kept)


@dataclass(frozen=True, eq=False)
class ColoredNet:
    """A colored net with explicit domains, initial marking, and final markings."""

    net: PetriNet
    domains: Mapping[str, Domain]
    place_type: Mapping[str, str]
    arc_expr: Mapping[Tuple[str, str], ArcExpr]
    var_type: Mapping[str, str]
    activity_label: Mapping[str, str]
    initial_marking: ColoredMarking
    final_markings: FrozenSet[ColoredMarking]

    def __init__(self, net, domains, place_type, arc_expr, var_type,
                 activity_label, initial_marking, final_markings):
        object.__setattr__(self, "net", net)
        object.__setattr__(self, "domains", dict(domains))
        object.__setattr__(self, "place_type", dict(place_type))
        object.__setattr__(self, "arc_expr", dict(arc_expr))
        object.__setattr__(self, "var_type", dict(var_type))
        object.__setattr__(self, "activity_label", dict(activity_label))
        object.__setattr__(self, "initial_marking", initial_marking)
        object.__setattr__(self, "final_markings", frozenset(final_markings))
        self._validate()

    def _validate(self) -> None:
        for p in self.net.places:
            if p not in self.place_type:
                raise NetStructureError(f"place {p!r} has no type")
            if self.place_type[p] not in self.domains:
                raise NetStructureError(f"place {p!r} typed with unknown domain "
                                        f"{self.place_type[p]!r}")
        for t in self.net.transitions:
            if t not in self.activity_label:
                raise NetStructureError(f"transition {t!r} has no activity label")
        for arc in self.net.arcs:
            if arc not in self.arc_expr:
                raise NetStructureError(f"arc {arc!r} has no expression")
        for (src, dst), expr in self.arc_expr.items():
            if (src, dst) not in self.net.arcs:
                raise NetStructureError(f"expression attached to unknown arc ({src!r}, {dst!r})")
            place = src if src in self.net.places else dst
            place_dom = self.domains[self.place_type[place]]
            for term in expr.terms:
                if isinstance(term, Var):
                    if term.name not in self.var_type:
                        raise NetStructureError(f"variable {term.name!r} has no declared type")
                    var_dom = self.domains.get(self.var_type[term.name])
                    if var_dom is None:
                        raise NetStructureError(
                            f"variable {term.name!r} typed with unknown domain "
                            f"{self.var_type[term.name]!r}")
                    if not var_dom.values <= place_dom.values:
                        raise NetStructureError(
                            f"variable {term.name!r} (domain {var_dom.name!r}) does not fit "
                            f"place {place!r} (domain {place_dom.name!r})")
                else:
                    if term.value not in place_dom.values:
                        raise NetStructureError(
                            f"constant {term.value!r} not in domain of place {place!r}")
        for marking in (self.initial_marking, *self.final_markings):
            self._check_marking(marking)

    def _check_marking(self, m: ColoredMarking) -> None:
        for place, tokens in m.entries:
            if place not in self.net.places:
                raise NetStructureError(f"marking references unknown place {place!r}")
            dom = self.domains[self.place_type[place]]
            for value, _ in tokens.items():
                if value not in dom.values:
                    raise NetStructureError(
                        f"value {value!r} in place {place!r} is outside domain {dom.name!r}")

    def transition_variables(self, t: str) -> Tuple[str, ...]:
        """Distinct variables occurring on arcs adjacent to ``t``, sorted."""
        names: Set[str] = set()
        for p in self.net.preset(t):
            names.update(self.arc_expr[(p, t)].variables())
        for p in self.net.postset(t):
            names.update(self.arc_expr[(t, p)].variables())
        return tuple(sorted(names))


def eval_arc_expr(expr: ArcExpr, binding: Binding) -> Multiset:
    """Evaluate a formal sum under a binding to a multiset of values."""
    values = []
    for term in expr.terms:
        if isinstance(term, Var):
            if term.name not in binding:
                raise BindingError(f"variable {term.name!r} is unbound")
            values.append(binding[term.name])
        else:
            values.append(term.value)
    return Multiset(values)


def _binding_enables(cn: ColoredNet, m: ColoredMarking, t: str, b: Binding) -> bool:
    return all(eval_arc_expr(cn.arc_expr[(p, t)], b) <= m.get(p)
               for p in cn.net.preset(t))


def enabled_bindings(cn: ColoredNet, m: ColoredMarking, t: str) -> List[Binding]:
    """All bindings over ``t``'s variables (enumerated over their domains)
    that satisfy the token demand at every input place."""
    if t not in cn.net.transitions:
        raise NetStructureError(f"unknown transition {t!r}")
    variables = cn.transition_variables(t)
    pools = [cn.domains[cn.var_type[v]].sorted_values() for v in variables]
    found = []
    for combo in itertools.product(*pools):
        b = Binding(zip(variables, combo))
        if _binding_enables(cn, m, t, b):
            found.append(b)
    return found


def fire_colored(cn: ColoredNet, m: ColoredMarking, t: str, b: Binding) -> ColoredMarking:
    """Fire ``t`` under ``b``: per place, remove input evaluations, add output ones."""
    if not _binding_enables(cn, m, t, b):
        raise NotEnabledError(t, detail=f"binding {b.items!r} does not enable it")
    out = m
    for p in cn.net.preset(t):
        out = out.set(p, out.get(p) - eval_arc_expr(cn.arc_expr[(p, t)], b))
    for p in cn.net.postset(t):
        out = out.set(p, out.get(p) + eval_arc_expr(cn.arc_expr[(t, p)], b))
    return out


def _assign_values(variables: Sequence[str], pool: Multiset,
                   fits) -> Iterator[Binding]:
    """Assignments of the pool's elements to the variables, one element per
    variable, consuming the pool exactly; ``fits(var, value)`` gates pairs."""
    if len(variables) != pool.total():
        return
    seen: Set[Binding] = set()

    def rec(idx: int, remaining: Multiset, acc: List[Tuple[str, Hashable]]):
        if idx == len(variables):
            b = Binding(acc)
            if b not in seen:
                seen.add(b)
                yield b
            return
        var = variables[idx]
        for value in remaining.support():
            if fits(var, value):
                acc.append((var, value))
                yield from rec(idx + 1, remaining - Multiset([value]), acc)
                acc.pop()

    yield from rec(0, pool, [])


def _payload_bindings(cn: ColoredNet, t: str, payload: Multiset) -> Iterator[Binding]:
    """Bindings whose value multiset over the distinct variables of ``t``
    equals ``payload``, respecting variable domains."""
    variables = cn.transition_variables(t)

    def fits(var: str, value: Hashable) -> bool:
        return value in cn.domains[cn.var_type[var]].values

    yield from _assign_values(variables, payload, fits)


def replay_colored(cn: ColoredNet, steps: Sequence[Tuple[str, Multiset]],
                   binding_candidates, max_states: Optional[int] = None) -> ReplayResult:
    """Shared backtracking replay over (marking, position) with memoized
    failures; ``binding_candidates(t, payload)`` yields payload-consistent
    bindings for a transition."""
    n = len(steps)
    by_label: Dict[str, List[str]] = {}
    for t in sorted(cn.net.transitions):
        by_label.setdefault(cn.activity_label[t], []).append(t)

    failed: Set[Tuple[ColoredMarking, int]] = set()
    visited = 0
    best = 0

    def dfs(m: ColoredMarking, pos: int) -> Optional[Tuple]:
        nonlocal visited, best
        best = max(best, pos)
        if pos == n:
            return () if m in cn.final_markings else None
        key = (m, pos)
        if key in failed:
            return None
        visited += 1
        if max_states is not None and visited > max_states:
            raise SearchLimitExceeded(f"replay visited more than {max_states} states")
        activity, payload = steps[pos]
        for t in by_label.get(activity, ()):
            candidates = sorted(binding_candidates(t, payload),
                                key=lambda b: sort_key(b.items))
            for b in candidates:
                if _binding_enables(cn, m, t, b):
                    rest = dfs(fire_colored(cn, m, t, b), pos + 1)
                    if rest is not None:
                        return ((t, b),) + rest
        failed.add(key)
        return None

    witness = dfs(cn.initial_marking, 0)
    if witness is None:
        return ReplayResult(False, best)
    return ReplayResult(True, n, witness)


def is_run_colored(cn: ColoredNet, steps: Sequence[Tuple[str, Multiset]],
                   max_states: Optional[int] = None) -> ReplayResult:
    """Decide whether a sequence of (activity, value multiset) pairs is a run
    from the initial marking to some final marking.

    Each step must fire a transition with the given activity under a binding
    whose values over the transition's distinct variables equal the step's
    multiset (each variable contributes its bound value once).
    """
    return replay_colored(
        cn, steps, lambda t, payload: _payload_bindings(cn, t, payload), max_states)
