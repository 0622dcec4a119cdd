"""Independent brute-force oracles.

Everything here re-derives semantics from first principles (its own firing,
its own binding enumeration, plain BFS) so that the library's replay search
can be checked against exhaustive enumeration. Nothing in this module calls
the library's search or enabling code.
"""

import itertools
from collections import deque

from npnconf.colored import Var
from npnconf.multiset import Multiset


# ----------------------------------------------------------------------
# workflow nets


def wf_enumerate_runs(w, max_len, max_states=10_000):
    """All activity sequences of length <= max_len leading from {source} to
    {sink}, by BFS over (marking, path). Returns (set of runs, state count)."""
    net = w.net
    initial = Multiset([w.source])
    final = Multiset([w.sink])
    runs = set()
    seen_markings = {initial}
    queue = deque([(initial, ())])
    while queue:
        m, path = queue.popleft()
        if m == final:
            runs.add(path)
        if len(path) == max_len:
            continue
        for t in sorted(net.transitions):
            if all(m.count(p) >= 1 for p in net.preset(t)):
                m2 = m - Multiset(net.preset(t)) + Multiset(net.postset(t))
                seen_markings.add(m2)
                if len(seen_markings) > max_states:
                    raise RuntimeError("state bound exceeded")
                queue.append((m2, path + (w.activity_label[t],)))
    return runs


def wf_reachable_markings(w, max_states=10_000):
    net = w.net
    initial = Multiset([w.source])
    seen = {initial}
    queue = deque([initial])
    while queue:
        m = queue.popleft()
        for t in net.transitions:
            if all(m.count(p) >= 1 for p in net.preset(t)):
                m2 = m - Multiset(net.preset(t)) + Multiset(net.postset(t))
                if m2 not in seen:
                    seen.add(m2)
                    if len(seen) > max_states:
                        raise RuntimeError("state bound exceeded")
                    queue.append(m2)
    return seen


# ----------------------------------------------------------------------
# colored nets


def cn_eval(expr, assignment):
    values = []
    for term in expr.terms:
        if isinstance(term, Var):
            values.append(assignment[term.name])
        else:
            values.append(term.value)
    return Multiset(values)


def cn_all_bindings(cn, t):
    """Full cartesian product over the domains of t's adjacent variables,
    as plain dicts."""
    names = set()
    for p in cn.net.preset(t):
        names.update(v.name for v in cn.arc_expr[(p, t)].terms if isinstance(v, Var))
    for p in cn.net.postset(t):
        names.update(v.name for v in cn.arc_expr[(t, p)].terms if isinstance(v, Var))
    names = sorted(names)
    pools = [sorted(cn.domains[cn.var_type[v]].values, key=repr) for v in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*pools)]


def cn_enabled_bindings(cn, marking, t):
    found = []
    for assignment in cn_all_bindings(cn, t):
        if all(cn_eval(cn.arc_expr[(p, t)], assignment) <= marking.get(p)
               for p in cn.net.preset(t)):
            found.append(assignment)
    return found


def cn_fire(cn, marking, t, assignment):
    out = marking
    for p in cn.net.preset(t):
        out = out.set(p, out.get(p) - cn_eval(cn.arc_expr[(p, t)], assignment))
    for p in cn.net.postset(t):
        out = out.set(p, out.get(p) + cn_eval(cn.arc_expr[(t, p)], assignment))
    return out


def cn_enumerate_runs(cn, max_len, max_states=10_000):
    """All (activity, payload-multiset) sequences of length <= max_len from
    the initial marking to some final marking. The payload of a step is the
    multiset of values bound to the transition's distinct variables."""
    runs = set()
    seen = {cn.initial_marking}
    queue = deque([(cn.initial_marking, ())])
    while queue:
        m, path = queue.popleft()
        if m in cn.final_markings:
            runs.add(path)
        if len(path) == max_len:
            continue
        for t in sorted(cn.net.transitions):
            for assignment in cn_enabled_bindings(cn, m, t):
                m2 = cn_fire(cn, m, t, assignment)
                seen.add(m2)
                if len(seen) > max_states:
                    raise RuntimeError("state bound exceeded")
                payload = Multiset(assignment.values())
                queue.append((m2, path + ((cn.activity_label[t], payload),)))
    return runs


# ----------------------------------------------------------------------
# nested nets: syntactically possible steps, tried via apply_step


def np_possible_steps(np, marking):
    """Every syntactically well-shaped step against the given marking:
    all (agent, inner transition) pairs, all system transitions with every
    assignment of present net tokens and domain values to their variables,
    and every participant combination for labeled transitions."""
    from npnconf.nested import ElementStep, SyncStep, SystemStep

    steps = []
    tokens = [tk for _, tk in marking.iter_tokens()]
    for tk in tokens:
        element = np.elements.get(np.agents.get(tk.agent))
        if element is None:
            continue
        for ti in sorted(element.net.transitions):
            steps.append(ElementStep(tk.agent, ti))

    for t in sorted(np.system.transitions):
        variables = np.transition_variables(t)
        pools = []
        for v in variables:
            if np.is_net_var(v):
                pools.append(tokens)
            else:
                pools.append(sorted(np.domains[np.var_type[v]].values, key=repr))
        for combo in itertools.product(*pools):
            from npnconf.colored import Binding

            b = Binding(zip(variables, combo))
            if np.system_sync.get(t) is None:
                steps.append(SystemStep(t, b))
            else:
                bound = {val.agent for v, val in b.items if np.is_net_var(v)}
                inner_pools = []
                for agent in sorted(bound):
                    element = np.elements.get(np.agents.get(agent))
                    if element is None:
                        inner_pools = None
                        break
                    inner_pools.append(
                        [(agent, ti) for ti in sorted(element.net.transitions)])
                if inner_pools is None:
                    continue
                for participants in itertools.product(*inner_pools):
                    steps.append(SyncStep(t, b, participants))
    return steps
