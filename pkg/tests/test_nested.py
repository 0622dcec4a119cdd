import random

import pytest

from npnconf.colored import Binding, parse_arc_expr
from npnconf.multiset import Multiset
from npnconf.nested import (ElementStep, NestedNet, NetToken, NotEnabledError,
                            NpMarking, RosterError, SyncStep, SystemStep,
                            apply_step, check_conservative, enabled_steps,
                            is_run_np, validate_nested_net)
from npnconf.nets import PetriNet, WorkflowNet
from npnconf.simulate import SimulationConfig, simulate_run

from generators import random_nested_net
from oracles import np_possible_steps


def test_fixture_validates_and_is_conservative(assistant_model):
    assert validate_nested_net(assistant_model) == []
    assert check_conservative(assistant_model) == []


def test_validate_flags_shared_node_id(assistant_model):
    np = assistant_model
    clashing = WorkflowNet(
        PetriNet({"e_i", "e_o"}, {"s_a"}, {("e_i", "s_a"), ("s_a", "e_o")}),
        "e_i", "e_o", {"s_a": "z"})
    broken = NestedNet(
        system=np.system, net_place_type=np.net_place_type,
        atom_place_type=np.atom_place_type, domains=np.domains,
        arc_expr=np.arc_expr, var_type=np.var_type,
        elements={**np.elements, "clash": clashing},
        system_activity=np.system_activity, system_sync=np.system_sync,
        agents=np.agents, initial_marking=np.initial_marking,
        final_markings=np.final_markings)
    assert any("used by both" in v for v in validate_nested_net(broken))


def test_validate_flags_constant_on_net_place(assistant_model):
    np = assistant_model
    arc_expr = dict(np.arc_expr)
    arc_expr[("s_p1", "s_b")] = parse_arc_expr("`r1`")
    broken = NestedNet(
        system=np.system, net_place_type=np.net_place_type,
        atom_place_type=np.atom_place_type, domains=np.domains,
        arc_expr=arc_expr, var_type=np.var_type, elements=np.elements,
        system_activity=np.system_activity, system_sync=np.system_sync,
        agents=np.agents, initial_marking=np.initial_marking,
        final_markings=np.final_markings)
    assert any("cannot contain constants" in v for v in validate_nested_net(broken))


def _two_place_system(arc_expr_out):
    """One net place to another via one transition; output expressions vary."""
    system = PetriNet({"n_p", "n_q"}, {"n_t"},
                      {("n_p", "n_t"), ("n_t", "n_q")})
    element = WorkflowNet(
        PetriNet({"w_i", "w_o"}, {"w_t"}, {("w_i", "w_t"), ("w_t", "w_o")}),
        "w_i", "w_o", {"w_t": "go"})
    initial = NpMarking({"n_p": [NetToken("r1", Multiset(["w_i"]))]})
    final = NpMarking({"n_q": [NetToken("r1", Multiset(["w_o"]))]})
    return NestedNet(
        system=system,
        net_place_type={"n_p": {"W"}, "n_q": {"W"}},
        atom_place_type={}, domains={},
        arc_expr={("n_p", "n_t"): parse_arc_expr("x"),
                  ("n_t", "n_q"): parse_arc_expr(arc_expr_out)},
        var_type={"x": "W", "y": "W"},
        elements={"W": element},
        system_activity={"n_t": "move"}, system_sync={},
        agents={"r1": "W"},
        initial_marking=initial, final_markings=[final])


def test_conservative_flags_cloning():
    np = _two_place_system("x + x")
    report = check_conservative(np)
    assert len(report) == 1 and "n_t" in report[0]


def test_conservative_flags_disappearance():
    np = _two_place_system("y")
    report = check_conservative(np)
    assert len(report) == 1 and "n_t" in report[0]


def test_enabled_steps_fixture_initial(assistant_model):
    steps = enabled_steps(assistant_model, assistant_model.initial_marking)
    assert steps == [ElementStep("r1", "c_d"), ElementStep("r2", "c_d")]


def test_enabled_steps_empty_marking(assistant_model):
    assert enabled_steps(assistant_model, NpMarking()) == []


def test_no_sync_step_when_system_side_lacks_agent(assistant_model):
    # r1's inner net enables the labeled f, but r1 sits past the a-transition
    marking = NpMarking({"s_p1": [NetToken("r1", Multiset(["c_p2"]))]})
    steps = enabled_steps(assistant_model, marking)
    assert not any(isinstance(s, SyncStep) for s in steps)
    assert steps == [SystemStep("s_b", Binding({"x": NetToken("r1", Multiset(["c_p2"]))}))]


def test_apply_element_step_advances_inner_only(assistant_model):
    m0 = assistant_model.initial_marking
    m1 = apply_step(assistant_model, m0, ElementStep("r1", "c_d"))
    assert m1.tokens_at("s_p0") == (NetToken("r1", Multiset(["c_p1"])),
                                    NetToken("r2", Multiset(["c_i"])))
    assert m1.atoms == m0.atoms


def test_apply_sync_step_fires_inner_then_moves(assistant_model):
    np = assistant_model
    m = np.initial_marking
    m = apply_step(np, m, ElementStep("r1", "c_d"))
    m = apply_step(np, m, ElementStep("r1", "c_h"))
    token = m.locate("r1")[1]
    assert token.inner == Multiset(["c_p2"])
    step = SyncStep("s_a", Binding({"x": token}), [("r1", "c_f")])
    m2 = apply_step(np, m, step)
    assert m2.locate("r1") == ("s_p1", NetToken("r1", Multiset(["c_o"])))


def test_apply_system_step_moves_without_inner_change(assistant_model):
    np = assistant_model
    inner = Multiset(["c_o"])
    m = NpMarking({"s_p1": [NetToken("r1", inner)]})
    step = SystemStep("s_b", Binding({"x": NetToken("r1", inner)}))
    m2 = apply_step(np, m, step)
    assert m2.locate("r1") == ("s_p2", NetToken("r1", inner))


def test_apply_step_rejects_disabled(assistant_model):
    np = assistant_model
    with pytest.raises(NotEnabledError):
        apply_step(np, np.initial_marking, ElementStep("r1", "c_h"))
    with pytest.raises(NotEnabledError):
        # f is labeled, so it cannot fire autonomously
        m = NpMarking({"s_p0": [NetToken("r1", Multiset(["c_p2"]))]})
        apply_step(np, m, ElementStep("r1", "c_f"))
    with pytest.raises(NotEnabledError):
        apply_step(np, np.initial_marking,
                   SystemStep("s_b", Binding({"x": NetToken("r1", Multiset(["c_i"]))})))


def fifth_trace_steps(np):
    """The step sequence realizing the worked example's fifth trace."""
    steps = []
    m = np.initial_marking
    plan = [
        ElementStep("r1", "c_d"),
        ElementStep("r2", "c_d"),
        ElementStep("r1", "c_e"),
        ElementStep("r2", "c_e"),
    ]
    for step in plan:
        steps.append(step)
        m = apply_step(np, m, step)
    token1 = m.locate("r1")[1]
    sync_a = SyncStep("s_a", Binding({"x": token1}), [("r1", "c_f")])
    steps.append(sync_a)
    m = apply_step(np, m, sync_a)
    token2 = m.locate("r2")[1]
    sync_c = SyncStep("s_c", Binding({"x": token2}), [("r2", "c_g")])
    steps.append(sync_c)
    m = apply_step(np, m, sync_c)
    token1 = m.locate("r1")[1]
    steps.append(SystemStep("s_b", Binding({"x": token1})))
    return steps


def test_is_run_np_fifth_trace(assistant_model):
    steps = fifth_trace_steps(assistant_model)
    assert is_run_np(assistant_model, steps)
    assert not is_run_np(assistant_model, steps[:-1])
    assert not is_run_np(assistant_model, [])


def test_step_locality(assistant_model):
    np = assistant_model
    m0 = np.initial_marking
    m1 = apply_step(np, m0, ElementStep("r2", "c_d"))
    # element-autonomous: net-token positions and atoms unchanged
    assert [p for p, _ in m1.iter_tokens()] == [p for p, _ in m0.iter_tokens()]
    assert m1.atoms == m0.atoms
    # system-autonomous: inner markings unchanged
    inner = Multiset(["c_o"])
    m = NpMarking({"s_p1": [NetToken("r1", inner)]})
    m2 = apply_step(np, m, SystemStep("s_b", Binding({"x": NetToken("r1", inner)})))
    assert m2.locate("r1")[1].inner == inner


def test_agent_conservation_along_simulated_runs():
    rng = random.Random(88)
    for i in range(20):
        np = random_nested_net(rng)
        assert validate_nested_net(np) == []
        assert check_conservative(np) == []
        _, steps = simulate_run(np, SimulationConfig(seed=i, max_steps=100))
        agents = np.initial_marking.agent_names()
        m = np.initial_marking
        for step in steps:
            m = apply_step(np, m, step)
            assert m.agent_names() == agents


def test_enabled_steps_agree_with_brute_force_oracle():
    rng = random.Random(99)
    for i in range(12):
        np = random_nested_net(rng, max_agents=3)
        markings = [np.initial_marking]
        m = np.initial_marking
        _, steps = simulate_run(np, SimulationConfig(seed=i, max_steps=100))
        for step in steps[:4]:
            m = apply_step(np, m, step)
            markings.append(m)
        for m in markings:
            mine = set(enabled_steps(np, m))
            applicable = set()
            for step in np_possible_steps(np, m):
                try:
                    apply_step(np, m, step)
                except NotEnabledError:
                    continue
                applicable.add(step)
            assert mine == applicable


def test_marking_rejects_duplicate_agent():
    with pytest.raises(RosterError):
        NpMarking({"p": [NetToken("r1", Multiset(["a"]))],
                   "q": [NetToken("r1", Multiset(["b"]))]})


def meet_model():
    """Two agents forced through one synchronization that moves both."""
    element = WorkflowNet(
        PetriNet({"m_i", "m_o"}, {"m_t"}, {("m_i", "m_t"), ("m_t", "m_o")}),
        "m_i", "m_o", {"m_t": "join"}, {"m_t": "meet"})
    system = PetriNet({"ms_p0", "ms_p1"}, {"ms_t"},
                      {("ms_p0", "ms_t"), ("ms_t", "ms_p1")})
    initial = NpMarking({"ms_p0": [NetToken("q1", Multiset(["m_i"])),
                                   NetToken("q2", Multiset(["m_i"]))]})
    final = NpMarking({"ms_p1": [NetToken("q1", Multiset(["m_o"])),
                                 NetToken("q2", Multiset(["m_o"]))]})
    return NestedNet(
        system=system,
        net_place_type={"ms_p0": {"M"}, "ms_p1": {"M"}},
        atom_place_type={}, domains={},
        arc_expr={("ms_p0", "ms_t"): parse_arc_expr("x + y"),
                  ("ms_t", "ms_p1"): parse_arc_expr("x + y")},
        var_type={"x": "M", "y": "M"},
        elements={"M": element},
        system_activity={"ms_t": "rendezvous"}, system_sync={"ms_t": "meet"},
        agents={"q1": "M", "q2": "M"},
        initial_marking=initial, final_markings=[final])


def test_multi_participant_sync():
    np = meet_model()
    assert validate_nested_net(np) == []
    assert check_conservative(np) == []
    steps = enabled_steps(np, np.initial_marking)
    assert all(isinstance(s, SyncStep) for s in steps)
    assert len(steps) == 2  # x/y binding symmetry; both describe the same move
    m2 = apply_step(np, np.initial_marking, steps[0])
    assert m2 in np.final_markings
    assert is_run_np(np, [steps[0]])
