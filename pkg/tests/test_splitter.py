import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import dagsplit.splitter as splitter
from dagsplit.delay import PAPER_LITERAL, NetParams, Partition, training_delay
from dagsplit.errors import SplitError
from dagsplit.fixtures import chain, chain3, diamond, fig3
from dagsplit.graph import aux_vertex, build_split_dag, layer_vertex, partition_cut_value, restructure
from dagsplit.oracle import oracle_optimal
from dagsplit.profile import INPUT_ID, LayerProfile, ModelProfile
from dagsplit.randomgen import random_dag_profile, random_net
from dagsplit.splitter import brute_force_linear, map_cut_to_partition, optimal_split, solve_dag

S = 10**6
MB_S = NetParams(1e6, 1e6)


def test_chain3_optimum():
    p = chain3()
    d = optimal_split(p, MB_S)
    assert d.partition.device_set == {INPUT_ID, "v1"}
    assert d.delay_us == d.cut_value_us == 4 * S
    assert d.method == "linear-bruteforce"
    via_cut = solve_dag(build_split_dag(p, MB_S), p, MB_S, "dag-mincut")
    assert via_cut.partition == d.partition and via_cut.delay_us == d.delay_us


def test_transmission_free_instance_goes_to_server():
    layers = tuple(LayerProfile(f"v{i}", 7, 7, 0, 0) for i in range(1, 6))
    edges = (("v1", "v2"), ("v1", "v3"), ("v2", "v4"), ("v3", "v4"), ("v4", "v5"))
    p = ModelProfile("free", 0, layers, edges)
    n = NetParams(1e6, 1e6, local_iters=3)
    d = optimal_split(p, n)
    assert d.partition == Partition.all_server(p)
    assert d.delay_us == 3 * 5 * 7


def test_all_zero_ties_break_to_all_server():
    p = ModelProfile("zero", 0, tuple(LayerProfile(f"v{i}", 0, 0, 0, 0) for i in range(3)), ())
    assert optimal_split(p, MB_S).partition == Partition.all_server(p)
    assert oracle_optimal(p, MB_S).partition == Partition.all_server(p)


def test_matches_oracle_on_random_nonlinear_profiles():
    for seed in range(250):
        rng = random.Random(seed)
        p = random_dag_profile(rng, rng.randint(2, 10))
        n = random_net(rng)
        got, want = optimal_split(p, n), oracle_optimal(p, n)
        assert got.delay_us == want.delay_us
        assert got.partition == want.partition
        assert got.cut_value_us == got.delay_us


def test_matches_oracle_with_fast_device_layers():
    # INF precedence arcs keep every min cut consistent, so the optimum is
    # exact even when some layers run faster on the device
    for seed in range(200):
        rng = random.Random(seed)
        p = random_dag_profile(rng, rng.randint(2, 9), slow_device=False)
        n = random_net(rng)
        assert optimal_split(p, n).delay_us == oracle_optimal(p, n).delay_us


def test_without_precedence_some_cut_is_inconsistent():
    failures = 0
    for seed in range(300):
        rng = random.Random(seed)
        p = random_dag_profile(rng, rng.randint(4, 10), extra_parent_prob=0.6)
        n = random_net(rng)
        try:
            d = optimal_split(p, n, precedence=False)
        except SplitError:
            failures += 1
            continue
        assert d.delay_us >= oracle_optimal(p, n).delay_us
    assert failures > 0


def test_brute_force_linear_empty_model():
    p = ModelProfile("empty", 10, (), ())
    d = brute_force_linear(p, MB_S)
    assert d.partition == Partition.all_server(p) and d.delay_us == 0


def test_brute_force_linear_evaluates_l_plus_one_candidates(monkeypatch):
    calls = []
    real = splitter.training_delay

    def counting(p, c, n):
        calls.append(c)
        return real(p, c, n)

    monkeypatch.setattr(splitter, "training_delay", counting)
    p = chain(18)
    brute_force_linear(p, MB_S)
    assert len(calls) == 19
    assert len(set(calls)) == 19


def test_brute_force_linear_rejects_non_chain():
    with pytest.raises(SplitError):
        brute_force_linear(diamond(), MB_S)


def test_chain_methods_agree():
    rng = random.Random(4)
    for _ in range(100):
        p = random_dag_profile(rng, rng.randint(1, 12), extra_parent_prob=0.0, nonlinear=False)
        n = random_net(rng)
        if not p.is_chain():
            continue
        a = brute_force_linear(p, n)
        b = solve_dag(build_split_dag(p, n), p, n, "dag-mincut")
        assert (a.delay_us, a.partition) == (b.delay_us, b.partition)


def test_map_cut_uses_aux_vertex_for_multi_child_parent():
    p = fig3()
    g = restructure(build_split_dag(p, MB_S))
    side = {g.vertices[0], layer_vertex(INPUT_ID), aux_vertex(layer_vertex("v1"))}
    assert map_cut_to_partition(g, side, p).device_set == {INPUT_ID, "v1"}
    assert map_cut_to_partition(g, set(g.vertices), p) == Partition.all_device(p)


def test_map_cut_identity_on_chain():
    p = chain(4)
    g = build_split_dag(p, MB_S)
    side = {g.vertices[0]} | {layer_vertex(x) for x in (INPUT_ID, "l1", "l2")}
    assert map_cut_to_partition(g, side, p).device_set == {INPUT_ID, "l1", "l2"}


def test_case2_exclusion_on_trees():
    # a device-side parent never keeps some children while sending others
    for seed in range(400):
        rng = random.Random(seed)
        p = random_dag_profile(rng, rng.randint(2, 12), tree=True)
        d = optimal_split(p, random_net(rng))
        for u, kids in p.children.items():
            if len(kids) >= 2 and u in d.partition.device_set:
                sides = {k in d.partition.device_set for k in kids}
                assert len(sides) == 1, (seed, u)


@given(st.integers(0, 100_000), st.integers(2, 9))
def test_argmin_invariant_under_common_scaling(seed, factor):
    rng = random.Random(seed)
    p = random_dag_profile(rng, rng.randint(2, 9))
    n = random_net(rng, exact=True)
    scaled = ModelProfile(
        p.model_name,
        p.input_bytes * factor,
        tuple(LayerProfile(l.id, l.xi_device_us * factor, l.xi_server_us * factor,
                           l.param_bytes * factor, l.output_bytes * factor) for l in p.layers),
        p.edges,
    )
    a, b = optimal_split(p, n), optimal_split(scaled, n)
    assert a.partition == b.partition
    assert b.delay_us == factor * a.delay_us


def test_paper_literal_cut_differs_from_delay():
    layers = (
        LayerProfile("v1", 1 * S, 1 * S, 1_000_000, 1_000_000),
        LayerProfile("v2", 5 * S, 1 * S, 3_000_000, 1_000_000),
    )
    p = ModelProfile("literal", 4_000_000, layers, (("v1", "v2"),))
    c = Partition.from_device(p, {"v1"})
    lit = NetParams(1e6, 2e6, weight_mode=PAPER_LITERAL)
    con = NetParams(1e6, 2e6)
    assert partition_cut_value(build_split_dag(p, lit), c.device_set) != training_delay(p, c, lit)
    assert partition_cut_value(build_split_dag(p, con), c.device_set) == training_delay(p, c, con)


def test_decision_to_dict():
    d = optimal_split(chain3(), MB_S).to_dict()
    assert d["device_set"] == ["input", "v1"]
    assert d["delay_us"] == 4 * S
    assert d["method"] == "linear-bruteforce"
