import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dagsplit.delay import (
    NetParams,
    Partition,
    boundary_set,
    crossing_back_edges,
    is_consistent_partition,
    round_half_away,
    training_delay,
    transfer_us,
)
from dagsplit.errors import PartitionError
from dagsplit.fixtures import chain3, diamond
from dagsplit.oracle import enumerate_partitions
from dagsplit.profile import INPUT_ID, LayerProfile, ModelProfile
from dagsplit.randomgen import random_dag_profile, random_net

S = 10**6
MB_S = NetParams(1e6, 1e6)


def eq7_oracle(p, device, n):
    """Straight transcription of the per-epoch delay sum, every size/rate
    term rounded on its own."""
    server = set(p.layer_ids) - set(device)
    edges = list(p.data_edges)
    boundary = {u for u, v in edges if u in device and v in server}
    if not n.input_cost:
        boundary.discard(INPUT_ID)
    by = p.by_id

    def r(size, rate):
        return round_half_away(Fraction(size) * S / Fraction(rate))

    per_iter = sum(by[v].xi_device_us for v in device) + sum(by[v].xi_server_us for v in server)
    per_iter += sum(r(by[v].output_bytes, n.rate_up_Bps) + r(by[v].output_bytes, n.rate_down_Bps) for v in boundary)
    model = sum(r(by[v].param_bytes, n.rate_up_Bps) + r(by[v].param_bytes, n.rate_down_Bps) for v in device)
    return n.local_iters * per_iter + model


def dev(p, *ids):
    return Partition.from_device(p, ids)


def test_rounding_ties_away_from_zero():
    assert round_half_away(Fraction(1, 2)) == 1
    assert round_half_away(Fraction(-1, 2)) == -1
    assert round_half_away(Fraction(5, 2)) == 3
    assert round_half_away(Fraction(7, 3)) == 2
    assert transfer_us(1, 2e6) == 1  # 0.5 us
    assert transfer_us(0, 3.3) == 0
    assert transfer_us(10**6, 1e6) == S


def test_net_params_validation():
    with pytest.raises(ValueError):
        NetParams(0, 1)
    with pytest.raises(ValueError):
        NetParams(1, 1, local_iters=0)
    with pytest.raises(ValueError):
        NetParams(1, 1, weight_mode="other")


def test_consistency_examples():
    p = ModelProfile("c", 1, (LayerProfile("v1", 1, 1, 0, 1), LayerProfile("v2", 1, 1, 0, 1)), (("v1", "v2"),))
    assert is_consistent_partition(p, dev(p, "v1"))
    assert not is_consistent_partition(p, dev(p, "v2"))
    assert crossing_back_edges(p, dev(p, "v2")) == [("v1", "v2")]
    assert is_consistent_partition(p, dev(p))


def test_partition_must_cover_known_layers():
    p = chain3()
    with pytest.raises(PartitionError):
        training_delay(p, Partition(frozenset({INPUT_ID, "v9"}), frozenset({"v1", "v2"})), MB_S)
    with pytest.raises(PartitionError):
        training_delay(p, dev(p, "v2"), MB_S)


def test_boundary_examples():
    p = diamond()
    assert boundary_set(p, Partition.all_server(p)) == {INPUT_ID}
    assert boundary_set(p, Partition.all_device(p)) == set()
    assert boundary_set(p, dev(p, "v1")) == {"v1"}


def test_chain3_delays():
    p = chain3()
    assert training_delay(p, dev(p, "v1"), MB_S) == 4 * S
    assert training_delay(p, dev(p), MB_S) == 10 * S
    assert training_delay(p, dev(p, "v1", "v2"), MB_S) == 6 * S


def test_empty_model_has_zero_delay():
    p = ModelProfile("empty", 5000, (), ())
    assert training_delay(p, Partition.all_device(p), MB_S) == 0


def test_device_only_sends_no_activations():
    p = chain3()
    n = NetParams(1e6, 1e6, local_iters=3)
    assert training_delay(p, Partition.all_device(p), n) == 3 * (1 + 5) * S


def test_input_cost_flag():
    p = chain3()
    n = NetParams(1e6, 1e6, input_cost=False)
    assert training_delay(p, dev(p), n) == 2 * S


def test_matches_oracle_on_random_instances():
    rng = random.Random(5)
    for _ in range(300):
        p = random_dag_profile(rng, rng.randint(1, 8), nonlinear=False)
        n = random_net(rng, input_cost=rng.random() < 0.8)
        for c in enumerate_partitions(p):
            assert training_delay(p, c, n) == eq7_oracle(p, c.device_set, n)


def _move_delta(p, c, v, n):
    """Closed-form change when v moves from server to device (all parents
    already device-side): compute difference, v's own boundary entry, parents
    that stop being boundary, and v's model transfer."""
    lay = p.by_id[v]
    delta = n.local_iters * (lay.xi_device_us - lay.xi_server_us)
    delta += n.round_trip_us(lay.param_bytes)
    if any(ch in c.server_set for ch in p.children[v]):
        delta += n.local_iters * n.round_trip_us(lay.output_bytes)
    for u in p.parents[v]:
        others = [ch for ch in p.children[u] if ch != v and ch in c.server_set]
        if not others and (u != INPUT_ID or n.input_cost):
            delta -= n.local_iters * n.round_trip_us(p.by_id[u].output_bytes)
    return delta


@given(st.integers(0, 100_000))
def test_single_move_delta(seed):
    rng = random.Random(seed)
    p = random_dag_profile(rng, rng.randint(1, 9), nonlinear=False)
    n = random_net(rng, exact=True, input_cost=rng.random() < 0.8)
    parts = list(enumerate_partitions(p))
    c1 = rng.choice(parts)
    movable = [v for v in c1.server_set if all(u in c1.device_set for u in p.parents[v])]
    if not movable:
        return
    v = rng.choice(movable)
    c2 = Partition.from_device(p, c1.device_set | {v})
    assert training_delay(p, c2, n) - training_delay(p, c1, n) == _move_delta(p, c1, v, n)


def test_move_that_frees_no_parent_never_helps():
    # xi_D >= xi_S: if every parent of v stays on the boundary, putting v on
    # the device only adds compute, model transfer and possibly v's own data
    rng = random.Random(11)
    checked = 0
    for _ in range(300):
        p = random_dag_profile(rng, rng.randint(2, 8))
        n = random_net(rng)
        for c in enumerate_partitions(p):
            b1 = boundary_set(p, c)
            for v in c.server_set:
                if not all(u in c.device_set for u in p.parents[v]):
                    continue
                c2 = Partition.from_device(p, c.device_set | {v})
                if set(p.parents[v]) & b1 <= boundary_set(p, c2):
                    assert training_delay(p, c2, n) >= training_delay(p, c, n)
                    checked += 1
    assert checked > 100


@given(st.integers(0, 100_000))
def test_delay_ignores_layer_and_edge_order(seed):
    rng = random.Random(seed)
    p = random_dag_profile(rng, rng.randint(1, 8), nonlinear=False)
    n = random_net(rng)
    layers = list(p.layers)
    edges = list(p.edges)
    rng.shuffle(layers)
    rng.shuffle(edges)
    q = ModelProfile(p.model_name, p.input_bytes, tuple(layers), tuple(edges))
    for c in enumerate_partitions(p):
        assert training_delay(p, c, n) == training_delay(q, c, n)
