import csv
import json
import math
import random

import numpy as np
import pytest

from dagsplit.delay import Partition, training_delay
from dagsplit.edgesim.channel import (
    RateTable,
    noise_floor_dbm,
    path_loss_db,
    shadow_fading_db,
    shannon_rate_Bps,
    transmit_power_dbm,
)
from dagsplit.edgesim.scenario import (
    KMH,
    DeviceSpec,
    Scenario,
    default_devices,
    link_rate,
    rate_trace,
    scenario_from_dict,
    scenario_to_dict,
)
from dagsplit.edgesim.simulate import (
    compare,
    fixed_cut_family,
    oss_partition,
    scale_device_compute,
    simulate,
    summarize,
    worst_fixed_cut,
    write_reports_csv,
    write_summary,
)
from dagsplit.fixtures import fig3, inception_net, residual_net
from dagsplit.oracle import enumerate_partitions
from dagsplit.profile import validate_profile
from dagsplit.randomgen import random_dag_profile


def still(x=100.0, y=0.0, tier=1.0, i=0):
    return DeviceSpec(i, tier, (x, y), (0.0, 0.0))


def test_path_loss_examples():
    assert path_loss_db(1, 1, 2, 0) == pytest.approx(32.5)
    assert path_loss_db(28, 100, 2, 0) == pytest.approx(32.5 + 20 * math.log10(28) + 40)
    assert path_loss_db(28, 100, 2, 0) == pytest.approx(101.44, abs=0.01)
    assert path_loss_db(28, 100, 2, 3.0) == pytest.approx(path_loss_db(28, 100, 2) + 3.0)
    with pytest.raises(ValueError):
        path_loss_db(28, 0, 2)


def test_doubling_distance_adds_six_db():
    assert path_loss_db(2.1, 200, 2) - path_loss_db(2.1, 100, 2) == pytest.approx(6.0206, abs=1e-4)
    sc = Scenario(band="sub6", bs_height_m=0.0, path_loss_exponent=2.0, devices=[still()])
    rates = [link_rate(sc, still(d), 0.0)[0] for d in (25, 50, 100, 200, 400)]
    assert rates == sorted(rates, reverse=True)


def test_shadow_fading_statistics():
    chi = shadow_fading_db(np.random.default_rng(0), 4.0, size=100_000)
    assert abs(float(np.mean(chi))) < 0.05
    assert float(np.std(chi)) == pytest.approx(4.0, rel=0.02)
    assert shadow_fading_db(np.random.default_rng(0), 0.0) == 0.0


def test_shannon_rate():
    assert shannon_rate_Bps(1e6, 0.0) == pytest.approx(125_000)


def test_radio_helpers():
    assert transmit_power_dbm(50, 64) == pytest.approx(50 - 18.0618, abs=1e-4)
    assert noise_floor_dbm(1.0, 0.0) == -174.0


def test_golden_rates_at_100m():
    sc = Scenario(band="mmwave", bs_height_m=0.0, devices=[still()])
    up, down = link_rate(sc, sc.devices[0], 0.0)
    assert up == down == pytest.approx(64843552.12214621, rel=1e-12)
    sc = Scenario(band="sub6", bs_height_m=0.0, devices=[still()])
    assert link_rate(sc, sc.devices[0], 0.0)[0] == pytest.approx(19122517.74529794, rel=1e-12)


def test_golden_trace_prefix():
    tr = rate_trace(Scenario.default("mmwave", "normal", seed=0, epochs=3))
    got = [(r.device, r.rate_up_Bps, r.rate_down_Bps) for r in tr]
    want = [
        (0, 34744862.43409443, 47550972.09791911),
        (1, 117618499.91764575, 78177621.46813218),
        (2, 30659388.39311376, 33467384.39927525),
    ]
    for (d1, u1, w1), (d2, u2, w2) in zip(got, want):
        assert d1 == d2
        assert u1 == pytest.approx(u2, rel=1e-9) and w1 == pytest.approx(w2, rel=1e-9)


def test_rate_table(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("snr_db,rate_bps\n0,1000000\n10,8000000\n-5,200000\n")
    table = RateTable.from_csv(path)
    assert table.rate_Bps(-10) == 0.0
    assert table.rate_Bps(-5) == 25_000
    assert table.rate_Bps(3) == 125_000
    assert table.rate_Bps(30) == 1_000_000
    sc = Scenario(band="sub6", rate_table=str(path), devices=[still(5000)], min_rate_Bps=500.0)
    assert link_rate(sc, sc.devices[0], 0.0) == (500.0, 500.0)


def test_rates_always_positive():
    sc = Scenario(band="mmwave", devices=[still(1e7)], channel_sigma_db=6.0, epochs=40)
    assert all(r.rate_up_Bps >= sc.min_rate_Bps and r.rate_down_Bps > 0 for r in rate_trace(sc))


def test_defaults():
    sc = Scenario.default("sub6", "poor")
    assert (sc.eirp_dbm, sc.num_beams, sc.channel_sigma_db) == (40.0, 16, 6.0)
    assert len(sc.devices) == 20
    sc = Scenario.default("mmwave", "good")
    assert (sc.eirp_dbm, sc.num_beams, sc.channel_sigma_db) == (50.0, 64, 2.0)
    assert all(math.hypot(*d.velocity) == pytest.approx(30 * KMH) for d in sc.devices)
    with pytest.raises(ValueError):
        Scenario(band="lte")


def test_devices_stay_in_cell_and_bounce():
    rng = random.Random(0)
    for d in default_devices(3, 20):
        for _ in range(50):
            x, y = d.position(rng.uniform(0, 5000), 250.0)
            assert math.hypot(x, y) <= 250.0 + 1e-6
    d = DeviceSpec(0, 1.0, (0.0, 0.0), (10.0, 0.0))
    assert d.position(25.0, 250.0) == pytest.approx((250.0, 0.0))
    assert d.position(35.0, 250.0) == pytest.approx((150.0, 0.0))
    assert d.position(100.0, 250.0) == pytest.approx((0.0, 0.0), abs=1e-9)
    assert still(7, 8).position(99.0, 250.0) == (7, 8)


def test_round_robin_and_determinism():
    sc = Scenario.default("mmwave", "normal", seed=5, epochs=45)
    a, b = rate_trace(sc), rate_trace(Scenario.default("mmwave", "normal", seed=5, epochs=45))
    assert [r.device for r in a] == [e % 20 for e in range(45)]
    assert a == b
    assert a != rate_trace(Scenario.default("mmwave", "normal", seed=6, epochs=45))


def test_trace_prefix_stable_when_extending_run():
    short = rate_trace(Scenario.default("sub6", "normal", seed=2, epochs=30))
    long = rate_trace(Scenario.default("sub6", "normal", seed=2, epochs=90))
    assert long[:30] == short


def test_scale_device_compute():
    p = fig3()
    q = scale_device_compute(p, 2.5)
    assert [l.xi_device_us for l in q.layers] == [round(l.xi_device_us * 2.5) for l in p.layers]
    assert [l.xi_server_us for l in q.layers] == [l.xi_server_us for l in p.layers]
    assert validate_profile(q) == []
    assert scale_device_compute(p, 1) is p


def test_per_epoch_dominance_small_model():
    p = inception_net()
    for band in ("sub6", "mmwave"):
        sc = Scenario.default(band, "normal", seed=1, epochs=60)
        reps = compare(sc, p)
        worst = worst_fixed_cut(sc, p, extra=[reps["oss"][0].partition])
        for a, b, c, w in zip(reps["proposed"], reps["oss"], reps["device-only"], worst):
            assert a.delay_us <= b.delay_us <= w
            assert a.delay_us <= c.delay_us <= w


def test_oss_is_best_fixed_partition():
    rng = random.Random(3)
    for seed in range(6):
        p = random_dag_profile(rng, rng.randint(3, 8))
        sc = Scenario(band="sub6", seed=seed, epochs=25, devices=default_devices(seed, 5))
        trace = rate_trace(sc)
        tiers = {d.device_id: d.tier_factor for d in sc.devices}

        def total(c):
            return sum(
                training_delay(scale_device_compute(p, tiers[r.device]), c, sc.net_params(r.rate_up_Bps, r.rate_down_Bps))
                for r in trace
            )

        best = min(total(c) for c in enumerate_partitions(p))
        assert total(oss_partition(sc, p, trace)) == best


def test_static_channel_proposed_equals_oss():
    devices = [still(120.0, 0.0, 1.6, i) for i in range(4)]
    sc = Scenario(band="mmwave", channel_sigma_db=0.0, devices=devices, epochs=12)
    p = residual_net()
    props = simulate(sc, "proposed", p)
    oss = simulate(sc, "oss", p)
    assert [r.delay_us for r in props] == [r.delay_us for r in oss]


def test_worst_fixed_cut_matches_direct_evaluation():
    p = fig3()
    sc = Scenario(band="sub6", epochs=10, devices=default_devices(0, 3))
    trace = rate_trace(sc)
    got = worst_fixed_cut(sc, p, trace)
    family = fixed_cut_family(p)
    assert Partition.all_device(p) in family and Partition.all_server(p) in family
    tiers = {d.device_id: d.tier_factor for d in sc.devices}
    for r, w in zip(trace, got):
        q = scale_device_compute(p, tiers[r.device])
        n = sc.net_params(r.rate_up_Bps, r.rate_down_Bps)
        assert w == max(training_delay(q, c, n) for c in family)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        simulate(Scenario(epochs=1), "random", fig3())


def test_reports_and_summary_files(tmp_path):
    sc = Scenario.default("mmwave", "normal", epochs=8)
    reps = compare(sc, fig3())
    write_reports_csv(tmp_path / "r.csv", [r for rows in reps.values() for r in rows])
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert len(rows) == 24
    assert list(rows[0]) == ["epoch", "device", "R_D", "R_S", "strategy", "cut_size", "delay_us"]
    summary = summarize(sc, reps)
    write_summary(tmp_path / "s.json", summary)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert set(doc["total_delay_us"]) == {"proposed", "oss", "device-only"}
    assert doc["reduction_pct"]["vs_oss"] >= 0


def test_scenario_document_round_trip(tmp_path):
    sc = Scenario.default("sub6", "good", seed=9, epochs=7)
    doc = json.loads(json.dumps(scenario_to_dict(sc)))
    back = scenario_from_dict(doc)
    assert rate_trace(back) == rate_trace(sc)
    short = scenario_from_dict({"band": "mmwave", "channel": "poor", "num_devices": 4, "seed": 1})
    assert len(short.devices) == 4 and short.channel_sigma_db == 6.0
    with pytest.raises(ValueError):
        scenario_from_dict({"bogus": 1})
