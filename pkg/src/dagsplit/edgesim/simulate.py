"""Per-epoch strategy evaluation over a shared rate trace."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from ..blockwise import blockwise_split
from ..delay import CONSISTENT, NetParams, Partition, boundary_set, training_delay
from ..errors import SplitError
from ..graph import build_split_dag, restructure, sum_dags, to_flow_network
from ..profile import INPUT_ID, LayerProfile, ModelProfile
from ..splitter import map_cut_to_partition
from .scenario import EpochRates, Scenario, rate_trace

log = logging.getLogger(__name__)

STRATEGIES = ("proposed", "oss", "device-only")


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    device: int
    rate_up_Bps: float
    rate_down_Bps: float
    strategy: str
    partition: Partition
    delay_us: int

    @property
    def cut_size(self) -> int:
        """Number of model layers kept on the device."""
        return len(self.partition.device_set - {INPUT_ID})

    def row(self) -> dict:
        return {
            "epoch": self.epoch,
            "device": self.device,
            "R_D": f"{self.rate_up_Bps:.3f}",
            "R_S": f"{self.rate_down_Bps:.3f}",
            "strategy": self.strategy,
            "cut_size": self.cut_size,
            "delay_us": self.delay_us,
        }


def scale_device_compute(p: ModelProfile, factor: float) -> ModelProfile:
    if factor == 1:
        return p
    layers = tuple(
        LayerProfile(l.id, round(l.xi_device_us * factor), l.xi_server_us, l.param_bytes, l.output_bytes)
        for l in p.layers
    )
    return p.replace(layers=layers)


class _TierProfiles:
    def __init__(self, p: ModelProfile, sc: Scenario) -> None:
        self.base = p
        self._tier = {d.device_id: d.tier_factor for d in sc.devices}
        self._cache = lru_cache(maxsize=None)(lambda f: scale_device_compute(p, f))

    def __call__(self, device: int) -> ModelProfile:
        return self._cache(self._tier[device])


def oss_partition(sc: Scenario, p: ModelProfile, trace: Optional[list[EpochRates]] = None) -> Partition:
    """Best single partition for the whole trace.

    Total delay is additive over epochs, so it equals the cut value of the
    arc-wise sum of the per-epoch split DAGs; one min cut over that sum
    minimizes over every consistent partition.
    """
    trace = rate_trace(sc) if trace is None else trace
    if not trace:
        return Partition.all_server(p)
    tiers = _TierProfiles(p, sc)
    dags = [build_split_dag(tiers(r.device), sc.net_params(r.rate_up_Bps, r.rate_down_Bps)) for r in trace]
    g = restructure(sum_dags(dags))
    cut = to_flow_network(g).min_cut()
    part = map_cut_to_partition(g, cut.source_side, p)
    if sc.weight_mode == CONSISTENT:
        total = sum(training_delay(tiers(r.device), part, sc.net_params(r.rate_up_Bps, r.rate_down_Bps))
                    for r in trace)
        if total != cut.value:
            raise SplitError(f"oss: summed cut {cut.value} us != total delay {total} us")
    return part


def simulate(
    sc: Scenario,
    strategy: str,
    p: ModelProfile,
    trace: Optional[list[EpochRates]] = None,
) -> list[EpochReport]:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    trace = rate_trace(sc) if trace is None else trace
    tiers = _TierProfiles(p, sc)
    fixed = None
    if strategy == "oss":
        fixed = oss_partition(sc, p, trace)
    elif strategy == "device-only":
        fixed = Partition.all_device(p)
    out = []
    for r in trace:
        prof = tiers(r.device)
        net = sc.net_params(r.rate_up_Bps, r.rate_down_Bps)
        if fixed is None:
            d = blockwise_split(prof, net)
            part, delay = d.partition, d.delay_us
        else:
            part, delay = fixed, training_delay(prof, fixed, net)
        out.append(EpochReport(r.epoch, r.device, r.rate_up_Bps, r.rate_down_Bps, strategy, part, delay))
    return out


def fixed_cut_family(p: ModelProfile, extra: Iterable[Partition] = ()) -> list[Partition]:
    """Every topological-prefix partition (all-server through device-only)
    plus any ``extra`` partitions."""
    order = [lid for lid in p.topological_order if lid != INPUT_ID]
    family = {Partition.from_device(p, order[:k]) for k in range(len(order) + 1)}
    family.update(extra)
    return sorted(family, key=Partition.sort_key)


class _FastDelay:
    """training_delay for many partitions under one (profile, net) pair; the
    per-layer rounded terms are computed once."""

    def __init__(self, p: ModelProfile, n: NetParams) -> None:
        self.p, self.n = p, n
        self.model = {l.id: n.round_trip_us(l.param_bytes) for l in p.layers}
        self.model[INPUT_ID] = n.round_trip_us(p.input.param_bytes)
        self.smashed = {lid: n.round_trip_us(p.by_id[lid].output_bytes) for lid in p.layer_ids}
        if not n.input_cost:
            self.smashed[INPUT_ID] = 0

    def __call__(self, c: Partition, boundary: frozenset[str]) -> int:
        by_id = self.p.by_id
        compute = sum(by_id[l].xi_device_us for l in c.device_set)
        compute += sum(by_id[l].xi_server_us for l in c.server_set)
        smashed = sum(self.smashed[l] for l in boundary)
        return self.n.local_iters * (compute + smashed) + sum(self.model[l] for l in c.device_set)


def worst_fixed_cut(
    sc: Scenario,
    p: ModelProfile,
    trace: Optional[list[EpochRates]] = None,
    extra: Iterable[Partition] = (),
) -> list[int]:
    """Per-epoch maximum delay over :func:`fixed_cut_family`."""
    trace = rate_trace(sc) if trace is None else trace
    family = fixed_cut_family(p, extra)
    boundaries = [boundary_set(p, c) for c in family]
    tiers = _TierProfiles(p, sc)
    out = []
    for r in trace:
        fast = _FastDelay(tiers(r.device), sc.net_params(r.rate_up_Bps, r.rate_down_Bps))
        out.append(max(fast(c, b) for c, b in zip(family, boundaries)))
    return out


def compare(sc: Scenario, p: ModelProfile, strategies: Iterable[str] = STRATEGIES) -> dict[str, list[EpochReport]]:
    trace = rate_trace(sc)
    return {s: simulate(sc, s, p, trace) for s in strategies}


def summarize(sc: Scenario, reports: dict[str, list[EpochReport]]) -> dict:
    totals = {s: sum(r.delay_us for r in rows) for s, rows in reports.items()}
    doc = {
        "band": sc.band,
        "channel_sigma_db": sc.channel_sigma_db,
        "epochs": sc.epochs,
        "devices": len(sc.devices),
        "seed": sc.seed,
        "total_delay_us": totals,
        "mean_delay_us": {s: (totals[s] / len(rows) if rows else 0.0) for s, rows in reports.items()},
    }
    if "proposed" in totals:
        doc["reduction_pct"] = {
            f"vs_{s}": (100.0 * (t - totals["proposed"]) / t if t else 0.0)
            for s, t in totals.items() if s != "proposed"
        }
    return doc


CSV_FIELDS = ("epoch", "device", "R_D", "R_S", "strategy", "cut_size", "delay_us")


def write_reports_csv(path, reports: Iterable[EpochReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in reports:
            w.writerow(r.row())


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
