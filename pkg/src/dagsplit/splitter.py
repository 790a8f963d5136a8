"""Delay-optimal device/server split via minimum s-t cut."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .delay import CONSISTENT, NetParams, Partition, crossing_back_edges, training_delay
from .errors import SplitError
from .graph import (
    SplitDag,
    build_split_dag,
    multi_child_parents,
    partition_cut_value,
    restructure,
    to_flow_network,
)
from .profile import ModelProfile

log = logging.getLogger(__name__)

METHODS = ("dag-mincut", "linear-bruteforce", "blockwise", "oracle")


@dataclass(frozen=True)
class SplitDecision:
    partition: Partition
    cut_value_us: int
    delay_us: int
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "device_set": sorted(self.partition.device_set),
            "server_set": sorted(self.partition.server_set),
            "cut_value_us": self.cut_value_us,
            "delay_us": self.delay_us,
        }


def map_cut_to_partition(g: SplitDag, source_side, p: ModelProfile) -> Partition:
    """Each layer takes the side of its placement vertex (aux or block vertex
    when present); broadcast and auxiliary vertices are then dropped."""
    side = set(source_side)
    device = {lid for lid, v in g.placement.items() if v in side}
    return Partition.from_device(p, device)


def _verified(p, n, g, partition, cut_value, method) -> SplitDecision:
    bad = crossing_back_edges(p, partition)
    if bad:
        u, v = bad[0]
        raise SplitError(
            f"min cut maps to an inconsistent partition: server layer {u!r} feeds "
            f"device layer {v!r} (device-faster layer or precedence disabled?)"
        )
    delay = training_delay(p, partition, n)
    if n.weight_mode == CONSISTENT and delay != cut_value:
        raise SplitError(f"cut value {cut_value} us != training delay {delay} us for {method}")
    return SplitDecision(partition, cut_value, delay, method)


def solve_dag(g: SplitDag, p: ModelProfile, n: NetParams, method: str, precedence: bool = True):
    """Min cut of a (restructured) split DAG, mapped back to layers and checked."""
    cut = to_flow_network(g, precedence=precedence).min_cut()
    partition = map_cut_to_partition(g, cut.source_side, p)
    return _verified(p, n, g, partition, cut.value, method)


def brute_force_linear(p: ModelProfile, n: NetParams) -> SplitDecision:
    """Evaluate all L+1 prefix partitions of a chain model."""
    if not p.is_chain():
        raise SplitError("brute_force_linear requires a chain model")
    order = list(p.topological_order)
    best = None
    for k in range(1, len(order) + 1):
        c = Partition.from_device(p, order[:k])
        d = training_delay(p, c, n)
        if best is None or d < best[0]:  # strict: earlier (smaller) prefix wins ties
            best = (d, c)
    delay, partition = best
    if n.weight_mode == CONSISTENT:
        cut = delay
    else:
        cut = partition_cut_value(build_split_dag(p, n), partition.device_set)
    return SplitDecision(partition, cut, delay, "linear-bruteforce")


def optimal_split(p: ModelProfile, n: NetParams, *, precedence: bool = True) -> SplitDecision:
    g = build_split_dag(p, n)
    if not multi_child_parents(g) and p.is_chain():
        return brute_force_linear(p, n)
    g2 = restructure(g)
    log.debug("split dag: %d vertices, %d arcs", g2.num_vertices, g2.num_arcs)
    return solve_dag(g2, p, n, "dag-mincut", precedence=precedence)


__all__ = [
    "SplitDecision",
    "optimal_split",
    "brute_force_linear",
    "map_cut_to_partition",
    "solve_dag",
]
