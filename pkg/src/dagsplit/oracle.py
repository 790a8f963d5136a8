"""Brute-force ground truth for small instances."""
from __future__ import annotations

from typing import Iterator

from .delay import NetParams, Partition, training_delay
from .errors import DagSplitError
from .profile import INPUT_ID, ModelProfile

MAX_ORACLE_LAYERS = 22


class InstanceTooLarge(DagSplitError, ValueError):
    pass


def enumerate_partitions(p: ModelProfile) -> Iterator[Partition]:
    """Every partition in which no server layer feeds a device layer.

    Device sets are exactly the ancestor-closed sets containing the input;
    each is produced once by deciding layers in topological order.
    """
    if len(p.layers) > MAX_ORACLE_LAYERS:
        raise InstanceTooLarge(f"{len(p.layers)} layers > {MAX_ORACLE_LAYERS}")
    order = [lid for lid in p.topological_order if lid != INPUT_ID]
    parents = p.parents
    all_ids = frozenset(p.layer_ids)

    def rec(i: int, device: list[str], device_set: set[str]) -> Iterator[Partition]:
        if i == len(order):
            d = frozenset(device_set)
            yield Partition(d, all_ids - d)
            return
        lid = order[i]
        yield from rec(i + 1, device, device_set)
        if all(u in device_set for u in parents[lid]):
            device_set.add(lid)
            yield from rec(i + 1, device, device_set)
            device_set.discard(lid)

    yield from rec(0, [], {INPUT_ID})


def oracle_optimal(p: ModelProfile, n: NetParams):
    """Argmin of training delay over all consistent partitions."""
    from .splitter import SplitDecision

    best = None
    best_key = None
    for c in enumerate_partitions(p):
        d = training_delay(p, c, n)
        key = (d, c.sort_key())
        if best_key is None or key < best_key:
            best, best_key = c, key
    return SplitDecision(best, best_key[0], best_key[0], "oracle")
