"""Training delay of an explicit device/server partition.

All delays are integer microseconds. Every size/rate division is rounded to the
nearest microsecond (ties away from zero) *per term*, so that the same rounded
terms can be placed on graph arcs and cut values compare exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .errors import PartitionError
from .profile import INPUT_ID, ModelProfile

US_PER_S = 10**6

CONSISTENT = "consistent"
PAPER_LITERAL = "paper-literal"
WEIGHT_MODES = (CONSISTENT, PAPER_LITERAL)


def round_half_away(x: Fraction) -> int:
    if x >= 0:
        return int((x + Fraction(1, 2)).__floor__())
    return -int((-x + Fraction(1, 2)).__floor__())


@lru_cache(maxsize=1 << 16)
def transfer_us(size_bytes: int, rate_Bps: float) -> int:
    """Time to move ``size_bytes`` at ``rate_Bps``, in whole microseconds."""
    if size_bytes == 0:
        return 0
    return round_half_away(Fraction(size_bytes) * US_PER_S / Fraction(rate_Bps))


@dataclass(frozen=True)
class NetParams:
    rate_up_Bps: float
    rate_down_Bps: float
    local_iters: int = 1
    weight_mode: str = CONSISTENT
    input_cost: bool = True

    def __post_init__(self) -> None:
        if not (self.rate_up_Bps > 0 and self.rate_down_Bps > 0):
            raise ValueError("rates must be positive")
        if self.local_iters < 1:
            raise ValueError("local_iters must be >= 1")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")

    def up_us(self, size_bytes: int) -> int:
        return transfer_us(size_bytes, self.rate_up_Bps)

    def down_us(self, size_bytes: int) -> int:
        return transfer_us(size_bytes, self.rate_down_Bps)

    def round_trip_us(self, size_bytes: int) -> int:
        """Upload plus download of ``size_bytes``, each term rounded separately."""
        return self.up_us(size_bytes) + self.down_us(size_bytes)


@dataclass(frozen=True)
class Partition:
    device_set: frozenset[str]
    server_set: frozenset[str]

    @classmethod
    def from_device(cls, p: ModelProfile, device_ids: Iterable[str]) -> "Partition":
        device = frozenset(device_ids) | {INPUT_ID}
        unknown = device - set(p.layer_ids)
        if unknown:
            raise PartitionError(f"unknown layer ids {sorted(unknown)}")
        return cls(device, frozenset(p.layer_ids) - device)

    @classmethod
    def all_device(cls, p: ModelProfile) -> "Partition":
        return cls.from_device(p, p.layer_ids)

    @classmethod
    def all_server(cls, p: ModelProfile) -> "Partition":
        return cls.from_device(p, ())

    def sort_key(self) -> tuple:
        """Tie-break order: fewer device layers first, then lexicographic ids."""
        return (len(self.device_set), tuple(sorted(self.device_set)))

    def side(self, layer_id: str) -> str:
        return "device" if layer_id in self.device_set else "server"


def _check_cover(p: ModelProfile, c: Partition) -> None:
    ids = set(p.layer_ids)
    extra = (c.device_set | c.server_set) - ids
    if extra:
        raise PartitionError(f"unknown layer ids {sorted(extra)}")
    if c.device_set & c.server_set:
        raise PartitionError("device and server sets intersect")
    missing = ids - c.device_set - c.server_set
    if missing:
        raise PartitionError(f"partition does not cover {sorted(missing)}")
    if INPUT_ID not in c.device_set:
        raise PartitionError("the input pseudo-layer must be device-side")


def crossing_back_edges(p: ModelProfile, c: Partition) -> list[tuple[str, str]]:
    return [(u, v) for u, v in p.data_edges if u in c.server_set and v in c.device_set]


def is_consistent_partition(p: ModelProfile, c: Partition) -> bool:
    """No server-side layer feeds a device-side layer."""
    _check_cover(p, c)
    return not crossing_back_edges(p, c)


def _require_consistent(p: ModelProfile, c: Partition) -> None:
    if not is_consistent_partition(p, c):
        u, v = crossing_back_edges(p, c)[0]
        raise PartitionError(f"inconsistent partition: server layer {u!r} feeds device layer {v!r}")


def boundary_set(p: ModelProfile, c: Partition) -> frozenset[str]:
    """Device-side layers with at least one server-side child."""
    _require_consistent(p, c)
    return frozenset(
        u for u in c.device_set if any(v in c.server_set for v in p.children[u])
    )


def training_delay(p: ModelProfile, c: Partition, n: NetParams) -> int:
    """Per-epoch training delay in microseconds.

    ``N * (device compute + smashed-data upload + server compute + gradient
    download) + device-model upload + device-model download``.
    """
    boundary = boundary_set(p, c)
    if not n.input_cost:
        boundary = boundary - {INPUT_ID}
    compute = 0
    model_transfer = 0
    for lid in c.device_set:
        layer = p.by_id[lid]
        compute += layer.xi_device_us
        model_transfer += n.round_trip_us(layer.param_bytes)
    for lid in c.server_set:
        compute += p.by_id[lid].xi_server_us
    smashed = sum(n.round_trip_us(p.by_id[lid].output_bytes) for lid in boundary)
    return n.local_iters * (compute + smashed) + model_transfer
