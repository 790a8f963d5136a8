"""Scenario configuration, device trajectories and the seeded rate trace."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from ..delay import CONSISTENT, NetParams
from .channel import (
    BANDS,
    RateTable,
    noise_floor_dbm,
    path_loss_db,
    shadow_fading_db,
    shannon_rate_Bps,
    transmit_power_dbm,
)

log = logging.getLogger(__name__)

KMH = 1000 / 3600
DEFAULT_TIERS = (1.0, 1.6, 2.5, 3.2)
CHANNEL_SIGMA_DB = {"good": 2.0, "normal": 4.0, "poor": 6.0}


@dataclass
class DeviceSpec:
    device_id: int
    tier_factor: float
    """multiplier on device-side compute time (>= 1 keeps layers server-favourable)"""
    start: tuple[float, float]
    velocity: tuple[float, float]
    """metres per second"""

    def position(self, t: float, cell_radius_m: float) -> tuple[float, float]:
        """Straight-line motion bouncing back and forth along the chord of the
        cell through the start point."""
        sx, sy = self.start
        vx, vy = self.velocity
        speed = math.hypot(vx, vy)
        if speed == 0 or t == 0:
            return sx, sy
        ux, uy = vx / speed, vy / speed
        b = sx * ux + sy * uy
        c = sx * sx + sy * sy - cell_radius_m**2
        root = math.sqrt(max(b * b - c, 0.0))
        lo, hi = -b - root, -b + root
        length = hi - lo
        if length <= 0:
            return sx, sy
        m = (-lo + speed * t) % (2 * length)
        along = lo + (m if m <= length else 2 * length - m)
        return sx + along * ux, sy + along * uy


@dataclass
class Scenario:
    band: str = "mmwave"
    channel_sigma_db: float = 4.0
    eirp_dbm: Optional[float] = None
    num_beams: Optional[int] = None
    path_loss_exponent: Optional[float] = None
    bandwidth_hz: Optional[float] = None
    noise_figure_db: float = 7.0
    devices: list[DeviceSpec] = field(default_factory=list)
    epochs: int = 300
    local_iters: int = 10
    seed: int = 0
    min_rate_Bps: float = 1000.0
    epoch_interval_s: float = 5.0
    cell_radius_m: float = 250.0
    bs_height_m: float = 10.0
    rate_table: Optional[str] = None
    weight_mode: str = CONSISTENT
    input_cost: bool = True

    def __post_init__(self) -> None:
        if self.band not in BANDS:
            raise ValueError(f"unknown band {self.band!r}; choose from {sorted(BANDS)}")
        b = BANDS[self.band]
        if self.eirp_dbm is None:
            self.eirp_dbm = b.eirp_dbm
        if self.num_beams is None:
            self.num_beams = b.num_beams
        if self.path_loss_exponent is None:
            self.path_loss_exponent = b.path_loss_exponent
        if self.bandwidth_hz is None:
            self.bandwidth_hz = b.bandwidth_hz
        if self.channel_sigma_db < 0:
            raise ValueError("channel_sigma_db must be >= 0")
        if self.min_rate_Bps <= 0:
            raise ValueError("min_rate_Bps must be > 0")
        if self.epochs < 0 or self.local_iters < 1:
            raise ValueError("epochs must be >= 0 and local_iters >= 1")
        if not self.devices:
            self.devices = default_devices(self.seed, cell_radius_m=self.cell_radius_m)
        self._table = RateTable.from_csv(self.rate_table) if self.rate_table else None

    @property
    def freq_ghz(self) -> float:
        return BANDS[self.band].freq_ghz

    @classmethod
    def default(cls, band: str = "mmwave", channel: str = "normal", **kw) -> "Scenario":
        return cls(band=band, channel_sigma_db=CHANNEL_SIGMA_DB[channel], **kw)

    def net_params(self, rate_up: float, rate_down: float) -> NetParams:
        return NetParams(rate_up, rate_down, local_iters=self.local_iters,
                         weight_mode=self.weight_mode, input_cost=self.input_cost)

    def distance_m(self, device: DeviceSpec, t: float) -> float:
        x, y = device.position(t, self.cell_radius_m)
        return math.sqrt(x * x + y * y + self.bs_height_m**2)

    def rate_from_snr(self, snr_db: float) -> float:
        if self._table is not None:
            rate = self._table.rate_Bps(snr_db)
        else:
            rate = shannon_rate_Bps(self.bandwidth_hz, snr_db)
        return max(rate, self.min_rate_Bps)

    def snr_db(self, distance_m: float, chi_db: float) -> float:
        p_tx = transmit_power_dbm(self.eirp_dbm, self.num_beams)
        pl = path_loss_db(self.freq_ghz, distance_m, self.path_loss_exponent, chi_db)
        return p_tx - pl - noise_floor_dbm(self.bandwidth_hz, self.noise_figure_db)


def default_devices(seed: int, num_devices: int = 20, *, cell_radius_m: float = 250.0,
                    speed_kmh: float = 30.0, tiers=DEFAULT_TIERS) -> list[DeviceSpec]:
    """Devices at uniform positions in the cell heading in uniform directions;
    tier ``i % len(tiers)``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    out = []
    speed = speed_kmh * KMH
    for i in range(num_devices):
        r = cell_radius_m * math.sqrt(rng.uniform())
        a, h = rng.uniform(0, 2 * math.pi, size=2)
        out.append(DeviceSpec(i, tiers[i % len(tiers)], (r * math.cos(a), r * math.sin(a)),
                              (speed * math.cos(h), speed * math.sin(h))))
    return out


def link_rate(sc: Scenario, device: DeviceSpec, t: float,
              chi_up_db: float = 0.0, chi_down_db: float = 0.0) -> tuple[float, float]:
    """(R_D, R_S) in bytes/s: same geometry and transmit power in both
    directions, separate shadow-fading values."""
    d = sc.distance_m(device, t)
    return sc.rate_from_snr(sc.snr_db(d, chi_up_db)), sc.rate_from_snr(sc.snr_db(d, chi_down_db))


@dataclass(frozen=True)
class EpochRates:
    epoch: int
    device: int
    t_s: float
    distance_m: float
    rate_up_Bps: float
    rate_down_Bps: float


def rate_trace(sc: Scenario) -> list[EpochRates]:
    """Round-robin device schedule with realized link rates for every epoch.

    Each device draws its fading from its own substream of the scenario seed,
    so the trace does not depend on the strategy being evaluated.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence([sc.seed, 1]).spawn(len(sc.devices))]
    out = []
    for e in range(sc.epochs):
        i = e % len(sc.devices)
        dev = sc.devices[i]
        t = e * sc.epoch_interval_s
        chi = shadow_fading_db(streams[i], sc.channel_sigma_db, size=2)
        up, down = link_rate(sc, dev, t, float(chi[0]), float(chi[1]))
        out.append(EpochRates(e, dev.device_id, t, sc.distance_m(dev, t), up, down))
    log.debug("rate trace: %d epochs, band %s, sigma %.1f dB", len(out), sc.band, sc.channel_sigma_db)
    return out


# -- config document --------------------------------------------------------


def scenario_to_dict(sc: Scenario) -> dict:
    d = {f.name: getattr(sc, f.name) for f in fields(sc)}
    d["devices"] = [asdict(dev) for dev in sc.devices]
    return d


def scenario_from_dict(doc: dict) -> Scenario:
    known = {f.name for f in fields(Scenario)}
    extra = set(doc) - known - {"channel", "num_devices"}
    if extra:
        raise ValueError(f"unknown scenario keys: {sorted(extra)}")
    kw = {k: v for k, v in doc.items() if k in known and k != "devices"}
    if "channel" in doc:
        kw.setdefault("channel_sigma_db", CHANNEL_SIGMA_DB[doc["channel"]])
    if doc.get("devices"):
        kw["devices"] = [
            DeviceSpec(int(d["device_id"]), float(d["tier_factor"]),
                       tuple(map(float, d["start"])), tuple(map(float, d["velocity"])))
            for d in doc["devices"]
        ]
    elif "num_devices" in doc:
        kw["devices"] = default_devices(int(doc.get("seed", 0)), int(doc["num_devices"]),
                                        cell_radius_m=float(doc.get("cell_radius_m", 250.0)))
    return Scenario(**kw)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
