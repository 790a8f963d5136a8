"""Radio link model: log-distance path loss with shadow fading, Shannon rate."""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass

NOISE_PSD_DBM_HZ = -174.0


@dataclass(frozen=True)
class Band:
    name: str
    freq_ghz: float
    eirp_dbm: float
    num_beams: int
    bandwidth_hz: float
    path_loss_exponent: float


BANDS = {
    "sub6": Band("sub6", 2.1, 40.0, 16, 20e6, 3.0),
    "mmwave": Band("mmwave", 28.0, 50.0, 64, 100e6, 2.1),
}


def path_loss_db(f_ghz: float, d_m: float, eta: float, chi_db: float = 0.0) -> float:
    if f_ghz <= 0 or d_m <= 0:
        raise ValueError("frequency and distance must be positive")
    return 32.5 + 20 * math.log10(f_ghz) + 10 * eta * math.log10(d_m) + chi_db


def shadow_fading_db(rng, sigma_db: float, size=None):
    """Log-normal shadowing term chi ~ N(0, sigma^2) in dB (zero when sigma is 0)."""
    if sigma_db == 0:
        return 0.0 if size is None else [0.0] * size
    return rng.normal(0.0, sigma_db, size=size)


def transmit_power_dbm(eirp_dbm: float, num_beams: int) -> float:
    return eirp_dbm - 10 * math.log10(num_beams)


def noise_floor_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    return NOISE_PSD_DBM_HZ + 10 * math.log10(bandwidth_hz) + noise_figure_db


def shannon_rate_Bps(bandwidth_hz: float, snr_db: float) -> float:
    """Capacity in bytes per second."""
    return bandwidth_hz * math.log2(1 + 10 ** (snr_db / 10)) / 8


class RateTable:
    """Step function from SNR (dB) to rate, loaded from ``snr_db,rate_bps`` rows.

    An SNR below the first threshold maps to zero (the caller's floor applies).
    """

    def __init__(self, rows: list[tuple[float, float]]) -> None:
        if not rows:
            raise ValueError("empty rate table")
        rows = sorted(rows)
        self.thresholds = [r[0] for r in rows]
        self.rates_bps = [r[1] for r in rows]

    @classmethod
    def from_csv(cls, path) -> "RateTable":
        with open(path, newline="") as fh:
            rows = [(float(r["snr_db"]), float(r["rate_bps"])) for r in csv.DictReader(fh)]
        return cls(rows)

    def rate_Bps(self, snr_db: float) -> float:
        i = bisect.bisect_right(self.thresholds, snr_db) - 1
        return 0.0 if i < 0 else self.rates_bps[i] / 8
