"""Spectrum modelling primitives.

Everything downstream (rewards, waterfall states, jammer rendering) is built
from one physical ingredient: raised-cosine emissions with a known total
power, integrated in closed form over frequency intervals. Powers are linear
milliwatts internally; rendered waterfall rows are dBm per sensing bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# dBm range used to normalize waterfalls for the network input and for image
# export; spans the noise floor up to a little above the strongest jammer.
DISPLAY_DBM_LO = -100.0
DISPLAY_DBM_HI = 35.0


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class WaveformSpec:
    """Raised-cosine emission shape.

    Parameters
    ----------
    bandwidth_mhz : float
        Occupied bandwidth including the roll-off skirts. The symbol rate is
        ``bandwidth_mhz / (1 + rolloff)`` and the spectral density is zero
        beyond ``bandwidth_mhz / 2`` from the carrier.
    rolloff : float
        Roll-off factor, strictly inside (0, 1).
    power_dbm : float
        Total transmit power; the density integrates back to this value.
    """

    bandwidth_mhz: float
    rolloff: float
    power_dbm: float

    def __post_init__(self) -> None:
        if not 0.0 < self.rolloff < 1.0:
            raise ConfigError(f"rolloff must lie strictly in (0, 1), got {self.rolloff}")
        if self.bandwidth_mhz <= 0.0:
            raise ConfigError(f"bandwidth_mhz must be positive, got {self.bandwidth_mhz}")

    @property
    def symbol_rate_mhz(self) -> float:
        return self.bandwidth_mhz / (1.0 + self.rolloff)

    @property
    def power_mw(self) -> float:
        return dbm_to_mw(self.power_dbm)


@dataclass(frozen=True)
class Emission:
    """One active transmitter during one sensing slot."""

    center_mhz: float
    waveform: WaveformSpec


@dataclass(frozen=True)
class BandConfig:
    """Geometry of the sensed band and of the decision clock.

    Invariants: ``bins * bin_mhz`` spans the band exactly, the waterfall keeps
    ``rows`` sensing slots of history, and an action is held for
    ``epoch_slots`` consecutive slots.
    """

    lo_mhz: float = 0.0
    hi_mhz: float = 20.0
    bin_mhz: float = 0.1
    slot_ms: float = 1.0
    rows: int = 200
    bins: int = 200
    epoch_slots: int = 10

    def __post_init__(self) -> None:
        if self.hi_mhz <= self.lo_mhz:
            raise ConfigError("band upper edge must exceed lower edge")
        if self.bin_mhz <= 0 or self.slot_ms <= 0:
            raise ConfigError("bin_mhz and slot_ms must be positive")
        if self.rows < 1 or self.bins < 1 or self.epoch_slots < 1:
            raise ConfigError("rows, bins and epoch_slots must be at least 1")
        if abs(self.bins * self.bin_mhz - self.span_mhz) > 1e-9 * max(1.0, self.span_mhz):
            raise ConfigError(
                f"bins ({self.bins}) x bin_mhz ({self.bin_mhz}) must equal the "
                f"band span ({self.span_mhz} MHz)"
            )

    @property
    def span_mhz(self) -> float:
        return self.hi_mhz - self.lo_mhz

    def bin_edges(self) -> np.ndarray:
        """Edges of all sensing bins, length ``bins + 1``."""
        return self.lo_mhz + self.bin_mhz * np.arange(self.bins + 1)


def raised_cosine_psd(freq_offset_mhz, spec: WaveformSpec):
    """Power spectral density in mW/MHz at an offset from the carrier.

    Flat at ``P/Rs`` inside ``(1 - rolloff) * Rs / 2``, cosine tapered until
    ``bandwidth/2``, zero beyond. Symmetric in the offset; accepts scalars or
    arrays.
    """
    rs = spec.symbol_rate_mhz
    density = spec.power_mw / rs
    f1 = (1.0 - spec.rolloff) * rs / 2.0
    f2 = spec.bandwidth_mhz / 2.0
    x = np.abs(np.asarray(freq_offset_mhz, dtype=np.float64))
    taper = 0.5 * density * (1.0 + np.cos(np.pi / (spec.rolloff * rs) * (x - f1)))
    out = np.where(x <= f1, density, np.where(x < f2, taper, 0.0))
    if np.isscalar(freq_offset_mhz):
        return float(out)
    return out


def _cumulative_power(offset_mhz, spec: WaveformSpec):
    """Integral of the PSD from the carrier out to ``offset_mhz`` (signed, mW)."""
    rs = spec.symbol_rate_mhz
    density = spec.power_mw / rs
    f1 = (1.0 - spec.rolloff) * rs / 2.0
    f2 = spec.bandwidth_mhz / 2.0
    x = np.abs(np.asarray(offset_mhz, dtype=np.float64))
    xr = np.clip(x - f1, 0.0, spec.rolloff * rs)
    taper = density * f1 + 0.5 * density * (
        xr + (spec.rolloff * rs / np.pi) * np.sin(np.pi * xr / (spec.rolloff * rs))
    )
    flat = density * np.minimum(x, f1)
    mag = np.where(x <= f1, flat, np.where(x < f2, taper, spec.power_mw / 2.0))
    return np.sign(offset_mhz) * mag


def band_power(emission: Emission, f_lo_mhz: float, f_hi_mhz: float) -> float:
    """Emission power falling inside ``[f_lo_mhz, f_hi_mhz]``, in mW (closed form)."""
    if f_lo_mhz >= f_hi_mhz:
        raise ValueError("f_lo_mhz must be below f_hi_mhz")
    lo = f_lo_mhz - emission.center_mhz
    hi = f_hi_mhz - emission.center_mhz
    return float(_cumulative_power(hi, emission.waveform) - _cumulative_power(lo, emission.waveform))


def emission_bin_power(emission: Emission, cfg: BandConfig) -> np.ndarray:
    """Per-bin linear power (mW) of one emission across the whole band."""
    offsets = cfg.bin_edges() - emission.center_mhz
    cum = _cumulative_power(offsets, emission.waveform)
    return np.maximum(np.diff(cum), 0.0)


@dataclass(frozen=True)
class SpectrumRow:
    """One full-band sensing snapshot: dBm per bin, taken at ``slot``."""

    values: np.ndarray
    slot: int


def render_row(
    emissions, cfg: BandConfig, noise_density_mw_per_mhz: float, slot: int = 0
) -> SpectrumRow:
    """Render the sensed dBm row for one slot.

    Each bin holds ``10 log10(noise + sum of emission power in the bin)``;
    deterministic, no sensing noise. Emission energy outside the band edges
    is discarded.
    """
    acc = np.full(cfg.bins, noise_density_mw_per_mhz * cfg.bin_mhz, dtype=np.float64)
    for emission in emissions:
        acc += emission_bin_power(emission, cfg)
    return SpectrumRow(mw_to_dbm(acc), slot)


class WaterfallState:
    """Fixed-depth time-frequency history; row 0 is always the newest slot.

    Implemented as a ring buffer: a push overwrites the oldest row, so the
    window always holds exactly ``rows`` snapshots.
    """

    def __init__(self, rows: int, bins: int, fill_dbm: float = 0.0):
        self._buf = np.full((rows, bins), fill_dbm, dtype=np.float64)
        self._head = 0

    @property
    def rows(self) -> int:
        return self._buf.shape[0]

    @property
    def bins(self) -> int:
        return self._buf.shape[1]

    def push(self, row) -> None:
        """Insert the newest row, evicting the oldest."""
        values = row.values if isinstance(row, SpectrumRow) else np.asarray(row, dtype=np.float64)
        if values.shape != (self.bins,):
            raise ValueError(f"row has shape {values.shape}, expected ({self.bins},)")
        self._head = (self._head - 1) % self.rows
        self._buf[self._head] = values

    def matrix(self) -> np.ndarray:
        """Newest-first copy of the full window, shape (rows, bins)."""
        return np.vstack((self._buf[self._head:], self._buf[: self._head]))
