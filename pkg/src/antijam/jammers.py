"""Jamming pattern generators.

Each jammer produces its emissions as a function of absolute slot time in
milliseconds, independent of the user's decision epochs. The adaptive jammer
additionally gets told, once per epoch, which channel the user transmitted on.
"""

from __future__ import annotations

from collections import Counter, deque

import numpy as np

from .errors import ConfigError
from .spectrum import Emission, WaveformSpec

DEFAULT_JAMMER_WAVEFORM = WaveformSpec(bandwidth_mhz=4.0, rolloff=0.3, power_dbm=30.0)


class Jammer:
    """Base interface: emissions over time plus optional action feedback."""

    def reset(self, rng: np.random.Generator) -> None:
        pass

    def emissions(self, t_ms: float) -> list[Emission]:
        raise NotImplementedError

    def observe(self, user_center_mhz: float) -> None:
        """Called once per decision epoch with the user's channel center."""


class SweepJammer(Jammer):
    """Single emission whose center moves linearly, wrapping across the band."""

    def __init__(
        self,
        waveform: WaveformSpec = DEFAULT_JAMMER_WAVEFORM,
        speed_mhz_per_ms: float = 1.0,
        start_mhz: float = 2.0,
        band_lo_mhz: float = 0.0,
        band_hi_mhz: float = 20.0,
    ):
        if speed_mhz_per_ms <= 0:
            raise ConfigError("sweep speed must be positive")
        self.waveform = waveform
        self.speed = speed_mhz_per_ms
        self.start = start_mhz
        self.lo = band_lo_mhz
        self.span = band_hi_mhz - band_lo_mhz

    def emissions(self, t_ms: float) -> list[Emission]:
        center = self.lo + (self.start - self.lo + self.speed * t_ms) % self.span
        return [Emission(center, self.waveform)]


class CombJammer(Jammer):
    """Several fixed-frequency emissions, constant over time."""

    def __init__(
        self,
        waveform: WaveformSpec = DEFAULT_JAMMER_WAVEFORM,
        centers_mhz: tuple[float, ...] = (2.0, 10.0, 18.0),
    ):
        self.teeth = [Emission(c, waveform) for c in centers_mhz]

    def emissions(self, t_ms: float) -> list[Emission]:
        return list(self.teeth)


class RandomJammer(Jammer):
    """Hops to a uniformly drawn grid center at every dwell boundary.

    The draw happens lazily when a slot in a new dwell is first queried, so a
    seeded environment stepping slots in order sees one draw per dwell.
    """

    def __init__(
        self,
        waveform: WaveformSpec = DEFAULT_JAMMER_WAVEFORM,
        dwell_ms: float = 20.0,
        grid_mhz: tuple[float, ...] = (2.0, 6.0, 10.0, 14.0, 18.0),
    ):
        if dwell_ms <= 0:
            raise ConfigError("dwell_ms must be positive")
        if not grid_mhz:
            raise ConfigError("random jammer grid must be non-empty")
        self.waveform = waveform
        self.dwell_ms = dwell_ms
        self.grid = tuple(grid_mhz)
        self._rng: np.random.Generator | None = None
        self._dwell_index = -1
        self._center = self.grid[0]

    def reset(self, rng: np.random.Generator) -> None:
        self._rng = rng
        self._dwell_index = -1

    def emissions(self, t_ms: float) -> list[Emission]:
        if self._rng is None:
            raise RuntimeError("RandomJammer.reset() must run before emissions()")
        dwell = int(t_ms // self.dwell_ms)
        if dwell != self._dwell_index:
            self._center = self.grid[self._rng.integers(len(self.grid))]
            self._dwell_index = dwell
        return [Emission(self._center, self.waveform)]


class IntelligentJammer(Jammer):
    """Tracks the user's empirical channel usage and jams the modal channel.

    Keeps a sliding window of the last ``window`` observed user centers and
    emits on the most frequent one; ties break toward the lowest frequency,
    and an empty window falls back to ``idle_center_mhz``.
    """

    def __init__(
        self,
        waveform: WaveformSpec = DEFAULT_JAMMER_WAVEFORM,
        window: int = 200,
        idle_center_mhz: float = 10.0,
    ):
        if window < 1:
            raise ConfigError("observation window must be at least 1")
        self.waveform = waveform
        self.window = window
        self.idle_center = idle_center_mhz
        self._observed: deque[float] = deque(maxlen=window)
        self._target: float | None = None

    def reset(self, rng: np.random.Generator) -> None:
        self._observed.clear()
        self._target = None

    def observe(self, user_center_mhz: float) -> None:
        self._observed.append(float(user_center_mhz))
        self._target = None

    def counts(self) -> Counter:
        return Counter(self._observed)

    def target_mhz(self) -> float:
        if self._target is None:
            if not self._observed:
                self._target = self.idle_center
            else:
                counts = self.counts()
                self._target = min(c for c, n in counts.items() if n == max(counts.values()))
        return self._target

    def emissions(self, t_ms: float) -> list[Emission]:
        return [Emission(self.target_mhz(), self.waveform)]
