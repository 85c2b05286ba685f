"""Decision-epoch environment over the jammed band.

The user holds one of K center frequencies for ``epoch_slots`` sensing slots.
Every slot renders a waterfall row (jammers plus the user's own emission) and
scores the slot SINR; the epoch reward is the slot success fraction minus a
switching cost. Jammers run on absolute slot time, so their dynamics do not
align with the user's epochs unless the arithmetic happens to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .jammers import Jammer
from .spectrum import (
    BandConfig,
    Emission,
    SpectrumRow,
    WaterfallState,
    WaveformSpec,
    band_power,
    dbm_to_mw,
    emission_bin_power,
    mw_to_dbm,
)

ACTION_STEP_MHZ = 2.0

DEFAULT_SIGNAL_WAVEFORM = WaveformSpec(bandwidth_mhz=4.0, rolloff=0.3, power_dbm=0.0)


@dataclass(frozen=True)
class RewardConfig:
    """Reward shape: rate per successful epoch, switch cost, SINR gate, noise."""

    rate: float = 1.0
    switch_cost: float = 0.2          # fraction of rate charged when the channel changes
    sinr_threshold_db: float = 10.0
    noise_power_dbm: float = -100.0   # total in-band noise over one user bandwidth

    def __post_init__(self) -> None:
        if not 0.0 <= self.switch_cost < 1.0:
            raise ConfigError("switch_cost must lie in [0, 1)")
        if not np.isfinite(self.sinr_threshold_db):
            raise ConfigError("sinr_threshold_db must be finite")


@dataclass(frozen=True)
class Action:
    """User channel choice; index i maps to center ``lo + B/2 + 2i`` MHz."""

    index: int

    @property
    def center_mhz(self) -> float:
        return 2.0 + ACTION_STEP_MHZ * self.index


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray       # (rows, bins) dBm waterfall, newest row first
    reward: float
    slot_success: np.ndarray     # bool per sensing slot of the epoch
    slot_sinr_db: np.ndarray


def action_centers(band: BandConfig, signal_bandwidth_mhz: float) -> np.ndarray:
    """Centers of all user channels that fit inside the band with a 2 MHz step."""
    half = signal_bandwidth_mhz / 2.0
    first = band.lo_mhz + half
    last = band.hi_mhz - half
    n = int(round((last - first) / ACTION_STEP_MHZ)) + 1
    if n < 1:
        raise ConfigError("signal bandwidth does not fit inside the band")
    return first + ACTION_STEP_MHZ * np.arange(n)


def compute_sinr_db(
    user_center_mhz: float,
    signal: WaveformSpec,
    interferers: Sequence[Emission],
    reward: RewardConfig,
) -> float:
    """Received SINR over the user band ``[center - B/2, center + B/2]`` in dB.

    ``interferers`` must not include the user's own emission.
    """
    lo = user_center_mhz - signal.bandwidth_mhz / 2.0
    hi = user_center_mhz + signal.bandwidth_mhz / 2.0
    interference = sum(band_power(e, lo, hi) for e in interferers)
    noise = dbm_to_mw(reward.noise_power_dbm)
    return float(mw_to_dbm(signal.power_mw / (noise + interference)))


def epoch_reward(
    action: int,
    prev_action: int | None,
    slot_sinr_db: np.ndarray,
    reward: RewardConfig,
    epoch_slots: int | None = None,
) -> float:
    """Success-fraction reward with a per-epoch switching cost.

    Per slot, transmission succeeds when SINR clears the threshold; the epoch
    reward is ``s * rate - switch_cost * rate * switched`` where ``s`` is the
    success fraction. The cost applies whenever the action differs from the
    previous epoch's (never on the very first epoch).
    """
    sinr = np.asarray(slot_sinr_db, dtype=np.float64)
    if sinr.ndim != 1 or sinr.size == 0:
        raise ValueError("slot_sinr_db must be a non-empty vector")
    if epoch_slots is not None and sinr.size != epoch_slots:
        raise ValueError(f"expected {epoch_slots} slot SINR values, got {sinr.size}")
    s = float(np.mean(sinr >= reward.sinr_threshold_db))
    switched = prev_action is not None and action != prev_action
    return s * reward.rate - reward.switch_cost * reward.rate * float(switched)


class SpectrumEnv:
    """Jammed-band environment with a gym-like ``reset``/``step`` interface.

    A single instance is strictly sequential; run independent instances (with
    their own seeds) for parallel experiments.
    """

    def __init__(
        self,
        band: BandConfig | None = None,
        reward: RewardConfig | None = None,
        signal: WaveformSpec = DEFAULT_SIGNAL_WAVEFORM,
        jammers: Sequence[Jammer] = (),
    ):
        self.band = band if band is not None else BandConfig()
        self.reward = reward if reward is not None else RewardConfig()
        self.signal = signal
        self.jammers = list(jammers)
        self.centers = action_centers(self.band, signal.bandwidth_mhz)
        # Flat noise density chosen so one user bandwidth integrates to the
        # configured total noise power.
        self.noise_density = dbm_to_mw(self.reward.noise_power_dbm) / signal.bandwidth_mhz
        self._state: WaterfallState | None = None
        self._slot = 0
        self._prev_action: int | None = None
        self._row_cache: dict[Emission, np.ndarray] = {}
        self._overlap_cache: dict[tuple[float, Emission], float] = {}

    @property
    def n_actions(self) -> int:
        return len(self.centers)

    @property
    def slot(self) -> int:
        return self._slot

    @property
    def prev_action(self) -> int | None:
        return self._prev_action

    def reset(self, seed) -> np.ndarray:
        """Re-seed and rebuild the world; returns the pre-filled waterfall.

        The waterfall is primed by running a full window of sensing slots with
        no user transmission, so the first decision is made from real history.
        """
        self._rng = np.random.default_rng(seed)
        self._slot = 0
        self._prev_action = None
        for jammer in self.jammers:
            jammer.reset(self._rng)
        self._state = WaterfallState(self.band.rows, self.band.bins)
        for _ in range(self.band.rows):
            self._push_row(self._jammer_emissions())
            self._slot += 1
        return self._state.matrix()

    def step(self, action) -> StepOutcome:
        """Hold ``action`` for one epoch; returns the advanced state and reward."""
        if self._state is None:
            raise RuntimeError("reset() must be called before step()")
        index = int(getattr(action, "index", action))
        if not 0 <= index < self.n_actions:
            raise ValueError(f"action index {index} outside [0, {self.n_actions})")
        center = float(self.centers[index])
        user = Emission(center, self.signal)
        slots = self.band.epoch_slots
        sinr = np.empty(slots, dtype=np.float64)
        for k in range(slots):
            interferers = self._jammer_emissions()
            self._push_row(interferers + [user])
            sinr[k] = self._cached_sinr(center, interferers)
            self._slot += 1
        reward = epoch_reward(index, self._prev_action, sinr, self.reward, slots)
        for jammer in self.jammers:
            jammer.observe(center)
        self._prev_action = index
        return StepOutcome(
            next_state=self._state.matrix(),
            reward=reward,
            slot_success=sinr >= self.reward.sinr_threshold_db,
            slot_sinr_db=sinr,
        )

    def render_current_row(self, emissions) -> SpectrumRow:
        """Render a row at the current slot without advancing the clock."""
        values = self._render_values(emissions)
        return SpectrumRow(values, self._slot)

    # internals

    def _jammer_emissions(self) -> list[Emission]:
        t_ms = self._slot * self.band.slot_ms
        out: list[Emission] = []
        for jammer in self.jammers:
            out.extend(jammer.emissions(t_ms))
        return out

    def _emission_row(self, emission: Emission) -> np.ndarray:
        row = self._row_cache.get(emission)
        if row is None:
            row = emission_bin_power(emission, self.band)
            self._row_cache[emission] = row
        return row

    def _render_values(self, emissions) -> np.ndarray:
        acc = np.full(self.band.bins, self.noise_density * self.band.bin_mhz)
        for emission in emissions:
            acc += self._emission_row(emission)
        return mw_to_dbm(acc)

    def _push_row(self, emissions) -> None:
        self._state.push(self._render_values(emissions))

    def _cached_sinr(self, user_center: float, interferers) -> float:
        lo = user_center - self.signal.bandwidth_mhz / 2.0
        hi = user_center + self.signal.bandwidth_mhz / 2.0
        total = 0.0
        for emission in interferers:
            key = (user_center, emission)
            overlap = self._overlap_cache.get(key)
            if overlap is None:
                overlap = band_power(emission, lo, hi)
                self._overlap_cache[key] = overlap
            total += overlap
        noise = dbm_to_mw(self.reward.noise_power_dbm)
        return float(mw_to_dbm(self.signal.power_mw / (noise + total)))
