"""Q-learning agent: epsilon-greedy interaction, experience replay, training.

One training epoch is: sense the waterfall, pick a channel epsilon-greedily,
hold it for one environment epoch, store the transition, and (once the replay
buffer is warm) regress the network toward one-step TD targets built from the
current weights. Runs are fully deterministic for a given (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .env import SpectrumEnv
from .errors import ConfigError
from .qnet import (
    Architecture,
    QNetworkParams,
    forward,
    init_params,
    loss_and_gradients,
    preprocess,
    sgd_step,
)


@dataclass(frozen=True)
class TrainHyper:
    """Training defaults sized for desk-scale runs (minutes per jammer)."""

    gamma: float = 0.9
    learning_rate: float = 1e-3
    batch_size: int = 32
    buffer_capacity: int = 10_000
    min_replay: int = 500
    epsilon_delta: float = 0.00045
    epsilon_floor: float = 0.1
    decimation: int = 4
    throughput_window: int = 500

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.min_replay > self.buffer_capacity:
            raise ConfigError("min_replay cannot exceed buffer_capacity")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigError("batch_size and buffer_capacity must be positive")
        if not 0.0 <= self.epsilon_floor <= 1.0:
            raise ConfigError("epsilon_floor must lie in [0, 1]")
        if self.decimation < 1 or self.throughput_window < 1:
            raise ConfigError("decimation and throughput_window must be positive")


@dataclass(frozen=True)
class Transition:
    """One stored experience; states are preprocessed network inputs."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayBuffer:
    """Ring buffer of transitions; overwrites the oldest entry when full."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("replay capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self.capacity

    def ready(self, min_size: int) -> bool:
        return len(self._items) >= min_size

    def sample(self, batch_size: int, rng: np.random.Generator,
               min_size: int = 1) -> list[Transition]:
        """Uniform draw with replacement; raises if the buffer is not warm yet."""
        if not self.ready(max(min_size, 1)):
            raise ValueError(f"replay buffer not ready: {len(self._items)} < {min_size}")
        idx = rng.integers(len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def items(self) -> list[Transition]:
        return list(self._items)


@dataclass
class EpsilonSchedule:
    """Linear decay with a floor: eps <- max(floor, eps - delta) per epoch."""

    value: float = 1.0
    delta: float = 0.00045
    floor: float = 0.1

    def update(self) -> float:
        self.value = max(self.floor, self.value - self.delta)
        return self.value


def select_action(q_values, epsilon: float, rng: np.random.Generator | None = None) -> int:
    """Epsilon-greedy pick; greedy ties break toward the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("an rng is required when epsilon > 0")
        if rng.random() < epsilon:
            return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def td_target(batch: list[Transition], params: QNetworkParams, gamma: float) -> np.ndarray:
    """One-step targets r + gamma * max_a' Q(S', a'); the task never terminates."""
    next_states = np.stack([t.next_state for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    q_next = forward(params, next_states)
    return rewards + gamma * q_next.max(axis=1)


@dataclass
class TrainingReport:
    """Per-epoch training record plus the final network and state snapshots."""

    n_actions: int
    epoch: np.ndarray
    epsilon: np.ndarray
    reward: np.ndarray
    throughput: np.ndarray
    throughput_ma: np.ndarray
    loss: np.ndarray
    action: np.ndarray
    params: QNetworkParams
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)

    def action_histogram(self, last: int | None = None) -> np.ndarray:
        """Empirical action frequencies (sums to 1) over the last N epochs."""
        actions = self.action if last is None else self.action[-last:]
        if actions.size == 0:
            return np.zeros(self.n_actions)
        return np.bincount(actions, minlength=self.n_actions) / actions.size

    def trailing_throughput(self, last: int) -> float:
        return float(np.mean(self.throughput[-last:]))


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    csum = np.cumsum(np.concatenate(([0.0], values)))
    n = values.size
    hi = np.arange(1, n + 1)
    lo = np.maximum(hi - window, 0)
    return (csum[hi] - csum[lo]) / (hi - lo)


def train(
    env: SpectrumEnv,
    hyper: TrainHyper,
    epochs: int,
    seed,
    snapshot_epochs: tuple[int, ...] = (),
) -> TrainingReport:
    """Run the full learning loop for ``epochs`` decision epochs.

    Independent random streams (environment, weight init, exploration) are
    spawned from ``seed``. Targets are computed from the current weights right
    before each update; there is no separate target network.
    """
    if epochs < 0:
        raise ConfigError("epochs must be non-negative")
    band = env.band
    d = hyper.decimation
    if band.rows % d or band.bins % d:
        raise ConfigError(f"decimation {d} must divide the waterfall shape "
                          f"({band.rows}x{band.bins})")
    arch = Architecture(input_rows=band.rows // d, input_cols=band.bins // d,
                        n_actions=env.n_actions)
    env_seed, init_seed, agent_seed = np.random.SeedSequence(seed).spawn(3)
    params = init_params(arch, init_seed)
    rng = np.random.default_rng(agent_seed)
    buffer = ReplayBuffer(hyper.buffer_capacity)
    eps = EpsilonSchedule(1.0, hyper.epsilon_delta, hyper.epsilon_floor)

    raw = env.reset(env_seed)
    state = preprocess(raw, d)
    state.setflags(write=False)

    snapshots: dict[int, np.ndarray] = {}
    if 0 in snapshot_epochs:
        snapshots[0] = raw

    eps_hist = np.empty(epochs)
    reward_hist = np.empty(epochs)
    throughput_hist = np.empty(epochs)
    loss_hist = np.full(epochs, np.nan)
    action_hist = np.empty(epochs, dtype=np.int64)

    for t in range(epochs):
        eps_hist[t] = eps.value
        # Same draws as select_action, but skips the forward pass entirely on
        # exploration epochs.
        if rng.random() < eps.value:
            action = int(rng.integers(env.n_actions))
        else:
            action = int(np.argmax(forward(params, state)))
        outcome = env.step(action)
        next_state = preprocess(outcome.next_state, d)
        next_state.setflags(write=False)
        buffer.push(Transition(state, action, outcome.reward, next_state))

        if buffer.ready(hyper.min_replay):
            batch = buffer.sample(hyper.batch_size, rng)
            targets = td_target(batch, params, hyper.gamma)
            states = np.stack([tr.state for tr in batch])
            actions = np.array([tr.action for tr in batch], dtype=np.intp)
            loss_hist[t], grads = loss_and_gradients(params, states, actions, targets)
            sgd_step(params, grads, hyper.learning_rate)

        eps.update()
        state = next_state
        reward_hist[t] = outcome.reward
        throughput_hist[t] = float(np.mean(outcome.slot_success))
        action_hist[t] = action
        if (t + 1) in snapshot_epochs:
            snapshots[t + 1] = outcome.next_state

    return TrainingReport(
        n_actions=env.n_actions,
        epoch=np.arange(1, epochs + 1),
        epsilon=eps_hist,
        reward=reward_hist,
        throughput=throughput_hist,
        throughput_ma=_trailing_mean(throughput_hist, hyper.throughput_window),
        loss=loss_hist,
        action=action_hist,
        params=params,
        snapshots=snapshots,
    )


POLICIES = ("greedy", "random", "fixed")


@dataclass
class EvalReport:
    policy: str
    mean_throughput: float
    mean_reward: float
    action_histogram: np.ndarray
    throughput: np.ndarray
    reward: np.ndarray


def evaluate(
    env: SpectrumEnv,
    policy: str,
    epochs: int,
    seed,
    params: QNetworkParams | None = None,
    fixed_action: int | None = None,
) -> EvalReport:
    """Roll out a frozen policy and report throughput, reward and usage.

    ``greedy`` follows argmax-Q with no exploration and requires ``params``;
    ``random`` picks uniformly; ``fixed`` repeats ``fixed_action``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if policy == "greedy" and params is None:
        raise ValueError("greedy evaluation requires network parameters")
    if policy == "fixed":
        if fixed_action is None:
            raise ValueError("fixed evaluation requires fixed_action")
        if not 0 <= fixed_action < env.n_actions:
            raise ValueError(f"fixed_action {fixed_action} outside [0, {env.n_actions})")
    if epochs < 1:
        raise ValueError("evaluation needs at least one epoch")

    env_seed, agent_seed = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(agent_seed)
    raw = env.reset(env_seed)
    decimation = 1
    if policy == "greedy":
        if env.band.rows % params.arch.input_rows or env.band.bins % params.arch.input_cols:
            raise ValueError("network input shape does not divide the waterfall shape")
        decimation = env.band.rows // params.arch.input_rows
    state = preprocess(raw, decimation) if policy == "greedy" else None

    throughput = np.empty(epochs)
    rewards = np.empty(epochs)
    actions = np.empty(epochs, dtype=np.int64)
    for t in range(epochs):
        if policy == "greedy":
            action = select_action(forward(params, state), 0.0)
        elif policy == "random":
            action = int(rng.integers(env.n_actions))
        else:
            action = int(fixed_action)
        outcome = env.step(action)
        if policy == "greedy":
            state = preprocess(outcome.next_state, decimation)
        throughput[t] = float(np.mean(outcome.slot_success))
        rewards[t] = outcome.reward
        actions[t] = action

    histogram = np.bincount(actions, minlength=env.n_actions) / epochs
    return EvalReport(
        policy=policy,
        mean_throughput=float(np.mean(throughput)),
        mean_reward=float(np.mean(rewards)),
        action_histogram=histogram,
        throughput=throughput,
        reward=rewards,
    )
