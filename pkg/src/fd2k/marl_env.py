"""Episode engine: observations, stepping, replay memory, training epochs.

An episode walks T time steps through the two legitimate nodes' traces.
Each step both agents pick an action from their own normalized frame, the
environment derives masks and differential keys, pays the agreement-plus-
utilization reward, and hands back the joint transition for replay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import keygen, signals
from .agent import ActionVector, Agent


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the standard scenario."""

    M: int = 20
    T: int = 19
    gamma: float = 0.99
    n: int = 128
    N_mem: int = 10000
    e_max: int = 3000
    epsilon: float = 0.4
    rho: float = 0.01
    E: int = 5
    lam: float = 0.5
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    noise_decay: float = 0.9995
    noise_min: float = 0.01
    hidden: tuple[int, ...] = (100, 100, 100, 100)

    def __post_init__(self):
        if self.M < 2 or self.T < 1:
            raise ValueError(f"need M >= 2 and T >= 1, got M={self.M}, T={self.T}")
        if not 1 <= self.n <= self.N_mem:
            raise ValueError(f"need 1 <= n <= N_mem, got n={self.n}, N_mem={self.N_mem}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must be in (0, 1), got {self.lam}")
        if self.e_max < 1 or self.E < 1:
            raise ValueError("e_max and E must be >= 1")
        if self.epsilon < 0 or not 0.0 <= self.rho <= 1.0:
            raise ValueError("need epsilon >= 0 and rho in [0, 1]")


@dataclass(frozen=True)
class EnvState:
    """Time step t plus both parties' normalized observations."""

    t: int
    o_a: np.ndarray
    o_b: np.ndarray

    @property
    def s(self) -> np.ndarray:
        """Joint state: ordered concatenation (o_A || o_B)."""
        return np.concatenate([self.o_a, self.o_b])


@dataclass(frozen=True)
class Transition:
    """One replayable step: joint state, joint action, reward, successor."""

    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool

    def __post_init__(self):
        if not (self.s.shape == self.a.shape == self.s_next.shape) or self.s.ndim != 1:
            raise ValueError("s, a, s_next must be equal-length vectors")
        if not np.isfinite(self.r):
            raise ValueError(f"reward must be finite, got {self.r}")


@dataclass(frozen=True)
class StepResult:
    transition: Transition
    next_state: EnvState | None
    key_a: keygen.Key
    key_b: keygen.Key
    mask_a: keygen.FeatureMask
    mask_b: keygen.FeatureMask


@dataclass(frozen=True)
class EpochMetrics:
    """Per-epoch training curve entries."""

    epoch: int
    accumulated_reward: float
    mean_kar: float
    mask_utilization: float
    noise_scale: float
    steps: int

    CSV_HEADER = "epoch,accumulated_reward,mean_kar,mask_utilization,noise_scale"

    @property
    def mean_reward(self) -> float:
        """Per-step average of the accumulated reward."""
        return self.accumulated_reward / self.steps

    def csv_row(self) -> str:
        return (
            f"{self.epoch},{self.accumulated_reward:.10g},{self.mean_kar:.10g},"
            f"{self.mask_utilization:.10g},{self.noise_scale:.10g}"
        )


class ReplayMemory:
    """Fixed-capacity FIFO transition store with uniform sampling."""

    def __init__(self, capacity: int, dim: int):
        if capacity < 1 or dim < 1:
            raise ValueError("capacity and dim must be positive")
        self.capacity = capacity
        self.dim = dim
        self._s = np.zeros((capacity, dim))
        self._a = np.zeros((capacity, dim))
        self._r = np.zeros(capacity)
        self._s_next = np.zeros((capacity, dim))
        self._terminal = np.zeros(capacity, dtype=bool)
        self.count = 0  # total pushes, monotone

    def __len__(self) -> int:
        return min(self.count, self.capacity)

    def push(self, tr: Transition) -> None:
        if tr.s.shape != (self.dim,):
            raise ValueError(f"transition width {tr.s.shape} != ({self.dim},)")
        i = self.count % self.capacity
        self._s[i] = tr.s
        self._a[i] = tr.a
        self._r[i] = tr.r
        self._s_next[i] = tr.s_next
        self._terminal[i] = tr.terminal
        self.count += 1

    def sample(self, n: int, rng: np.random.Generator) -> "Batch":
        """Uniform sample of n distinct stored transitions."""
        size = len(self)
        if n > size:
            raise ValueError(f"cannot sample {n} transitions from {size} stored")
        idx = rng.choice(size, size=n, replace=False)
        return Batch(
            s=self._s[idx].copy(),
            a=self._a[idx].copy(),
            r=self._r[idx].copy(),
            s_next=self._s_next[idx].copy(),
            terminal=self._terminal[idx].copy(),
        )


@dataclass(frozen=True)
class Batch:
    """Stacked transitions as contiguous arrays."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    terminal: np.ndarray


class Env:
    """Two-party key-generation episode over a fixed pair of traces."""

    def __init__(
        self,
        traces: dict[str, signals.PressureTrace],
        scenario: signals.ScenarioConfig,
        lam: float,
    ):
        needed = scenario.samples_per_episode
        for node in (scenario.alice_node, scenario.bob_node):
            if node not in traces:
                raise ValueError(f"traces missing node {node!r}")
            if len(traces[node]) < needed:
                raise ValueError(
                    f"trace {node!r} has {len(traces[node])} samples, episode needs {needed}"
                )
            scenario.stats_for(node)  # raises if normalization was never fitted
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must be in (0, 1), got {lam}")
        self.scenario = scenario
        self.lam = lam
        self._trace_a = traces[scenario.alice_node]
        self._trace_b = traces[scenario.bob_node]

    def _observation(self, trace: signals.PressureTrace, t: int) -> np.ndarray:
        fr = signals.frame(trace, t, self.scenario.M)
        return signals.normalize(fr, self.scenario.stats_for(trace.node_id))

    def reset(self) -> EnvState:
        return EnvState(
            t=1,
            o_a=self._observation(self._trace_a, 1),
            o_b=self._observation(self._trace_b, 1),
        )

    def step(self, state: EnvState, action_a: ActionVector, action_b: ActionVector) -> StepResult:
        t = state.t
        if t > self.scenario.T:
            raise ValueError(f"cannot step past the final time step T={self.scenario.T}")
        mask_a = keygen.binarize(action_a, self.lam)
        mask_b = keygen.binarize(action_b, self.lam)
        key_a = self._derive_key(self._trace_a, t, mask_a, "A")
        key_b = self._derive_key(self._trace_b, t, mask_b, "B")
        r = keygen.reward(key_a, key_b, mask_a, mask_b)

        terminal = t == self.scenario.T
        if terminal:
            next_state = None
            s_next = state.s
        else:
            next_state = EnvState(
                t=t + 1,
                o_a=self._observation(self._trace_a, t + 1),
                o_b=self._observation(self._trace_b, t + 1),
            )
            s_next = next_state.s
        transition = Transition(
            s=state.s,
            a=np.concatenate([np.asarray(action_a), np.asarray(action_b)]),
            r=r,
            s_next=s_next,
            terminal=terminal,
        )
        return StepResult(transition, next_state, key_a, key_b, mask_a, mask_b)

    def _derive_key(
        self, trace: signals.PressureTrace, t: int, mask: keygen.FeatureMask, owner: str
    ) -> keygen.Key:
        m = self.scenario.M
        fr = signals.frame(trace, t, m)
        prev = None if t == 1 else float(trace.samples[(t - 1) * m - 1])
        return keygen.generate_key(fr.values, mask, prev, owner=owner, ts_index=t)


def train_epoch(
    agents: tuple[Agent, Agent],
    env: Env,
    memory: ReplayMemory,
    config: TrainConfig,
    rng: np.random.Generator,
    epoch: int = 0,
) -> EpochMetrics:
    """One episode of acting, storing, and (once warm) learning.

    Per step: both agents act with exploration, the environment advances,
    the transition is stored, and once the memory holds at least one batch
    both critics update on a shared sample, then both actors, then both
    target pairs; exploration noise decays once per step.
    """
    agent_a, agent_b = agents
    m = config.M
    state = env.reset()
    total_reward = 0.0
    kars = []
    utilizations = []
    while state is not None:
        a_vec = agent_a.act(state.o_a, explore=True, rng=rng)
        b_vec = agent_b.act(state.o_b, explore=True, rng=rng)
        result = env.step(state, a_vec, b_vec)
        memory.push(result.transition)
        total_reward += result.transition.r
        kars.append(keygen.kar(result.key_a, result.key_b))
        utilizations.append((result.mask_a.utilization + result.mask_b.utilization) / 2.0)

        if len(memory) >= config.n:
            batch = memory.sample(config.n, rng)
            a_next = np.concatenate(
                [
                    agent_a.target_action(batch.s_next[:, :m]),
                    agent_b.target_action(batch.s_next[:, m:]),
                ],
                axis=1,
            )
            agent_a.update_critic(batch, a_next, config.gamma)
            agent_b.update_critic(batch, a_next, config.gamma)
            agent_a.update_actor(batch)
            agent_b.update_actor(batch)
            agent_a.sync_targets(config.rho)
            agent_b.sync_targets(config.rho)

        agent_a.decay_noise()
        agent_b.decay_noise()
        state = result.next_state

    return EpochMetrics(
        epoch=epoch,
        accumulated_reward=total_reward,
        mean_kar=float(np.mean(kars)),
        mask_utilization=float(np.mean(utilizations)),
        noise_scale=agent_a.noise_scale,
        steps=len(kars),
    )
