"""Controller-side federation: shared init, periodic actor averaging.

The controller seeds both parties with one global actor, and every E epochs
collects their online actors, averages them elementwise, and redistributes
the mean.  Only actor parameters ever cross the agent boundary; critics,
optimizer states, and replay contents stay local.  An optional spool
directory exchanges the models as serialized files to make that boundary
observable from outside the process.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import marl_env, nn, signals
from .agent import Agent, as_seed_sequence, make_agent


@dataclass
class Controller:
    """Round bookkeeping plus the current global actor."""

    global_actor: nn.Mlp
    E: int
    round: int = 0
    spool_dir: str | None = None

    def __post_init__(self):
        if self.E < 1:
            raise ValueError(f"aggregation period E must be >= 1, got {self.E}")
        if self.round < 0:
            raise ValueError(f"round must be >= 0, got {self.round}")

    def should_aggregate(self, epoch: int) -> bool:
        """Aggregate at epoch e iff e mod E == 0 (epochs count from 1)."""
        if epoch < 1:
            raise ValueError(f"epoch must be >= 1, got {epoch}")
        return epoch % self.E == 0

    def run_round(self, agent_a: Agent, agent_b: Agent) -> nn.Mlp:
        """Collect both online actors, average, redistribute.

        Replaces each agent's online actor with the mean; target actors are
        left to keep tracking via their soft updates.
        """
        self.round += 1
        theta_a, theta_b = agent_a.actor, agent_b.actor
        if self.spool_dir is not None:
            theta_a = self._spool_upload(theta_a, "A")
            theta_b = self._spool_upload(theta_b, "B")
        merged = aggregate(theta_a, theta_b)
        if self.spool_dir is not None:
            merged = self._spool_download(merged)
        self.global_actor = merged
        agent_a.actor = merged.copy()
        agent_b.actor = merged.copy()
        return merged

    def _spool_upload(self, actor: nn.Mlp, party: str) -> nn.Mlp:
        path = os.path.join(self.spool_dir, f"actor_{party}_round{self.round}.bin")
        nn.save(actor, path)
        return nn.load(path)

    def _spool_download(self, merged: nn.Mlp) -> nn.Mlp:
        path = os.path.join(self.spool_dir, f"global_round{self.round}.bin")
        nn.save(merged, path)
        return nn.load(path)


def aggregate(theta_a: nn.Mlp, theta_b: nn.Mlp) -> nn.Mlp:
    """Unweighted elementwise mean of two shape-congruent actors."""
    if (
        theta_a.layer_dims != theta_b.layer_dims
        or theta_a.output_activation != theta_b.output_activation
    ):
        raise ValueError("cannot aggregate networks of different shapes")
    return theta_a.with_flat((theta_a.flat + theta_b.flat) / 2.0)


def init_and_distribute(
    config: marl_env.TrainConfig, seed=None, spool_dir: str | None = None
) -> tuple[Controller, Agent, Agent]:
    """Build the controller and both agents from one global actor.

    Both agents receive independent copies of the same initial actor, so
    they start parameter-identical; critics are initialized per agent from
    separate seed streams.
    """
    global_seed, seed_a, seed_b = as_seed_sequence(seed).spawn(3)
    actor_kwargs = dict(
        hidden=config.hidden,
        actor_lr=config.actor_lr,
        critic_lr=config.critic_lr,
        noise_scale=config.epsilon,
        noise_decay=config.noise_decay,
        noise_min=config.noise_min,
    )
    agent_a = make_agent("A", config.M, seed=seed_a, **actor_kwargs)
    agent_b = make_agent("B", config.M, seed=seed_b, **actor_kwargs)
    global_actor = nn.init_mlp((config.M, *config.hidden, config.M), "sigmoid", global_seed)
    for ag in (agent_a, agent_b):
        ag.actor = global_actor.copy()
        ag.target_actor = global_actor.copy()
    controller = Controller(global_actor=global_actor, E=config.E, spool_dir=spool_dir)
    return controller, agent_a, agent_b


@dataclass(frozen=True)
class TrainingResult:
    controller: Controller
    agent_a: Agent
    agent_b: Agent
    history: list  # EpochMetrics per epoch


def build_run(
    traces: dict[str, signals.PressureTrace],
    scenario: signals.ScenarioConfig,
    config: marl_env.TrainConfig,
    seed=None,
    spool_dir: str | None = None,
):
    """Construct all the pieces of a fresh training run.

    Returns ``(controller, agent_a, agent_b, env, memory, rng)``; separate
    seed streams cover initialization and the epoch loop.
    """
    if scenario.M != config.M or scenario.T != config.T:
        raise ValueError(
            f"scenario shape (M={scenario.M}, T={scenario.T}) does not match "
            f"training config (M={config.M}, T={config.T})"
        )
    init_seed, loop_seed = as_seed_sequence(seed).spawn(2)
    controller, agent_a, agent_b = init_and_distribute(config, init_seed, spool_dir=spool_dir)
    env = marl_env.Env(traces, scenario, config.lam)
    memory = marl_env.ReplayMemory(config.N_mem, 2 * config.M)
    rng = np.random.default_rng(loop_seed)
    return controller, agent_a, agent_b, env, memory, rng


def train_loop(
    controller: Controller,
    agent_a: Agent,
    agent_b: Agent,
    env: marl_env.Env,
    memory: marl_env.ReplayMemory,
    config: marl_env.TrainConfig,
    rng: np.random.Generator,
    *,
    start_epoch: int = 1,
    progress=None,
) -> list:
    """Epochs ``start_epoch..e_max`` with aggregation every E epochs.

    ``progress``, if given, is called with each epoch's metrics as they are
    produced (after any aggregation for that epoch).
    """
    history = []
    for epoch in range(start_epoch, config.e_max + 1):
        metrics = marl_env.train_epoch(
            (agent_a, agent_b), env, memory, config, rng, epoch=epoch
        )
        if controller.should_aggregate(epoch):
            controller.run_round(agent_a, agent_b)
        history.append(metrics)
        if progress is not None:
            progress(metrics)
    return history


def run_training(
    traces: dict[str, signals.PressureTrace],
    scenario: signals.ScenarioConfig,
    config: marl_env.TrainConfig,
    seed=None,
    *,
    spool_dir: str | None = None,
    progress=None,
) -> TrainingResult:
    """Full training run from scratch; deterministic under ``seed``."""
    controller, agent_a, agent_b, env, memory, rng = build_run(
        traces, scenario, config, seed, spool_dir
    )
    history = train_loop(
        controller, agent_a, agent_b, env, memory, config, rng, progress=progress
    )
    return TrainingResult(controller, agent_a, agent_b, history)
