"""One party's learner: actor, centralized critic, targets, and updates.

Each agent holds a sigmoid-output actor mapping its own M-dimensional
observation to an action in [0,1]^M, and a linear-output critic scoring the
joint state (both observations) together with the joint action, input width
4M.  Training follows the deterministic-policy-gradient recipe: the critic
regresses bootstrapped targets from the target networks, the actor ascends
the critic's value through its own action slot only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Accept None, an int, or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class ActionVector:
    """Continuous per-position scores in [0, 1], later thresholded to a mask."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("action must be a non-empty vector")
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise ValueError("action components must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass
class Agent:
    """Actor-critic learner for party "A" or "B"."""

    agent_id: str
    actor: nn.Mlp
    critic: nn.Mlp
    target_actor: nn.Mlp
    target_critic: nn.Mlp
    actor_opt: nn.AdamState
    critic_opt: nn.AdamState
    noise_scale: float = 0.4
    noise_decay: float = 0.9995
    noise_min: float = 0.01

    def __post_init__(self):
        if self.agent_id not in ("A", "B"):
            raise ValueError(f"agent_id must be 'A' or 'B', got {self.agent_id!r}")
        m = self.actor.in_dim
        if self.actor.out_dim != m or self.actor.output_activation != "sigmoid":
            raise ValueError("actor must map M inputs to M sigmoid outputs")
        if self.critic.in_dim != 4 * m or self.critic.out_dim != 1 or (
            self.critic.output_activation != "linear"
        ):
            raise ValueError("critic must map 4M inputs to one linear output")
        for online, target in ((self.actor, self.target_actor), (self.critic, self.target_critic)):
            if target.layer_dims != online.layer_dims:
                raise ValueError("target networks must match their online networks")
        if self.noise_scale < 0 or not 0.0 < self.noise_decay <= 1.0:
            raise ValueError("need noise_scale >= 0 and noise_decay in (0, 1]")

    @property
    def m(self) -> int:
        return self.actor.in_dim

    @property
    def own_slice(self) -> slice:
        """This agent's slot inside joint observation/action vectors."""
        return slice(0, self.m) if self.agent_id == "A" else slice(self.m, 2 * self.m)

    @property
    def peer_slice(self) -> slice:
        return slice(self.m, 2 * self.m) if self.agent_id == "A" else slice(0, self.m)

    def act(self, observation, explore: bool, rng: np.random.Generator) -> ActionVector:
        """Actor forward pass, with clamped Gaussian exploration noise if asked."""
        obs = np.asarray(observation, dtype=np.float64)
        if obs.shape != (self.m,):
            raise ValueError(f"observation shape {obs.shape} != ({self.m},)")
        out, _ = self.actor.forward(obs)
        if explore:
            out = out + rng.normal(0.0, self.noise_scale, size=self.m)
        return ActionVector(values=np.clip(out, 0.0, 1.0))

    def target_action(self, observations: np.ndarray) -> np.ndarray:
        """Noise-free target-actor forward on a batch of observations."""
        out, _ = self.target_actor.forward(observations)
        return out

    def decay_noise(self) -> "Agent":
        self.noise_scale = max(self.noise_scale * self.noise_decay, self.noise_min)
        return self

    def update_critic(self, batch, next_joint_action: np.ndarray, gamma: float) -> float:
        """One Adam step on the critic against bootstrapped targets.

        y = r + gamma * (1 - terminal) * Q'(s_next, a_next); returns the
        mean squared TD error before the step.  Targets carry no gradient.
        """
        n = batch.s.shape[0]
        q_next, _ = self.target_critic.forward(
            np.concatenate([batch.s_next, next_joint_action], axis=1)
        )
        y = batch.r + gamma * (1.0 - batch.terminal.astype(np.float64)) * q_next[:, 0]
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite critic target")
        q, cache = self.critic.forward(np.concatenate([batch.s, batch.a], axis=1))
        residual = q[:, 0] - y
        loss = float(np.mean(residual**2))
        grads, _ = self.critic.backward(cache, (2.0 * residual / n)[:, None])
        self.critic, self.critic_opt = nn.adam_step(self.critic, grads, self.critic_opt)
        return loss

    def update_actor(self, batch) -> float:
        """One ascent step on mean Q, differentiating through own action slot.

        Own actions are recomputed by the current actor; the peer slot keeps
        the actions stored in the batch.  Returns the objective estimate.
        """
        n = batch.s.shape[0]
        obs = batch.s[:, self.own_slice]
        own_action, actor_cache = self.actor.forward(obs)
        joint = np.empty_like(batch.a)
        joint[:, self.own_slice] = own_action
        joint[:, self.peer_slice] = batch.a[:, self.peer_slice]
        q, critic_cache = self.critic.forward(np.concatenate([batch.s, joint], axis=1))
        objective = float(np.mean(q))
        # dJ/dQ = 1/n; input grads only — critic parameters are frozen here
        _, g_in = self.critic.backward(
            critic_cache, np.full((n, 1), 1.0 / n), param_grads=False
        )
        g_own = g_in[:, 2 * self.m :][:, self.own_slice]
        grads, _ = self.actor.backward(actor_cache, g_own)
        grads.flat *= -1.0  # Adam minimizes; we ascend J
        self.actor, self.actor_opt = nn.adam_step(self.actor, grads, self.actor_opt)
        return objective

    def sync_targets(self, rho: float) -> "Agent":
        self.target_actor = nn.soft_update(self.target_actor, self.actor, rho)
        self.target_critic = nn.soft_update(self.target_critic, self.critic, rho)
        return self


def make_agent(
    agent_id: str,
    m: int,
    *,
    hidden=(100, 100, 100, 100),
    actor_lr: float = 1e-4,
    critic_lr: float = 1e-3,
    noise_scale: float = 0.4,
    noise_decay: float = 0.9995,
    noise_min: float = 0.01,
    seed=None,
) -> Agent:
    """Build an agent with freshly initialized networks.

    Actor and critic draw from independent seed streams so either can be
    resized without disturbing the other's initialization.
    """
    actor_seed, critic_seed = as_seed_sequence(seed).spawn(2)
    actor = nn.init_mlp((m, *hidden, m), "sigmoid", actor_seed)
    critic = nn.init_mlp((4 * m, *hidden, 1), "linear", critic_seed)
    return Agent(
        agent_id=agent_id,
        actor=actor,
        critic=critic,
        target_actor=actor.copy(),
        target_critic=critic.copy(),
        actor_opt=nn.AdamState.for_net(actor, actor_lr),
        critic_opt=nn.AdamState.for_net(critic, critic_lr),
        noise_scale=noise_scale,
        noise_decay=noise_decay,
        noise_min=noise_min,
    )
