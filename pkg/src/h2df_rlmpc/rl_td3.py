"""TD3 agent that learns an offset on the MPC load reference.

Twin critics with clipped double-Q targets, delayed actor updates, target
policy smoothing and Polyak-averaged target networks (Fujimoto et al., 2018).
Networks run in float64 on the CPU.
"""
from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .core_types import ConfigError, load_container, save_container


@dataclass(frozen=True)
class Td3Hyperparams:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise_std: float = 0.2  # bar
    target_noise_clip: float = 0.5  # bar
    exploration_noise_std: float = 0.3  # bar
    buffer_capacity: int = 200_000
    batch_size: int = 256
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    action_limit: float = 2.0  # bar
    hidden: int = 64
    state_dim: int = 5
    warmup: int = 5000  # transitions stored before the first update
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ConfigError("policy_delay must be >= 1")
        if not self.action_limit > 0:
            raise ConfigError("action_limit must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Td3Hyperparams":
        return cls(**data)


def compute_reward(ref_imep: float, imep: float) -> float:
    """Per-cycle load-tracking reward: -0.05 e^2 - 0.45 tanh(e^2)."""
    e2 = (ref_imep - imep) ** 2
    return -0.05 * e2 - 0.45 * math.tanh(e2)


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int = 5, seed: int = 0):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, 1))
        self.r = np.zeros((capacity, 1))
        self.s_next = np.zeros((capacity, state_dim))
        self.done = np.zeros((capacity, 1))
        self.ptr = 0
        self.size = 0
        self.rng = np.random.default_rng(seed)

    def __len__(self):
        return self.size

    def store(self, s, a, r, s_next, done=False):
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s_next[i], self.done[i] = s, a, r, s_next, float(done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int) -> np.ndarray:
        return self.rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int):
        idx = self.sample_indices(batch_size)
        return tuple(
            torch.from_numpy(arr[idx].copy()) for arr in (self.s, self.a, self.r, self.s_next, self.done)
        )


class Actor(nn.Module):
    def __init__(self, state_dim: int, hidden: int, action_limit: float):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(state_dim, hidden), nn.ReLU(),
            nn.Linear(hidden, hidden), nn.ReLU(),
            nn.Linear(hidden, 1),
        )
        self.action_limit = action_limit
        # untrained agent emits zero offset
        nn.init.zeros_(self.net[-1].weight)
        nn.init.zeros_(self.net[-1].bias)

    def forward(self, s):
        return self.action_limit * torch.tanh(self.net(s))


class Critic(nn.Module):
    def __init__(self, state_dim: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(state_dim + 1, hidden), nn.ReLU(),
            nn.Linear(hidden, hidden), nn.ReLU(),
            nn.Linear(hidden, 1),
        )

    def forward(self, s, a):
        return self.net(torch.cat([s, a], dim=-1))


class Td3Agent:
    def __init__(self, hyper: Td3Hyperparams = Td3Hyperparams()):
        self.hyper = hyper
        torch.manual_seed(hyper.seed)
        self.actor = Actor(hyper.state_dim, hyper.hidden, hyper.action_limit).double()
        self.critic1 = Critic(hyper.state_dim, hyper.hidden).double()
        self.critic2 = Critic(hyper.state_dim, hyper.hidden).double()
        self.actor_target = copy.deepcopy(self.actor)
        self.critic1_target = copy.deepcopy(self.critic1)
        self.critic2_target = copy.deepcopy(self.critic2)
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=hyper.actor_lr)
        self.critic1_opt = torch.optim.Adam(self.critic1.parameters(), lr=hyper.critic_lr)
        self.critic2_opt = torch.optim.Adam(self.critic2.parameters(), lr=hyper.critic_lr)
        self.noise_rng = np.random.default_rng(hyper.seed + 1)
        self.torch_gen = torch.Generator().manual_seed(hyper.seed + 2)
        self.step_counter = 0

    # ------------------------------------------------------------ acting
    def policy(self, s: np.ndarray) -> float:
        with torch.no_grad():
            return float(self.actor(torch.as_tensor(s, dtype=torch.float64)[None])[0, 0])

    def select_action(self, s: np.ndarray, noise_std: float = 0.0) -> float:
        a = self.policy(s)
        if noise_std > 0:
            a += float(self.noise_rng.normal(0.0, noise_std))
        lim = self.hyper.action_limit
        return float(np.clip(a, -lim, lim))

    # ----------------------------------------------------------- learning
    def td_target(self, r, s_next) -> torch.Tensor:
        """r + gamma * min(Q1', Q2')(s', smoothed target action).

        Episodes never terminate for the agent, so there is no done mask.
        """
        h = self.hyper
        with torch.no_grad():
            noise = torch.randn(s_next.shape[0], 1, generator=self.torch_gen, dtype=torch.float64)
            noise = (noise * h.target_noise_std).clamp(-h.target_noise_clip, h.target_noise_clip)
            a_next = (self.actor_target(s_next) + noise).clamp(-h.action_limit, h.action_limit)
            q_next = torch.min(self.critic1_target(s_next, a_next), self.critic2_target(s_next, a_next))
            return r + h.gamma * q_next

    def update(self, buffer: ReplayBuffer) -> dict:
        h = self.hyper
        if len(buffer) < h.batch_size:
            return {"skipped": True}
        s, a, r, s_next, _ = buffer.sample(h.batch_size)
        target = self.td_target(r, s_next)
        report = {"skipped": False}
        for name, critic, opt in (
            ("critic1", self.critic1, self.critic1_opt),
            ("critic2", self.critic2, self.critic2_opt),
        ):
            loss = torch.mean((critic(s, a) - target) ** 2)
            opt.zero_grad()
            loss.backward()
            opt.step()
            report[name] = loss.item()

        self.step_counter += 1
        if self.step_counter % h.policy_delay == 0:
            actor_loss = -self.critic1(s, self.actor(s)).mean()
            self.actor_opt.zero_grad()
            actor_loss.backward()
            self.actor_opt.step()
            report["actor"] = actor_loss.item()
            self.soft_update()
        return report

    def soft_update(self):
        tau = self.hyper.tau
        with torch.no_grad():
            for net, target in (
                (self.actor, self.actor_target),
                (self.critic1, self.critic1_target),
                (self.critic2, self.critic2_target),
            ):
                for p, tp in zip(net.parameters(), target.parameters()):
                    tp.copy_(tau * p + (1.0 - tau) * tp)

    # -------------------------------------------------------- persistence
    def _modules(self):
        return {
            "actor": self.actor,
            "critic1": self.critic1,
            "critic2": self.critic2,
            "actor_target": self.actor_target,
            "critic1_target": self.critic1_target,
            "critic2_target": self.critic2_target,
        }

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            f"{mod}.{name}": t.detach().numpy().copy()
            for mod, net in self._modules().items()
            for name, t in net.state_dict().items()
        }

    def save(self, path, meta: dict | None = None):
        info = {"hyperparameters": self.hyper.to_dict()}
        info.update(meta or {})
        save_container(path, "td3_agent", self.state_arrays(), info)

    @classmethod
    def load(cls, path) -> "Td3Agent":
        arrays, meta = load_container(path, "td3_agent")
        agent = cls(Td3Hyperparams.from_dict(meta["hyperparameters"]))
        expected = {k: v.shape for k, v in agent.state_arrays().items()}
        if set(expected) != set(arrays) or any(arrays[k].shape != s for k, s in expected.items()):
            raise ConfigError(f"{path}: checkpoint layers do not match the agent architecture")
        for mod, net in agent._modules().items():
            net.load_state_dict(
                {name: torch.from_numpy(arrays[f"{mod}.{name}"]) for name in net.state_dict()}
            )
        return agent


class ToyTrackingTask:
    """1-D tracking sanity task: the action shifts an error, reward -e^2.

    ``e' = e + a``; each episode starts from ``e0 ~ U(-1, 1)``.
    """

    def __init__(self, episode_len: int = 20, seed: int = 0):
        self.episode_len = episode_len
        self.rng = np.random.default_rng(seed)

    def run_episode(self, agent: Td3Agent, noise_std: float, buffer: ReplayBuffer | None = None,
                    learn: bool = False, e0: float | None = None) -> float:
        e = self.rng.uniform(-1.0, 1.0) if e0 is None else e0
        total = 0.0
        for t in range(self.episode_len):
            s = np.array([e])
            a = agent.select_action(s, noise_std)
            e_next = float(np.clip(e + a, -2.0, 2.0))
            r = -e_next**2
            total += r
            if buffer is not None:
                buffer.store(s, [a], r, [e_next], t == self.episode_len - 1)
                if learn and len(buffer) >= agent.hyper.warmup:
                    agent.update(buffer)
            e = e_next
        return total / self.episode_len

    def evaluate(self, agent: Td3Agent, starts=np.linspace(-1.0, 1.0, 21)) -> float:
        return float(np.mean([self.run_episode(agent, 0.0, e0=e0) for e0 in starts]))
