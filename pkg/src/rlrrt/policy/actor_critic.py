"""Deterministic actor-critic (DDPG-style) training of a point-to-point policy.

Reward weights are fixed per robot; there is no outer search over rewards or
hyperparameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import ROBOTS, clamp_action, propagate
from ..neuralnet import Adam, NeuralNet, load_weights, save_weights
from ..observation import FrameStack, ObservationScaling, make_observation, normalize_observation, observation_size
from ..world import GoalSpec, LidarConfig, OccupancyGrid, lidar_scan, point_free, sample_free_position
from .rewards import DEFAULT_WEIGHTS, compute_reward
from .rollout import REACHED, EpisodeConfig, RandomPolicy, pose_of, rollout

log = logging.getLogger(__name__)


class ActorCriticPolicy:
    """Learned local planner: actor maps normalized observations to tanh actions."""

    kind = "learned"

    def __init__(self, robot_kind: str, actor: NeuralNet, critic: NeuralNet, scaling: ObservationScaling):
        self.robot_kind = robot_kind
        self.actor = actor
        self.critic = critic
        self.scaling = scaling
        spec = ROBOTS[robot_kind]
        self._low = np.array(spec.action_low)
        self._high = np.array(spec.action_high)

    def to_action(self, u):
        return self._low + 0.5 * (np.asarray(u) + 1.0) * (self._high - self._low)

    def to_unit(self, a):
        return 2.0 * (np.asarray(a) - self._low) / (self._high - self._low) - 1.0

    def act(self, obs):
        u = self.actor.forward(normalize_observation(obs, self.scaling))
        return clamp_action(self.to_action(u), self.robot_kind)

    def value(self, obs) -> np.ndarray:
        """Critic estimate Q(o, actor(o)) for one observation or a batch."""
        z = normalize_observation(obs, self.scaling)
        u = self.actor.forward(z)
        return self.critic.forward(np.concatenate([z, u], axis=-1))[..., 0]

    def save(self, path, metadata: dict | None = None) -> None:
        path = Path(path)
        meta = {"robot_kind": self.robot_kind, "policy_kind": self.kind, "scaling": self.scaling.to_dict(),
                "critic_file": path.name + ".critic"}
        meta.update(metadata or {})
        save_weights(self.actor, path, meta)
        save_weights(self.critic, path.with_name(path.name + ".critic"), {"role": "critic"})

    @classmethod
    def load(cls, path) -> "ActorCriticPolicy":
        path = Path(path)
        actor, meta = load_weights(path)
        critic, _ = load_weights(path.with_name(meta.get("critic_file", path.name + ".critic")))
        return cls(meta["robot_kind"], actor, critic, ObservationScaling(**meta["scaling"]))


@dataclass
class ActorCriticConfig:
    total_steps: int = 40_000
    warmup_steps: int = 1_000
    batch_size: int = 64
    buffer_size: int = 100_000
    gamma: float = 0.98
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    hidden: tuple = (64, 64)
    exploration_sigma: float = 0.3
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    seed: int = 0
    eval_episodes: int = 50
    eval_goal_radius: float = 5.0
    success_margin: float = 0.1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainingReport:
    returns: list = field(default_factory=list)
    critic_losses: list = field(default_factory=list)
    success_rate: float = math.nan
    random_success_rate: float = math.nan
    meets_margin: bool = False
    seed: int = 0


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.nxt = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self.ptr = 0

    def add(self, o, a, r, o2, d):
        k = self.ptr
        self.obs[k], self.act[k], self.rew[k], self.nxt[k], self.done[k] = o, a, r, o2, d
        self.ptr = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng, n):
        idx = rng.integers(0, self.size, n)
        return self.obs[idx], self.act[idx], self.rew[idx], self.nxt[idx], self.done[idx]


def _soft_update(target: NeuralNet, source: NeuralNet, tau: float):
    for t, s in zip(target.params, source.params):
        t *= 1.0 - tau
        t += tau * s


def sample_start_goal(grid: OccupancyGrid, robot_kind: str, goal_radius: float, rng, d_goal: float = 0.5,
                      max_tries: int = 1000):
    """Zero-velocity start pose and a free goal within ``goal_radius`` of it."""
    spec = ROBOTS[robot_kind]
    sx, sy = sample_free_position(grid, spec.radius, rng)
    start = spec.state_at(sx, sy, rng.uniform(-math.pi, math.pi))
    for _ in range(max_tries):
        r = goal_radius * math.sqrt(rng.uniform())
        a = rng.uniform(-math.pi, math.pi)
        gx, gy = sx + r * math.cos(a), sy + r * math.sin(a)
        if grid.in_bounds(gx, gy) and point_free(grid, (gx, gy), spec.radius):
            return start, GoalSpec((gx, gy), d_goal)
    raise ValueError("could not place a goal near the start")


def evaluate_success(policy, grid, robot_kind, n, goal_radius, cfg: EpisodeConfig, lidar, seed) -> float:
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n):
        start, goal = sample_start_goal(grid, robot_kind, goal_radius, rng, cfg.goal_radius)
        hits += rollout(policy, grid, start, goal, cfg, rng, lidar).outcome == REACHED
    return hits / n


def train_actor_critic(robot_kind: str, grid: OccupancyGrid, weights=None,
                       cfg: ActorCriticConfig | None = None) -> tuple[ActorCriticPolicy, TrainingReport]:
    cfg = cfg or ActorCriticConfig()
    weights = DEFAULT_WEIGHTS[robot_kind] if weights is None else np.asarray(weights, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    spec = ROBOTS[robot_kind]
    lidar = cfg.lidar
    ep = cfg.episode
    scaling = ObservationScaling(n_beams=lidar.n_beams, max_range=lidar.max_range)
    obs_dim = observation_size(lidar.n_beams)
    actor = NeuralNet([obs_dim, *cfg.hidden, 2], "tanh", seed=cfg.seed)
    critic = NeuralNet([obs_dim + 2, *cfg.hidden, 1], "identity", seed=cfg.seed + 1)
    # small final actor layer keeps early actions near the box center
    actor.weights[-1] *= 0.1
    policy = ActorCriticPolicy(robot_kind, actor, critic, scaling)
    actor_t, critic_t = actor.copy(), critic.copy()
    actor_opt = Adam(actor.params, cfg.actor_lr)
    critic_opt = Adam(critic.params, cfg.critic_lr)
    buf = ReplayBuffer(cfg.buffer_size, obs_dim, 2)
    report = TrainingReport(seed=cfg.seed)

    def new_episode():
        start, goal = sample_start_goal(grid, robot_kind, ep.goal_sample_radius, rng, ep.goal_radius)
        stack = FrameStack([lidar_scan(grid, pose_of(start), lidar, rng)])
        return start, goal, stack, [start], 0, 0.0

    state, goal, stack, history, t, ret = new_episode()
    obs = normalize_observation(make_observation(state, goal, stack), scaling)
    for step in range(cfg.total_steps):
        if step < cfg.warmup_steps:
            u = rng.uniform(-1.0, 1.0, 2)
        else:
            u = np.clip(actor.forward(obs) + rng.normal(0.0, cfg.exploration_sigma, 2), -1.0, 1.0)
        action = clamp_action(policy.to_action(u), robot_kind)
        state = propagate(state, action, ep.dt_policy)
        t += 1
        collided = not point_free(grid, (state.x, state.y), spec.radius)
        reached = goal.reached(state.x, state.y)
        if collided:
            scan = np.zeros(lidar.n_beams)
        else:
            scan = lidar_scan(grid, pose_of(state), lidar, rng)
            stack.push(scan)
        r = compute_reward(history, state, action, scan, goal, weights, collided)
        history.append(state)
        ret += r
        nxt = normalize_observation(make_observation(state, goal, stack), scaling)
        terminal = collided or reached
        buf.add(obs, u, r, nxt, float(terminal))
        obs = nxt
        if terminal or t >= ep.max_steps:
            report.returns.append(ret)
            state, goal, stack, history, t, ret = new_episode()
            obs = normalize_observation(make_observation(state, goal, stack), scaling)

        if step >= cfg.warmup_steps and buf.size >= cfg.batch_size:
            o, a, rew, o2, d = buf.sample(rng, cfg.batch_size)
            a2 = actor_t.forward(o2)
            q2 = critic_t.forward(np.concatenate([o2, a2], axis=1))[:, 0]
            target = rew + cfg.gamma * (1.0 - d) * q2
            q, cache = critic.forward(np.concatenate([o, a], axis=1), return_cache=True)
            diff = q[:, 0] - target
            loss = float(np.mean(diff * diff))
            if not np.isfinite(loss):
                raise FloatingPointError(f"critic loss diverged at step {step}: {loss}")
            grads, _ = critic.backward(cache, (2.0 * diff / diff.size)[:, None])
            critic_opt.step(grads)
            report.critic_losses.append(loss)

            u_pi, a_cache = actor.forward(o, return_cache=True)
            _, c_cache = critic.forward(np.concatenate([o, u_pi], axis=1), return_cache=True)
            _, g_in = critic.backward(c_cache, np.full((o.shape[0], 1), -1.0 / o.shape[0]))
            a_grads, _ = actor.backward(a_cache, g_in[:, obs_dim:])
            actor_opt.step(a_grads)
            _soft_update(actor_t, actor, cfg.tau)
            _soft_update(critic_t, critic, cfg.tau)

    if cfg.eval_episodes > 0:
        eval_cfg = EpisodeConfig(ep.dt_policy, ep.max_episode_time, ep.goal_radius, cfg.eval_goal_radius)
        report.success_rate = evaluate_success(policy, grid, robot_kind, cfg.eval_episodes, cfg.eval_goal_radius,
                                               eval_cfg, lidar, cfg.seed + 10_000)
        baseline = RandomPolicy(robot_kind, np.random.default_rng(cfg.seed + 20_000))
        report.random_success_rate = evaluate_success(baseline, grid, robot_kind, cfg.eval_episodes,
                                                      cfg.eval_goal_radius, eval_cfg, lidar, cfg.seed + 10_000)
        report.meets_margin = report.success_rate >= report.random_success_rate + cfg.success_margin
        if not report.meets_margin:
            log.warning("trained policy success %.2f does not beat random %.2f by %.2f",
                        report.success_rate, report.random_success_rate, cfg.success_margin)
    return policy, report
