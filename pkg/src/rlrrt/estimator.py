"""Obstacle-aware reachability estimator.

Rolls a local planner out from random starts, labels every observation with
the cumulative future time-to-reach (TTR) cost, and regresses that label from
the observation. A prediction at or above the horizon means "unreachable".
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dynamics import ROBOTS, robot_kind_of
from .neuralnet import NeuralNet, TrainConfig, load_weights, save_weights, train
from .observation import FrameStack, ObservationScaling, make_observations, normalize_observation, observation_size
from .policy.actor_critic import sample_start_goal
from .policy.rollout import COLLIDED, REACHED, EpisodeConfig, pose_of, rollout
from .world import GoalSpec, LidarConfig, OccupancyGrid, lidar_scan

HIDDEN = (500, 200, 100)
DROPOUT = 0.5


@dataclass(frozen=True)
class TTRConfig:
    dt: float = 0.1
    t_horizon: float = 20.0
    n_episodes: int = 1000
    goal_sample_radius: float = 20.0
    goal_radius: float = 0.5

    def __post_init__(self):
        if not self.dt > 0 or not self.t_horizon > self.dt:
            raise ValueError("need dt > 0 and t_horizon > dt")

    @property
    def ttr_threshold(self) -> float:
        return self.t_horizon

    @classmethod
    def for_robot(cls, robot_kind: str, **kw) -> "TTRConfig":
        kw.setdefault("t_horizon", ROBOTS[robot_kind].t_horizon)
        return cls(**kw)

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(self.dt, self.t_horizon, self.goal_radius, self.goal_sample_radius)


def ttr_step_cost(elapsed: float, collided: bool, cfg: TTRConfig, reached: bool = False) -> tuple[float, bool]:
    """Cost of one step and whether the episode ends there.

    Failure (collision, or the horizon running out) costs ``dt + t_horizon``.
    """
    if reached and not collided:
        return cfg.dt, True
    if collided or elapsed >= cfg.t_horizon - 1e-9:
        return cfg.dt + cfg.t_horizon, True
    return cfg.dt, False


def cumulative_future_cost(costs) -> list:
    """Suffix sums ``out[i] = sum(costs[i:])``, each correctly rounded.

    Summation is exact (rational) so a 200-step success at dt=0.1 sums to
    exactly 20.0 instead of drifting above the horizon.
    """
    costs = list(costs)
    if not costs:
        raise ValueError("empty cost history")
    out = [0.0] * len(costs)
    acc = Fraction(0)
    for i in range(len(costs) - 1, -1, -1):
        acc += Fraction(costs[i])
        out[i] = float(acc)
    return out


@dataclass
class TTRDataset:
    observations: np.ndarray
    labels: np.ndarray
    episode: np.ndarray
    step: np.ndarray
    reached: np.ndarray
    header: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, mask) -> "TTRDataset":
        mask = np.asarray(mask)
        return TTRDataset(self.observations[mask], self.labels[mask], self.episode[mask], self.step[mask],
                          self.reached[mask], dict(self.header))

    def save(self, path) -> None:
        np.savez_compressed(path, observations=self.observations, labels=self.labels, episode=self.episode,
                            step=self.step, reached=self.reached, header=json.dumps(self.header, sort_keys=True))

    @classmethod
    def load(cls, path) -> "TTRDataset":
        with np.load(path, allow_pickle=False) as z:
            return cls(z["observations"], z["labels"], z["episode"], z["step"], z["reached"],
                       json.loads(str(z["header"])))


def episode_costs(n_steps: int, outcome: str, cfg: TTRConfig) -> list:
    """Per-step TTR costs of an episode that ended with ``outcome`` after ``n_steps``."""
    costs = []
    for k in range(1, n_steps + 1):
        last = k == n_steps
        cost, done = ttr_step_cost(k * cfg.dt, last and outcome == COLLIDED, cfg,
                                   reached=last and outcome == REACHED)
        if done != last:
            raise RuntimeError(f"episode ended at step {n_steps} but cost rule ends at step {k}")
        costs.append(cost)
    return costs


def episode_labels(n_steps: int, outcome: str, cfg: TTRConfig) -> list:
    return cumulative_future_cost(episode_costs(n_steps, outcome, cfg))


def collect_training_data(policy, grid: OccupancyGrid, cfg: TTRConfig, rng: np.random.Generator,
                          lidar: LidarConfig = LidarConfig()) -> TTRDataset:
    """Roll the policy out ``cfg.n_episodes`` times and label every observation."""
    kind = policy.robot_kind
    ep_cfg = cfg.episode_config()
    obs, labels, ep_ids, steps, reached = [], [], [], [], []
    for i in range(cfg.n_episodes):
        start, goal = sample_start_goal(grid, kind, cfg.goal_sample_radius, rng, cfg.goal_radius)
        traj = rollout(policy, grid, start, goal, ep_cfg, rng, lidar)
        if traj.n_steps == 0:
            continue
        cfc = episode_labels(traj.n_steps, traj.outcome, cfg)
        for j, (o, y) in enumerate(zip(traj.observations, cfc)):
            obs.append(o)
            labels.append(y)
            ep_ids.append(i)
            steps.append(j)
            reached.append(traj.outcome == REACHED)
    dim = observation_size(lidar.n_beams)
    header = {"robot_kind": kind, "n_beams": lidar.n_beams, "max_range": lidar.max_range, "dt": cfg.dt,
              "t_horizon": cfg.t_horizon, "episodes": cfg.n_episodes, "policy": getattr(policy, "kind", "?")}
    return TTRDataset(np.array(obs).reshape(-1, dim), np.array(labels, dtype=np.float64),
                      np.array(ep_ids, dtype=np.int64), np.array(steps, dtype=np.int64),
                      np.array(reached, dtype=bool), header)


def split_by_episode(ds: TTRDataset, train_fraction: float = 0.9, seed: int = 0) -> tuple[TTRDataset, TTRDataset]:
    episodes = np.unique(ds.episode)
    rng = np.random.default_rng(seed)
    rng.shuffle(episodes)
    n_train = int(round(train_fraction * len(episodes)))
    train_eps = episodes[:n_train]
    mask = np.isin(ds.episode, train_eps)
    return ds.subset(mask), ds.subset(~mask)


# ---------------------------------------------------------------- metrics


@dataclass
class ClassificationReport:
    """Reachability confusion matrix as fractions; rows predicted, columns true.

    Positive = reachable (TTR below threshold).
    """

    tp: float
    fp: float
    fn: float
    tn: float
    n: int = 0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else math.nan

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else math.nan

    @property
    def accuracy(self) -> float:
        d = self.tp + self.fp + self.fn + self.tn
        return (self.tp + self.tn) / d if d else math.nan

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn, "n": self.n,
                "precision": self.precision, "recall": self.recall, "accuracy": self.accuracy}

    def table(self, label: str = "") -> str:
        pct = lambda v: f"{100 * v:5.1f}"
        return "\n".join([
            f"{label:<10}|            true reach  true unreach | prec.  recall  accur.",
            f"{'':<10}| pred reach     {pct(self.tp)}        {pct(self.fp)}   | "
            f"{pct(self.precision)}  {pct(self.recall)}  {pct(self.accuracy)}",
            f"{'':<10}| pred unreach   {pct(self.fn)}        {pct(self.tn)}   |",
        ])


def classification_metrics(predicted, labels, threshold: float) -> ClassificationReport:
    p = np.asarray(predicted) < threshold
    t = np.asarray(labels) < threshold
    n = p.shape[0]
    if n == 0:
        return ClassificationReport(0.0, 0.0, 0.0, 0.0, 0)
    return ClassificationReport(
        tp=float(np.sum(p & t)) / n, fp=float(np.sum(p & ~t)) / n,
        fn=float(np.sum(~p & t)) / n, tn=float(np.sum(~p & ~t)) / n, n=n,
    )


# ---------------------------------------------------------------- estimator


class ReachabilityEstimator:
    def __init__(self, net: NeuralNet, scaling: ObservationScaling, ttr_threshold: float, robot_kind: str,
                 label_scale: float | None = None, metadata: dict | None = None):
        if net.layer_dims[0] != observation_size(scaling.n_beams):
            raise ValueError("network input size does not match the observation layout")
        self.net = net
        self.scaling = scaling
        self.ttr_threshold = float(ttr_threshold)
        self.label_scale = float(label_scale or ttr_threshold)
        self.robot_kind = robot_kind
        self.metadata = dict(metadata or {})
        self.calls = 0

    @property
    def input_dim(self) -> int:
        return self.net.layer_dims[0]

    def predict(self, observations) -> np.ndarray:
        """TTR in seconds for a batch (or a single observation)."""
        obs = np.asarray(observations, dtype=np.float64)
        if obs.shape[-1] != self.input_dim:
            raise ValueError(f"observation dimension {obs.shape[-1]} != {self.input_dim}")
        self.calls += 1
        out = self.net.forward(normalize_observation(obs, self.scaling))[..., 0] * self.label_scale
        return out

    def save(self, path) -> None:
        meta = {"robot_kind": self.robot_kind, "scaling": self.scaling.to_dict(), "ttr_threshold": self.ttr_threshold,
                "label_scale": self.label_scale}
        meta.update(self.metadata)
        save_weights(self.net, path, meta)

    @classmethod
    def load(cls, path) -> "ReachabilityEstimator":
        net, meta = load_weights(path)
        extra = {k: v for k, v in meta.items()
                 if k not in ("robot_kind", "scaling", "ttr_threshold", "label_scale")}
        return cls(net, ObservationScaling(**meta["scaling"]), meta["ttr_threshold"], meta["robot_kind"],
                   meta["label_scale"], extra)


@dataclass
class EstimatorReport:
    train_losses: list
    holdout: ClassificationReport
    holdout_mse: float
    n_train: int
    n_holdout: int
    config: dict

    def as_dict(self) -> dict:
        return {"train_losses": self.train_losses, "holdout": self.holdout.as_dict(), "holdout_mse": self.holdout_mse,
                "n_train": self.n_train, "n_holdout": self.n_holdout, "config": self.config}


def _fit(ds: TTRDataset, cfg: TrainConfig, hidden, dropout) -> ReachabilityEstimator:
    h = ds.header
    scaling = ObservationScaling(n_beams=int(h["n_beams"]), max_range=float(h["max_range"]))
    t_h = float(h["t_horizon"])
    net = NeuralNet([ds.observations.shape[1], *hidden, 1], "identity", dropout=dropout, seed=cfg.seed)
    result = train(net, normalize_observation(ds.observations, scaling), ds.labels / t_h, cfg)
    meta = {"train_config": asdict(cfg), "dataset": dict(h), "hidden": list(hidden), "dropout": dropout,
            "train_losses": result.losses}
    return ReachabilityEstimator(result.net, scaling, t_h, h["robot_kind"], t_h, meta)


def train_estimator(dataset: TTRDataset, cfg: TrainConfig = TrainConfig(), hidden=HIDDEN, dropout=DROPOUT,
                    train_fraction: float = 0.9) -> tuple[ReachabilityEstimator, EstimatorReport]:
    """Fit on an episode-wise split and report held-out reachability classification."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    train_ds, hold_ds = split_by_episode(dataset, train_fraction, cfg.seed)
    if len(train_ds) == 0:
        train_ds = dataset
    est = _fit(train_ds, cfg, hidden, dropout)
    if len(hold_ds):
        pred = est.predict(hold_ds.observations)
        holdout = classification_metrics(pred, hold_ds.labels, est.ttr_threshold)
        mse = float(np.mean((pred - hold_ds.labels) ** 2))
    else:
        holdout, mse = classification_metrics([], [], est.ttr_threshold), math.nan
    report = EstimatorReport(est.metadata["train_losses"], holdout, mse, len(train_ds), len(hold_ds), asdict(cfg))
    est.metadata["holdout"] = holdout.as_dict()
    return est, report


def filter_reached(dataset: TTRDataset) -> TTRDataset:
    return dataset.subset(dataset.reached)


def train_ttr_only_estimator(dataset: TTRDataset, cfg: TrainConfig = TrainConfig(), hidden=HIDDEN,
                             dropout=DROPOUT) -> ReachabilityEstimator:
    """Regressor fitted only on episodes that reached their goal."""
    ds = filter_reached(dataset)
    if len(ds) == 0:
        raise ValueError("no goal-reaching episodes in dataset")
    est = _fit(ds, cfg, hidden, dropout)
    est.metadata["ttr_only"] = True
    return est


def mean_signed_error(est: ReachabilityEstimator, dataset: TTRDataset) -> float:
    return float(np.mean(est.predict(dataset.observations) - dataset.labels))


# ---------------------------------------------------------------- queries


def predict_ttr(est: ReachabilityEstimator, observation) -> float:
    return float(est.predict(np.asarray(observation)[None, :])[0])


def hypercube_targets(center_xy, n_samples: int, half_width: float, rng: np.random.Generator) -> np.ndarray:
    c = np.asarray(center_xy, dtype=np.float64)
    if half_width <= 0:
        return np.tile(c, (n_samples, 1))
    return c + rng.uniform(-half_width, half_width, size=(n_samples, 2))


def avg_ttr(est: ReachabilityEstimator, from_state, to_state, grid: OccupancyGrid, rng: np.random.Generator,
            n_samples: int = 10, half_width: float = 0.3, stack: FrameStack | None = None,
            lidar: LidarConfig | None = None) -> float:
    """Mean predicted TTR from ``from_state`` to targets around ``to_state``'s position.

    Targets are uniform in a square of half-width ``half_width`` (meters);
    the target's orientation and velocity play no part in the observation.
    """
    if robot_kind_of(from_state) != robot_kind_of(to_state):
        raise ValueError("states belong to different robot kinds")
    if stack is None:
        lidar = lidar or LidarConfig(n_beams=est.scaling.n_beams, max_range=est.scaling.max_range)
        stack = FrameStack([lidar_scan(grid, pose_of(from_state), lidar, rng)])
    targets = hypercube_targets((to_state.x, to_state.y), n_samples, half_width, rng)
    return float(np.mean(est.predict(make_observations(from_state, targets, stack))))


class RolloutTTROracle:
    """Ground-truth cumulative TTR cost by actually rolling the policy out.

    Uses a noise-free lidar so the answer is deterministic.
    """

    def __init__(self, policy, grid: OccupancyGrid, cfg: TTRConfig, lidar: LidarConfig = LidarConfig()):
        self.policy = policy
        self.grid = grid
        self.cfg = cfg
        self.lidar = LidarConfig(lidar.n_beams, lidar.max_range, 0.0, lidar.field_of_view)
        self.calls = 0

    def ttr(self, from_state, target_xy, stack: FrameStack | None = None) -> float:
        self.calls += 1
        goal = GoalSpec((float(target_xy[0]), float(target_xy[1])), self.cfg.goal_radius)
        traj = rollout(self.policy, self.grid, from_state, goal, self.cfg.episode_config(),
                       np.random.default_rng(0), self.lidar, stack=None)
        if traj.n_steps == 0:
            return 0.0
        return episode_labels(traj.n_steps, traj.outcome, self.cfg)[0]
