"""Local planner policies: rewards, DWA baselines, rollouts and actor-critic training."""

from .actor_critic import ActorCriticConfig, ActorCriticPolicy, TrainingReport, train_actor_critic
from .dwa import DwaConfig, DwaPolicy, SampledHorizonPolicy, dwa_act, dwa_scores
from .rewards import DEFAULT_WEIGHTS, FEATURES, compute_reward, reward_features
from .rollout import COLLIDED, REACHED, TIMEOUT, EpisodeConfig, RandomPolicy, Trajectory, ZeroPolicy, rollout

POLICY_KINDS = ("learned", "dwa", "dwa_no_clearance", "scripted")


def make_scripted_policy(name: str, robot_kind: str, lidar=None):
    """Build a non-learned policy by name: ``dwa``, ``dwa_no_clearance`` or ``scripted``."""
    from ..world import LidarConfig

    lidar = lidar or LidarConfig()
    if name == "dwa":
        return DwaPolicy(lidar, enable_clearance=True)
    if name == "dwa_no_clearance":
        return DwaPolicy(lidar, enable_clearance=False)
    if name == "scripted":
        return SampledHorizonPolicy(robot_kind, lidar)
    raise ValueError(f"unknown scripted policy {name!r}")


def load_policy(spec: str, robot_kind: str, lidar=None):
    """A scripted policy name or a path to an actor-critic checkpoint."""
    if spec in ("dwa", "dwa_no_clearance", "scripted"):
        return make_scripted_policy(spec, robot_kind, lidar)
    policy = ActorCriticPolicy.load(spec)
    if policy.robot_kind != robot_kind:
        raise ValueError(f"checkpoint {spec} is for {policy.robot_kind}, not {robot_kind}")
    return policy
