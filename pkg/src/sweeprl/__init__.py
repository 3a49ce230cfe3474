"""sweeprl: coverage-path-planning RL on octant grid worlds.

A deterministic cleaning-robot simulator with exact tile/rotation rewards,
PPO and (dueling) DQN learners on a from-scratch MLP, size-invariant local
observations with nearest-uncleaned-tile guidance, streak reward shaping,
elite episode filtering, scripted baselines and a benchmark harness.
"""

from . import bench
from .backend import resolve_backend
from .errors import (ArchMismatchError, BadMagicError, EmptyBufferError,
                     EpisodeFinishedError, InsufficientSamplesError,
                     MalformedCsvError, MapFormatError, NoFreeCellError,
                     ObservationMismatchError, ShapeMismatchError,
                     SweepRLError, TrappedError, UnreachableError)
from .maps import builtin_map, get_map, list_builtin_maps, load_map, parse_map, render_map
from .metrics import MetricsRecord, read_csv, write_csv
from .neural import AdamState, NetSpec, action_values, init_params, policy_value, softmax
from .percept import ObservationSpec, local_window, nearest_uncleaned
from .planners import RandomAgent, ZigzagAgent, bfs_path, zigzag_plan
from .policyio import PolicyBundle, load_policy, save_policy
from .ppo import PpoConfig, PpoTrainer, RolloutBuffer, clipped_term, compute_gae, ratio
from .qlearn import DqnConfig, DqnTrainer, ReplayMemory, dueling_merge, td_target
from .shaping import (EliteConfig, EpisodeVerdict, ShapingConfig, StackState,
                      elite_filter, shape_episode, shaped_step)
from .world import (AgentState, CleaningEnv, GridMap, Heading, StepOutcome,
                    rotation_cost, rotation_reward, rotation_units)

__version__ = "0.1.0"

__all__ = [
    "AgentState", "AdamState", "ArchMismatchError", "BadMagicError",
    "CleaningEnv", "DqnConfig", "DqnTrainer", "EliteConfig",
    "EmptyBufferError", "EpisodeFinishedError", "EpisodeVerdict", "GridMap",
    "Heading", "InsufficientSamplesError", "MalformedCsvError",
    "MapFormatError", "MetricsRecord", "NetSpec", "NoFreeCellError",
    "ObservationMismatchError", "ObservationSpec", "PolicyBundle",
    "PpoConfig", "PpoTrainer", "RandomAgent", "ReplayMemory",
    "RolloutBuffer", "ShapeMismatchError", "ShapingConfig", "StackState",
    "StepOutcome", "SweepRLError", "TrappedError", "UnreachableError",
    "ZigzagAgent", "action_values", "bench", "bfs_path", "builtin_map",
    "clipped_term", "compute_gae", "dueling_merge", "elite_filter",
    "get_map", "init_params", "list_builtin_maps", "load_map", "load_policy",
    "local_window", "nearest_uncleaned", "parse_map", "policy_value",
    "ratio", "read_csv", "render_map", "resolve_backend", "rotation_cost",
    "rotation_reward", "rotation_units", "save_policy", "shape_episode",
    "shaped_step", "softmax", "td_target", "write_csv", "zigzag_plan",
]
