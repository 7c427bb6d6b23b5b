"""Set-to-sequence learning-path recommender.

Python surface over the C++ core: synthetic student worlds, episode
sampling, the random/rule/MPC baselines, REINFORCE training and greedy
decoding of the pointer-style recommender.
"""

from srcrec._core import (
    DegenerateEpisodeError,
    Episode,
    HistoryItem,
    Model,
    Outcome,
    TrainRecord,
    ValidationError,
    World,
    brute_force_optimal,
    load_model,
    mpc_path,
    preset_world,
    random_path,
    rule_path,
    run_path,
    sample_episodes,
    train_model,
)

__all__ = [
    "DegenerateEpisodeError",
    "Episode",
    "HistoryItem",
    "Model",
    "Outcome",
    "TrainRecord",
    "ValidationError",
    "World",
    "brute_force_optimal",
    "load_model",
    "mpc_path",
    "preset_world",
    "random_path",
    "rule_path",
    "run_path",
    "sample_episodes",
    "train_model",
]

__version__ = "0.1.0"
