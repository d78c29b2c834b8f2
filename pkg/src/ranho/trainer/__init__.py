from .buffer import RolloutBuffer, StepRecord
from .gae import compute_gae, normalize_advantages
from .loop import (ModelBundle, TrainResult, TrainVariant, build_models,
                   collect_rollout, load_checkpoint, save_checkpoint, train)
from .pipeline import LearnedAgentPipeline, interval_rewards
from .ppo import (PpoConfig, TrainingAborted, make_optimizer, minibatch_losses,
                  update_step)

__all__ = [
    "RolloutBuffer", "StepRecord", "compute_gae", "normalize_advantages",
    "ModelBundle", "TrainResult", "TrainVariant", "build_models",
    "collect_rollout", "load_checkpoint", "save_checkpoint", "train",
    "LearnedAgentPipeline", "interval_rewards",
    "PpoConfig", "TrainingAborted", "make_optimizer", "minibatch_losses",
    "update_step",
]
