from .actor_critic import MaskedActorCritic, PolicyOutput
from .masks import ActionMask, apply_mask_renormalize, compute_masks
from .reward import DelayRecord, compute_reward

__all__ = ["MaskedActorCritic", "PolicyOutput", "ActionMask",
           "apply_mask_renormalize", "compute_masks", "DelayRecord",
           "compute_reward"]
