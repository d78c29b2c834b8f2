from . import tensor
from .layers import GruCell, LayerNorm, Linear, Mlp, MultiHeadAttention, TimeEncoder
from .optim import GroupOptimizer, ParamStore, clip_grad_norm
from .tensor import ContractError, Parameter, StaleTapeError, Tape, Tensor, backward

__all__ = [
    "tensor", "Tensor", "Parameter", "Tape", "backward",
    "ContractError", "StaleTapeError",
    "Linear", "LayerNorm", "Mlp", "GruCell", "MultiHeadAttention", "TimeEncoder",
    "ParamStore", "GroupOptimizer", "clip_grad_norm",
]
