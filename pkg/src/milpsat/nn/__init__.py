"""Tensor engine and the MILP-graph GNN."""

from .gnn import (
    AdamState,
    DimensionError,
    GnnConfig,
    GnnModel,
    Mlp,
    adam_step,
    backward,
    classify,
    forward,
    loss,
    predict,
)
from .tensor import Tensor

__all__ = [
    "AdamState", "DimensionError", "GnnConfig", "GnnModel", "Mlp", "Tensor",
    "adam_step", "backward", "classify", "forward", "loss", "predict",
]
