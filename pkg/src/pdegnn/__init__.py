"""Graph neural network engine whose layers are forward-Euler PDE steps.

First-order transport and quadratic-flux blocks, second-order diffusion and
wave blocks, and trainable mixtures of the two families, all written in
divergence form so per-channel mass is conserved through arbitrarily deep
stacks.  Includes a minimal reverse-mode tape, a full-graph trainer, and an
independent dense verification oracle.
"""

from .autodiff import Parameter, Tape, Tensor
from .blocks import (BlockOps, BlockParams, BlockState, MixParams, StepConfig,
                     apply_block)
from .data import DatasetBundle, SplitSpec, load_bundle, save_bundle
from .network import Model, ModelConfig, forward, init_model
from .sparse import (Graph, SparseOperator, build_averaging,
                     build_gcn_propagation, build_gradient, spmm,
                     spmm_transposed)
from .trainer import OptimConfig, RunResult, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Graph", "SparseOperator", "build_gradient", "build_averaging",
    "build_gcn_propagation", "spmm", "spmm_transposed",
    "Tensor", "Tape", "Parameter",
    "BlockState", "BlockParams", "MixParams", "StepConfig", "BlockOps",
    "apply_block",
    "Model", "ModelConfig", "init_model", "forward",
    "DatasetBundle", "SplitSpec", "load_bundle", "save_bundle",
    "OptimConfig", "RunResult", "train", "evaluate",
]
