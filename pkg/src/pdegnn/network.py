"""Node-classification model: dropout, embed, activate, L blocks, dropout, classify.

The two 1x1 convolutions are right-multiplications of the node-feature
matrix by a weight matrix.  Logits come out raw; softmax lives inside the
loss.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import blocks as bl
from .autodiff import Parameter, Tape, Tensor
from .sparse import Graph, build_averaging, build_gcn_propagation, build_gradient

CHECKPOINT_MAGIC = b"PDEGNN1\n"


@dataclass
class ModelConfig:
    block_kind: str
    depth: int
    channels: int
    dropout_p: float = 0.5
    h: float = 0.5
    activation: str = "relu"
    tie_weights: bool = False
    seed: int = 0
    sign_free_edges: bool = False

    def __post_init__(self):
        if self.block_kind not in bl.BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.block_kind!r}")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.activation not in ad.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Model:
    config: ModelConfig
    f_in: int
    classes: int
    w_in: Parameter
    w_out: Parameter
    blocks: list[bl.BlockParams]
    mix: bl.MixParams | None
    ops: bl.BlockOps
    graph: Graph

    def parameters(self) -> list[Parameter]:
        """All trainable parameters, tied kernels listed once."""
        params = [self.w_in]
        seen = {id(self.w_in)}
        for blk in self.blocks:
            if id(blk.K) not in seen:
                params.append(blk.K)
                seen.add(id(blk.K))
        params.append(self.w_out)
        if self.mix is not None:
            params.extend([self.mix.alpha_raw, self.mix.d_diff_raw,
                           self.mix.d_wave_raw])
        names = [p.name for p in params]
        assert len(names) == len(set(names)), "parameter names must be unique"
        return params


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
           dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)


def init_model(cfg: ModelConfig, graph: Graph, f_in: int, classes: int,
               dtype=np.float32) -> Model:
    """Build operators and draw weights from the seeded generator.

    Draw order is fixed (w_in, each kernel, w_out) so equal seeds give equal
    parameters.  Mixing raws start at zero: effective mixing weight and edge
    weights all 0.5.
    """
    rng = np.random.default_rng(cfg.seed)
    w_in = Parameter(glorot(rng, f_in, cfg.channels, dtype), "w_in")
    n_kernels = 1 if cfg.tie_weights else cfg.depth
    kernels = [Parameter(glorot(rng, cfg.channels, cfg.channels, dtype),
                         "K" if cfg.tie_weights else f"K_{i}")
               for i in range(n_kernels)]
    w_out = Parameter(glorot(rng, cfg.channels, classes, dtype), "w_out")
    block_params = [bl.BlockParams(kernels[0] if cfg.tie_weights else kernels[i],
                                   cfg.activation)
                    for i in range(cfg.depth)]
    mix = None
    if cfg.block_kind in ("mix_ad", "mix_aw"):
        zeros_m = np.zeros(graph.m, dtype=dtype)
        mix = bl.MixParams(
            alpha_raw=Parameter(np.asarray(0.0, dtype=dtype), "alpha_raw",
                                weight_decay_eligible=False),
            d_diff_raw=Parameter(zeros_m.copy(), "d_diff_raw",
                                 weight_decay_eligible=False),
            d_wave_raw=Parameter(zeros_m.copy(), "d_wave_raw",
                                 weight_decay_eligible=False),
            sign_free_edges=cfg.sign_free_edges,
        )
    ops = bl.BlockOps(
        grad=build_gradient(graph),
        avg=build_averaging(graph),
        prop=build_gcn_propagation(graph) if cfg.block_kind == "gcn" else None,
    )
    return Model(config=cfg, f_in=f_in, classes=classes, w_in=w_in,
                 w_out=w_out, blocks=block_params, mix=mix, ops=ops,
                 graph=graph)


def forward(model: Model, tape: Tape, features: Tensor, training: bool,
            rng=None) -> Tensor:
    """Run the full pipeline; eval mode consumes no randomness."""
    cfg = model.config
    if features.values.shape != (model.graph.n, model.f_in):
        raise ValueError(
            f"features must be {model.graph.n}x{model.f_in}, "
            f"got {features.values.shape}")
    if training and cfg.dropout_p > 0 and rng is None:
        raise ValueError("training forward with dropout requires an rng")
    x = ad.dropout(tape, features, cfg.dropout_p, training, rng)
    x = ad.matmul(tape, x, model.w_in.tensor)
    x = ad.relu(tape, x)
    state = bl.BlockState(x, x)  # zero initial velocity for wave-type blocks
    step_cfg = bl.StepConfig(cfg.h)
    for blk in model.blocks:
        state = bl.apply_block(cfg.block_kind, tape, state, model.ops, blk,
                               step_cfg, model.mix)
    x = ad.dropout(tape, state.u_curr, cfg.dropout_p, training, rng)
    return ad.matmul(tape, x, model.w_out.tensor)


def l2_penalty(model: Model, tape: Tape) -> Tensor:
    """Half squared norm over decay-eligible parameters (matrix weights only).

    The mixing weight and edge diagonals are excluded: decaying their raw
    values would pull the effective weights toward 0.5 and bias model
    selection rather than regularize capacity.
    """
    total = None
    for p in model.parameters():
        if not p.weight_decay_eligible:
            continue
        term = ad.half_sumsq(tape, p.tensor)
        total = term if total is None else ad.add(tape, total, term)
    if total is None:
        total = Tensor(np.zeros(()))
    return total


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: Model, path) -> None:
    """Single binary artifact: magic, JSON header, then raw parameter bytes."""
    params = model.parameters()
    header = {
        "config": {
            "block_kind": model.config.block_kind,
            "depth": model.config.depth,
            "channels": model.config.channels,
            "dropout_p": model.config.dropout_p,
            "h": model.config.h,
            "activation": model.config.activation,
            "tie_weights": model.config.tie_weights,
            "seed": model.config.seed,
            "sign_free_edges": model.config.sign_free_edges,
        },
        "f_in": model.f_in,
        "classes": model.classes,
        "params": [{"name": p.name, "shape": list(p.values.shape),
                    "dtype": p.values.dtype.name} for p in params],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for p in params:
            f.write(np.ascontiguousarray(p.values).tobytes())


def load_checkpoint(path, graph: Graph) -> Model:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a model checkpoint (bad header {magic!r})")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen))
        cfg = ModelConfig(**header["config"])
        dtype = np.dtype(header["params"][0]["dtype"]) if header["params"] \
            else np.float32
        model = init_model(cfg, graph, header["f_in"], header["classes"],
                           dtype=dtype)
        by_name = {p.name: p for p in model.parameters()}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            dt = np.dtype(spec["dtype"])
            raw = f.read(count * dt.itemsize)
            arr = np.frombuffer(raw, dtype=dt).reshape(shape).copy()
            if spec["name"] not in by_name:
                raise ValueError(f"checkpoint parameter {spec['name']!r} "
                                 "does not match the model")
            by_name[spec["name"]].values = arr
    return model
