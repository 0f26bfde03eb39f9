"""Layer update rules: GCN plus six forward-Euler PDE discretizations.

Every PDE block writes its update as a divergence, i.e. the gradient
operator's transpose is applied outermost.  Since each gradient row sums to
zero, the update term has exactly zero column sums in exact arithmetic and
per-channel mass is conserved layer to layer.  The GCN block is the
deliberate exception and serves as the over-smoothing control.

Sigma placement: the activation acts on the edge-space field, inside the
divergence.  The first-order transport block applies no trailing kernel
transpose; the second-order blocks do; the quadratic-flux block applies no
activation at all.  These asymmetries are intentional and tested.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tape, Tensor
from .sparse import SparseOperator

BLOCK_KINDS = ("gcn", "advection", "burgers", "diffusion", "wave",
               "mix_ad", "mix_aw")

MAGNITUDE_LIMIT = 1e6


class ExplicitSchemeWarning(RuntimeWarning):
    """Feature magnitudes exceeded the blow-up threshold for explicit steps."""


@dataclass
class StepConfig:
    """Discretization step size for the forward-Euler update."""
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size h must be positive, got {self.h}")


@dataclass
class BlockState:
    """Current and previous node features; u_prev feeds second-order blocks."""
    u_curr: Tensor
    u_prev: Tensor


@dataclass
class BlockParams:
    """Per-layer channel-mixing kernel and the block activation."""
    K: Parameter
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ad.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class MixParams:
    """Trainable mixing weight and edge-diagonal weights, via sigmoid.

    The raw values are unconstrained; the effective mixing weight and edge
    weights are their sigmoids, so both stay in (0, 1).  ``alpha_clamp``
    pins the effective mixing weight to an exact constant (test hook for the
    reduction identities; no gradient flows to the raw value while set).
    ``sign_free_edges`` skips the sigmoid on the edge weights, allowing
    negative learned flow.
    """
    alpha_raw: Parameter
    d_diff_raw: Parameter
    d_wave_raw: Parameter
    alpha_clamp: float | None = None
    sign_free_edges: bool = False

    def alpha(self, tape: Tape):
        if self.alpha_clamp is not None:
            return float(self.alpha_clamp)
        return ad.sigmoid(tape, self.alpha_raw.tensor)

    def d_diff(self, tape: Tape) -> Tensor:
        if self.sign_free_edges:
            return self.d_diff_raw.tensor
        return ad.sigmoid(tape, self.d_diff_raw.tensor)

    def d_wave(self, tape: Tape) -> Tensor:
        if self.sign_free_edges:
            return self.d_wave_raw.tensor
        return ad.sigmoid(tape, self.d_wave_raw.tensor)


@dataclass
class BlockOps:
    """The fixed operators a block stack runs on."""
    grad: SparseOperator        # m x n difference operator
    avg: SparseOperator         # m x n averaging operator
    prop: SparseOperator | None = None   # n x n GCN propagation


def _check_magnitude(u: Tensor) -> None:
    if not u.values.size:
        return
    peak = max(float(u.values.max()), -float(u.values.min()))  # no temp array
    if not peak <= MAGNITUDE_LIMIT:  # catches NaN too
        warnings.warn(
            "feature magnitude exceeded 1e6; the explicit scheme is likely "
            "diverging (reduce h)", ExplicitSchemeWarning, stacklevel=3)


def _activate(tape: Tape, x: Tensor, name: str) -> Tensor:
    return ad.ACTIVATIONS[name](tape, x)


def _advection_flux(tape: Tape, w: Tensor, ops: BlockOps, params: BlockParams,
                    edge_scale: Tensor | None) -> Tensor:
    """Divergence of the activated edge-averaged transported field w = u K."""
    e = ad.spmm_const(tape, ops.avg, w)
    if edge_scale is not None:
        e = ad.row_scale(tape, edge_scale, e)
    f = _activate(tape, e, params.activation)
    return ad.spmm_const(tape, ops.grad, f, transposed=True)


def _diffusion_flux(tape: Tape, w: Tensor, ops: BlockOps, params: BlockParams,
                    edge_scale: Tensor | None) -> Tensor:
    """Divergence of the activated edge differences of w = u K, times K^T."""
    e = ad.spmm_const(tape, ops.grad, w)
    if edge_scale is not None:
        e = ad.row_scale(tape, edge_scale, e)
    f = _activate(tape, e, params.activation)
    div = ad.spmm_const(tape, ops.grad, f, transposed=True)
    return ad.matmul_t(tape, div, params.K.tensor)


def gcn_step(tape: Tape, state: BlockState, ops: BlockOps,
             params: BlockParams, cfg: StepConfig) -> BlockState:
    """Smoothing baseline: activate(P @ u @ W)."""
    if ops.prop is None:
        raise ValueError("gcn block requires the propagation operator")
    z = ad.matmul(tape, ad.spmm_const(tape, ops.prop, state.u_curr),
                  params.K.tensor)
    u_next = _activate(tape, z, params.activation)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def advection_step(tape: Tape, state: BlockState, ops: BlockOps,
                   params: BlockParams, cfg: StepConfig,
                   edge_scale: Tensor | None = None) -> BlockState:
    """First-order transport: u - h * div(activate(avg(u K)))."""
    w = ad.matmul(tape, state.u_curr, params.K.tensor)
    flux = _advection_flux(tape, w, ops, params, edge_scale)
    u_next = ad.sub_scaled(tape, state.u_curr, flux, cfg.h)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def burgers_step(tape: Tape, state: BlockState, ops: BlockOps,
                 params: BlockParams, cfg: StepConfig) -> BlockState:
    """Quadratic flux: u - (h/2) * div(avg((u K) ⊙ (u K))); no activation.

    The elementwise square is the nonlinearity, so no activation is applied
    and squaring happens in node space, before averaging onto edges.
    """
    w = ad.matmul(tape, state.u_curr, params.K.tensor)
    sq = ad.hadamard(tape, w, w)
    e = ad.spmm_const(tape, ops.avg, sq)
    div = ad.spmm_const(tape, ops.grad, e, transposed=True)
    u_next = ad.sub_scaled(tape, state.u_curr, div, 0.5 * cfg.h)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def diffusion_step(tape: Tape, state: BlockState, ops: BlockOps,
                   params: BlockParams, cfg: StepConfig,
                   edge_scale: Tensor | None = None) -> BlockState:
    """Second-order smoothing: u - h * div(activate(grad(u K))) K^T."""
    w = ad.matmul(tape, state.u_curr, params.K.tensor)
    flux = _diffusion_flux(tape, w, ops, params, edge_scale)
    u_next = ad.sub_scaled(tape, state.u_curr, flux, cfg.h)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def wave_step(tape: Tape, state: BlockState, ops: BlockOps,
              params: BlockParams, cfg: StepConfig,
              edge_scale: Tensor | None = None) -> BlockState:
    """Leapfrog wave update: 2u - u_prev - h^2 * div(activate(grad(u K))) K^T.

    u_prev must be initialized (u_prev = u at the first block gives zero
    initial velocity).
    """
    w = ad.matmul(tape, state.u_curr, params.K.tensor)
    flux = _diffusion_flux(tape, w, ops, params, edge_scale)
    lead = ad.sub(tape, ad.scale(tape, state.u_curr, 2.0), state.u_prev)
    u_next = ad.sub_scaled(tape, lead, flux, cfg.h * cfg.h)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def mix_ad_step(tape: Tape, state: BlockState, ops: BlockOps,
                params: BlockParams, mix: MixParams,
                cfg: StepConfig) -> BlockState:
    """Transport/diffusion mixture:

        u - (1-a) h^2 div(act(D_d grad(u K))) K^T - a h div(act(D_w avg(u K)))

    with a = sigmoid(alpha_raw) and the edge diagonals applied inside the
    activation.  With the mixing weight clamped to 0 or 1 the surviving term
    reproduces the pure block bitwise (zero-coefficient terms are skipped,
    not multiplied out).
    """
    u = state.u_curr
    w = ad.matmul(tape, u, params.K.tensor)  # shared by both flux terms
    d_term = _diffusion_flux(tape, w, ops, params, mix.d_diff(tape))
    a_term = _advection_flux(tape, w, ops, params, mix.d_wave(tape))
    alpha = mix.alpha(tape)
    if isinstance(alpha, float):
        c_d = (1.0 - alpha) * (cfg.h * cfg.h)
        c_a = alpha * cfg.h
        u_next = u
        if c_d != 0.0:
            u_next = ad.sub_scaled(tape, u_next, d_term, c_d)
        if c_a != 0.0:
            u_next = ad.sub_scaled(tape, u_next, a_term, c_a)
    else:
        c_d = ad.scale(tape, ad.rsub_const(tape, 1.0, alpha), cfg.h * cfg.h)
        c_a = ad.scale(tape, alpha, cfg.h)
        u_next = ad.sub_smul(tape, u, c_d, d_term)
        u_next = ad.sub_smul(tape, u_next, c_a, a_term)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def mix_aw_step(tape: Tape, state: BlockState, ops: BlockOps,
                params: BlockParams, mix: MixParams,
                cfg: StepConfig) -> BlockState:
    """Transport/wave mixture, solved for the new state:

        u_next = (2-a) u - (1-a) u_prev
                 - (1-a) h^2 div(act(D_d grad(u K))) K^T
                 - a h div(act(D_w avg(u K)))

    The closed form follows from collecting the u_next terms on the left,
    whose coefficients sum to one.
    """
    u, u_prev = state.u_curr, state.u_prev
    w = ad.matmul(tape, u, params.K.tensor)  # shared by both flux terms
    d_term = _diffusion_flux(tape, w, ops, params, mix.d_diff(tape))
    a_term = _advection_flux(tape, w, ops, params, mix.d_wave(tape))
    alpha = mix.alpha(tape)
    if isinstance(alpha, float):
        c_lead = 2.0 - alpha
        c_prev = 1.0 - alpha
        c_d = (1.0 - alpha) * (cfg.h * cfg.h)
        c_a = alpha * cfg.h
        u_next = u if c_lead == 1.0 else ad.scale(tape, u, c_lead)
        if c_prev != 0.0:
            prev = u_prev if c_prev == 1.0 else ad.scale(tape, u_prev, c_prev)
            u_next = ad.sub(tape, u_next, prev)
        if c_d != 0.0:
            u_next = ad.sub_scaled(tape, u_next, d_term, c_d)
        if c_a != 0.0:
            u_next = ad.sub_scaled(tape, u_next, a_term, c_a)
    else:
        one_minus = ad.rsub_const(tape, 1.0, alpha)
        c_lead = ad.rsub_const(tape, 2.0, alpha)
        u_next = ad.sub_smul(tape, ad.smul(tape, c_lead, u),
                             one_minus, u_prev)
        c_d = ad.scale(tape, one_minus, cfg.h * cfg.h)
        c_a = ad.scale(tape, alpha, cfg.h)
        u_next = ad.sub_smul(tape, u_next, c_d, d_term)
        u_next = ad.sub_smul(tape, u_next, c_a, a_term)
    _check_magnitude(u_next)
    return BlockState(u_next, state.u_curr)


def apply_block(kind: str, tape: Tape, state: BlockState, ops: BlockOps,
                params: BlockParams, cfg: StepConfig,
                mix: MixParams | None = None) -> BlockState:
    """Dispatch one layer update by block kind."""
    step = STEP_FNS[kind]
    if kind in ("mix_ad", "mix_aw"):
        if mix is None:
            raise ValueError(f"{kind} block requires MixParams")
        return step(tape, state, ops, params, mix, cfg)
    return step(tape, state, ops, params, cfg)


STEP_FNS = {
    "gcn": gcn_step,
    "advection": advection_step,
    "burgers": burgers_step,
    "diffusion": diffusion_step,
    "wave": wave_step,
    "mix_ad": mix_ad_step,
    "mix_aw": mix_aw_step,
}
