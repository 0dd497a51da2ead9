"""Dense float64 kernels used everywhere else.

Differentiable primitives come in forward/backward pairs: the forward returns
plain numpy arrays, the backward maps the loss gradient at the output to loss
gradients at the inputs. Nothing here builds a graph; callers compose the
pairs by hand and are responsible for accumulation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRowError, DimensionError, NonFiniteError

Array = np.ndarray

NORM_FLOOR = 1e-12
VAR_FLOOR = 1e-12

# Relative errors in gradient checks use max(|analytic|, |numeric|, REL_FLOOR)
# as the denominator so that near-zero gradient entries do not amplify
# finite-difference roundoff into spurious failures.
REL_FLOOR = 1e-6


def sigmoid(x: Array) -> Array:
    """Elementwise 1 / (1 + exp(-x)), overflow-safe on both tails."""
    x = np.asarray(x, dtype=float)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid_backward(d_out: Array, out: Array) -> Array:
    """Gradient at the pre-activation given sigmoid output `out`."""
    return d_out * out * (1.0 - out)


def tanh_map(x: Array) -> Array:
    """Elementwise hyperbolic tangent."""
    return np.tanh(np.asarray(x, dtype=float))


def tanh_backward(d_out: Array, out: Array) -> Array:
    return d_out * (1.0 - out * out)


def affine(x: Array, w: Array, b: Array) -> Array:
    """x @ w + b with a shape check on the contracted axis."""
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(
            f"affine: input has {x.shape[-1]} columns but weight expects {w.shape[0]}"
        )
    return x @ w + b


def affine_backward(d_pre: Array, x: Array, w: Array):
    """Gradients (d_x, d_w, d_b) of an affine map given d(loss)/d(pre)."""
    d_x = d_pre @ w.T
    d_w = x.T @ d_pre
    d_b = d_pre.sum(axis=0)
    return d_x, d_w, d_b


def max_pool(acts: Array):
    """Position-wise max over axis 0 of a (positions, filters) matrix.

    Returns (pooled, argmax); ties resolve to the first position, which keeps
    the backward pass deterministic.
    """
    acts = np.asarray(acts, dtype=float)
    if acts.ndim != 2:
        raise DimensionError(f"max_pool expects a 2-D (positions, filters) input, got {acts.shape}")
    return acts.max(axis=0), acts.argmax(axis=0)


def max_pool_backward(d_pooled: Array, argmax: Array, n_positions: int) -> Array:
    d_acts = np.zeros((n_positions, d_pooled.shape[0]))
    d_acts[argmax, np.arange(d_pooled.shape[0])] = d_pooled
    return d_acts


def _row_norms(x: Array, side: str) -> Array:
    norms = np.linalg.norm(x, axis=1)
    bad = np.nonzero(norms < NORM_FLOOR)[0]
    if bad.size:
        raise DegenerateRowError(side, int(bad[0]))
    return norms


def cosine_row_loss(x: Array, y: Array) -> float:
    """Sum over rows of (1 - cosine similarity); each row term lies in [0, 2]."""
    loss, _, _ = cosine_row_loss_backward(x, y)
    return loss


def cosine_row_loss_backward(x: Array, y: Array):
    """Returns (loss, d_x, d_y) for the summed per-row cosine distance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 2:
        raise DimensionError(f"cosine_row_loss: shapes {x.shape} and {y.shape} must be equal 2-D")
    nx = _row_norms(x, "X")
    ny = _row_norms(y, "Y")
    dot = np.einsum("ij,ij->i", x, y)
    cos = dot / (nx * ny)
    loss = float(np.sum(1.0 - np.clip(cos, -1.0, 1.0)))
    inv_xy = 1.0 / (nx * ny)
    d_x = x * (cos / nx**2)[:, None] - y * inv_xy[:, None]
    d_y = y * (cos / ny**2)[:, None] - x * inv_xy[:, None]
    return loss, d_x, d_y


def pearson(x: Array, y: Array) -> float:
    """Pearson correlation in [-1, 1]; 0.0 when either input is constant."""
    return pearson_flagged(x, y)[0]


def pearson_flagged(x: Array, y: Array):
    """Returns (correlation, degenerate) where degenerate marks a constant input.

    Constant means population variance below 1e-12; the correlation is then
    reported as 0.0 instead of NaN.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"pearson: lengths {x.size} and {y.size} differ")
    if x.size < 2:
        raise DimensionError("pearson: need at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = np.mean(xc * xc)
    vy = np.mean(yc * yc)
    if vx < VAR_FLOOR or vy < VAR_FLOOR:
        return 0.0, True
    r = np.mean(xc * yc) / np.sqrt(vx * vy)
    return float(np.clip(r, -1.0, 1.0)), False


def _inv_sqrt_psd(c: Array, floor: float) -> Array:
    # c is PSD plus a ridge, so eigenvalues sit at or above the ridge up to
    # roundoff; the clamp only repairs roundoff.
    w, v = np.linalg.eigh(c)
    w = np.maximum(w, floor)
    return (v / np.sqrt(w)) @ v.T


def cca_first_correlation(x: Array, s: Array, ridge: float = 1e-8) -> float:
    """First canonical correlation between the column spaces of x and s.

    Columns are variables, rows are observations. Both blocks are centered,
    whitened through their ridge-regularized covariances, and the largest
    singular value of the whitened cross-covariance is returned, clamped to
    [0, 1]. The ridge keeps rank-deficient inputs well-posed.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if x.ndim != 2 or s.ndim != 2:
        raise DimensionError("cca_first_correlation expects 2-D inputs")
    if x.shape[0] != s.shape[0]:
        raise DimensionError(f"cca: row counts {x.shape[0]} and {s.shape[0]} differ")
    n = x.shape[0]
    if n < 2:
        raise DimensionError("cca: need at least 2 rows")
    xc = x - x.mean(axis=0)
    sc = s - s.mean(axis=0)
    cxx = xc.T @ xc / (n - 1) + ridge * np.eye(x.shape[1])
    css = sc.T @ sc / (n - 1) + ridge * np.eye(s.shape[1])
    cxs = xc.T @ sc / (n - 1)
    m = _inv_sqrt_psd(cxx, ridge) @ cxs @ _inv_sqrt_psd(css, ridge)
    top = np.linalg.svd(m, compute_uv=False)[0]
    return float(np.clip(top, 0.0, 1.0))


@dataclass
class AdadeltaState:
    """Per-parameter accumulators for Adadelta plus its constants.

    `lr` scales the final delta; the accumulator of squared updates tracks the
    unscaled delta, matching the common learning-rate-scaled variant.
    """

    rho: float = 0.95
    eps: float = 1e-6
    lr: float = 0.5
    sq_grad: dict = field(default_factory=dict)
    sq_update: dict = field(default_factory=dict)


def adadelta_step(params: dict, grads: dict, state: AdadeltaState) -> None:
    """One Adadelta update, in place on `params` and `state`.

    For each block:  Eg <- rho*Eg + (1-rho)*g^2
                     delta = -sqrt(Ex + eps)/sqrt(Eg + eps) * g
                     p <- p + lr*delta
                     Ex <- rho*Ex + (1-rho)*delta^2
    """
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(f"adadelta_step: grad shape {g.shape} != param shape {p.shape} for {name}")
        eg = state.sq_grad.setdefault(name, np.zeros_like(p))
        ex = state.sq_update.setdefault(name, np.zeros_like(p))
        if eg.shape != p.shape or ex.shape != p.shape:
            raise DimensionError(f"adadelta_step: accumulator shape mismatch for {name}")
        eg *= state.rho
        eg += (1.0 - state.rho) * g * g
        delta = -np.sqrt(ex + state.eps) / np.sqrt(eg + state.eps) * g
        p += state.lr * delta
        ex *= state.rho
        ex += (1.0 - state.rho) * delta * delta


@dataclass
class GradCheckBlock:
    name: str
    max_rel_error: float
    worst_index: int


@dataclass
class GradCheckReport:
    tolerance: float
    step: float
    blocks: list
    max_rel_error: float
    worst_block: str
    passed: bool

    def summary(self) -> str:
        lines = [
            f"{b.name}: max_rel_error={b.max_rel_error:.3e} (flat index {b.worst_index})"
            for b in self.blocks
        ]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: max {self.max_rel_error:.3e} vs tolerance {self.tolerance:.1e}")
        return "\n".join(lines)


def finite_diff_check(loss_and_grads, params: dict, tolerance: float = 1e-4,
                      step: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    `loss_and_grads(params)` must deterministically return (loss, grads) with
    one gradient array per parameter block. Every element of every block is
    perturbed by +-step. Relative error uses the REL_FLOOR denominator rule.
    """
    work = {name: np.array(p, dtype=float, copy=True) for name, p in params.items()}
    loss0, analytic = loss_and_grads(work)
    if not np.isfinite(loss0):
        raise NonFiniteError(f"finite_diff_check: loss at the base point is {loss0}")
    for name in work:
        if not np.all(np.isfinite(analytic[name])):
            raise NonFiniteError(f"finite_diff_check: analytic gradient of {name} is not finite")

    blocks = []
    for name, p in work.items():
        a = np.asarray(analytic[name], dtype=float)
        numeric = np.zeros_like(p)
        flat = p.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            plus = loss_and_grads(work)[0]
            flat[i] = orig - step
            minus = loss_and_grads(work)[0]
            flat[i] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NonFiniteError(
                    f"finite_diff_check: non-finite loss while perturbing {name}[{i}]"
                )
            num_flat[i] = (plus - minus) / (2.0 * step)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), REL_FLOOR)
        rel = np.abs(a - numeric) / denom
        worst = int(np.argmax(rel)) if rel.size else 0
        blocks.append(GradCheckBlock(name, float(rel.max()) if rel.size else 0.0, worst))

    max_rel = max((b.max_rel_error for b in blocks), default=0.0)
    worst_block = max(blocks, key=lambda b: b.max_rel_error).name if blocks else ""
    return GradCheckReport(
        tolerance=tolerance,
        step=step,
        blocks=blocks,
        max_rel_error=max_rel,
        worst_block=worst_block,
        passed=max_rel < tolerance,
    )
