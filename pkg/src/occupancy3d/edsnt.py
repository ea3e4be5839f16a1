"""Extended DSNT: mean and covariance of a heatmap, with exact gradients.

Outputs are always ordered ``(mu_x, mu_y, s_xx, s_yy, s_xy)`` and live in
the normalized coordinate frame of :func:`~occupancy3d.occupancy.coord_grids`.
"""

from __future__ import annotations

import numpy as np

from .geometry import GaussianParams
from .occupancy import coord_grids

OUTPUT_NAMES = ("mu_x", "mu_y", "sigma_xx", "sigma_yy", "sigma_xy")
NORMALIZATION_TOL = 1e-4


def softmax_normalize(logits: np.ndarray) -> np.ndarray:
    """Softmax over all entries of a 2-D logit grid."""
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    e = np.exp(logits - logits.max())
    return e / e.sum()


def softmax_backward(z: np.ndarray, grad_z: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. softmax outputs back to the logits."""
    return z * (grad_z - np.sum(z * grad_z))


def edsnt_moments(z: np.ndarray) -> np.ndarray:
    """Raw moment formulas, without checking that ``z`` is normalized.

    For an unnormalized grid these are not true moments; the function is
    exposed so gradients can be checked against unconstrained perturbations.
    """
    H, W = z.shape
    X, Y = coord_grids(W, H)
    mx = np.sum(z * X)
    my = np.sum(z * Y)
    dx = X - mx
    dy = Y - my
    return np.array([mx, my, np.sum(z * dx * dx), np.sum(z * dy * dy), np.sum(z * dx * dy)])


def _check_normalized(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise ValueError("heatmap must be 2-D")
    if np.any(z < 0):
        raise ValueError("heatmap has negative values")
    if abs(z.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"heatmap is not normalized (sum = {z.sum():.6g})")
    return z


def edsnt_extract(z: np.ndarray) -> GaussianParams:
    """Gaussian parameters (normalized frame) of a normalized heatmap."""
    z = _check_normalized(z)
    return GaussianParams.from_vector(edsnt_moments(z), frame="normalized")


def edsnt_backward(z: np.ndarray, upstream) -> np.ndarray:
    """Vector-Jacobian product of :func:`edsnt_moments` w.r.t. heatmap values.

    ``upstream`` holds the cotangents of the five outputs. Each heatmap
    entry is treated as an independent variable; the terms involving
    ``sum(z) - 1`` vanish for normalized input but are kept so the result is
    the exact derivative everywhere.
    """
    z = np.asarray(z, dtype=float)
    u = np.asarray(upstream, dtype=float).reshape(5)
    H, W = z.shape
    X, Y = coord_grids(W, H)
    mx, my = np.sum(z * X), np.sum(z * Y)
    dx, dy = X - mx, Y - my
    # sum_k z_k (X_k - mu_x), zero when z sums to one
    rx, ry = np.sum(z * dx), np.sum(z * dy)
    grad = u[0] * X + u[1] * Y
    grad = grad + u[2] * (dx * dx - 2.0 * rx * X)
    grad = grad + u[3] * (dy * dy - 2.0 * ry * Y)
    grad = grad + u[4] * (dx * dy - ry * X - rx * Y)
    return grad


def edsnt_backward_logits(logits: np.ndarray, upstream) -> np.ndarray:
    """Vector-Jacobian product of ``edsnt_moments(softmax(logits))``."""
    z = softmax_normalize(logits)
    return softmax_backward(z, edsnt_backward(z, upstream))
