"""Statistical training objective: 2-Wasserstein plus Jensen-Shannon.

Gradients are returned alongside values and flow only through the
prediction; targets are constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edsnt import edsnt_backward, edsnt_moments, softmax_backward, softmax_normalize
from .geometry import Frame, GaussianParams
from .occupancy import (
    LabelRecord,
    normalized_to_pixel,
    pixel_to_normalized,
    render_gaussian_heatmap,
    rescale_gaussian,
)

LOG_FLOOR = 1e-12


def sqrtm_spd2(M: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 symmetric positive-definite matrix."""
    M = np.asarray(M, dtype=float)
    s = math.sqrt(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    t = math.sqrt(M[0, 0] + M[1, 1] + 2.0 * s)
    return (M + s * np.eye(2)) / t


def wasserstein(g_pd: GaussianParams, g_gt: GaussianParams) -> tuple[float, np.ndarray]:
    """Squared 2-Wasserstein distance between two Gaussians.

    Returns the value and its gradient w.r.t. the prediction's parameter
    vector ``(mu_x, mu_y, s_xx, s_yy, s_xy)``. The cross term uses
    ``tr sqrt(Sg^1/2 Sp Sg^1/2) = sqrt(tr(Sp Sg) + 2 sqrt(det Sp det Sg))``.
    """
    if g_pd.frame != g_gt.frame:
        raise ValueError(f"frame mismatch: {g_pd.frame} vs {g_gt.frame}")
    g_pd.require_pd()
    g_gt.require_pd()
    px, py, pxx, pyy, pxy = g_pd.as_vector()
    gx, gy, gxx, gyy, gxy = g_gt.as_vector()
    det_p = pxx * pyy - pxy * pxy
    det_g = gxx * gyy - gxy * gxy
    tr_pg = pxx * gxx + pyy * gyy + 2.0 * pxy * gxy
    cross = math.sqrt(max(tr_pg + 2.0 * math.sqrt(det_p * det_g), 0.0))
    dmx, dmy = px - gx, py - gy
    value = dmx * dmx + dmy * dmy + (pxx + pyy) + (gxx + gyy) - 2.0 * cross

    ratio = math.sqrt(det_g / det_p)
    d_trpg = np.array([gxx, gyy, 2.0 * gxy])
    d_detp = np.array([pyy, pxx, -2.0 * pxy])
    d_sigma = np.array([1.0, 1.0, 0.0]) - (d_trpg + ratio * d_detp) / cross
    grad = np.concatenate([[2.0 * dmx, 2.0 * dmy], d_sigma])
    return float(max(value, 0.0)), grad


def _check_pair(d1: np.ndarray, d2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if d1.shape != d2.shape:
        raise ValueError(f"heatmap shape mismatch: {d1.shape} vs {d2.shape}")
    return d1, d2


def kl_heatmaps(d1: np.ndarray, d2: np.ndarray) -> float:
    """``sum d1 log(d1 / d2)`` with both arguments floored inside the log."""
    d1, d2 = _check_pair(d1, d2)
    return float(np.sum(d1 * (np.log(np.maximum(d1, LOG_FLOOR)) - np.log(np.maximum(d2, LOG_FLOOR)))))


def js_heatmaps(z_pd: np.ndarray, z_gt: np.ndarray) -> tuple[float, np.ndarray]:
    """Jensen-Shannon divergence of two heatmaps and its gradient w.r.t. ``z_pd``."""
    p, q = _check_pair(z_pd, z_gt)
    m = 0.5 * (p + q)
    log_p = np.log(np.maximum(p, LOG_FLOOR))
    log_q = np.log(np.maximum(q, LOG_FLOOR))
    log_m = np.log(np.maximum(m, LOG_FLOOR))
    value = 0.5 * np.sum(p * (log_p - log_m)) + 0.5 * np.sum(q * (log_q - log_m))
    # d/dp of the floored expression; reduces to log(p/m)/2 away from the floor
    grad = 0.5 * (log_p - log_m) + 0.5 * ((p > LOG_FLOOR).astype(float) - (m > LOG_FLOOR))
    # rounding can leave tiny negative values for equal inputs
    return float(max(value, 0.0)), grad


@dataclass(frozen=True)
class LossValue:
    total: float
    wasserstein_term: float
    js_term: float
    lam: float
    wasserstein_weight: float = 1.0


@dataclass(frozen=True)
class LossTarget:
    """A label prepared for a given grid: normalized parameters and heatmap."""

    gaussian: GaussianParams
    heatmap: np.ndarray

    @classmethod
    def from_label(cls, label: LabelRecord, W: int, H: int) -> "LossTarget":
        Wl, Hl = label.heatmap_size
        g = label.gaussian
        if (Wl, Hl) != (W, H):
            g = rescale_gaussian(g, W / Wl, H / Hl)
        return cls(pixel_to_normalized(g, W, H), render_gaussian_heatmap(g, W, H))


def _pixel_scale(W: int, H: int) -> np.ndarray:
    """d(pixel params)/d(normalized params), elementwise."""
    return np.array([W / 2.0, H / 2.0, W * W / 4.0, H * H / 4.0, W * H / 4.0])


def total_loss(
    logits: np.ndarray,
    label: LabelRecord | LossTarget,
    lam: float = 1.0,
    wasserstein_weight: float = 1.0,
    w_frame: Frame = "pixel",
) -> tuple[LossValue, np.ndarray]:
    """``w * L_W + lam * L_JS`` on softmax(logits) and its gradient w.r.t. logits.

    ``wasserstein_weight`` is 1 for the standard objective; setting it to 0
    gives the JS-only variant. ``w_frame`` selects the units of the
    Wasserstein term: heatmap pixels (default) or the normalized frame, in
    which it is ``(W/2)^2`` times smaller on a square grid.
    """
    if lam < 0 or wasserstein_weight < 0:
        raise ValueError("loss weights must be non-negative")
    logits = np.asarray(logits, dtype=float)
    H, W = logits.shape
    target = label if isinstance(label, LossTarget) else LossTarget.from_label(label, W, H)
    z = softmax_normalize(logits)
    g_pd = GaussianParams.from_vector(edsnt_moments(z), frame="normalized")
    if w_frame == "pixel":
        w_val, w_grad = wasserstein(normalized_to_pixel(g_pd, W, H), normalized_to_pixel(target.gaussian, W, H))
        w_grad = w_grad * _pixel_scale(W, H)
    elif w_frame == "normalized":
        w_val, w_grad = wasserstein(g_pd, target.gaussian)
    else:
        raise ValueError(f"unknown frame {w_frame!r}")
    js_val, js_grad = js_heatmaps(z, target.heatmap)
    grad_z = wasserstein_weight * edsnt_backward(z, w_grad) + lam * js_grad
    total = wasserstein_weight * w_val + lam * js_val
    value = LossValue(total, w_val, js_val, lam, wasserstein_weight)
    return value, softmax_backward(z, grad_z)
