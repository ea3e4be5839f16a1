"""Gradient descent on raw heatmap logits toward a target label.

A stand-in for network training: the logits are the free parameters, the
forward pass is softmax -> E-DSNT -> loss, and every gradient is analytic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np

from .edsnt import edsnt_moments, softmax_normalize
from .geometry import DegenerateGeometryError, Frame, GaussianParams, gaussian_to_ellipse
from .losses import LossTarget, total_loss
from .metrics import MetricReport, evaluate
from .occupancy import LabelRecord, normalized_to_pixel, rescale_gaussian, truncation_fraction

Variant = Literal["w", "js", "wjs"]
VARIANTS: tuple[Variant, ...] = ("w", "wjs", "js")
MAX_TRUNCATION = 0.05
# Fixed steps from a coarse sweep on 64x64 grids with 2-7 px semi-axes.
# Pixel-unit W: residual background mass makes the covariance term stiff and
# steps >= 2.5 occasionally collapse the heatmap to a point mass. JS alone is
# stiff at the peak and unstable above ~300 for 2 px targets.
DEFAULT_LR = {"pixel": 2.0, "normalized": 300.0, "js": 300.0}


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, value: float, reason: str = ""):
        reason = reason or f"loss became non-finite ({value})"
        super().__init__(f"{reason} at iteration {iteration}")
        self.iteration = iteration
        self.value = value


@dataclass(frozen=True)
class FitConfig:
    grid: tuple[int, int] = (64, 64)
    iterations: int = 2000
    # None picks DEFAULT_LR for the variant
    lr: float | None = None
    lam: float = 1.0
    seed: int = 0
    loss: Variant = "wjs"
    w_frame: Frame = "pixel"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lr is not None and self.lr < 0:
            raise ValueError("learning rate must be non-negative")
        if self.loss not in VARIANTS:
            raise ValueError(f"unknown loss variant {self.loss!r}")

    @property
    def step(self) -> float:
        if self.lr is not None:
            return self.lr
        if self.loss == "js":
            return DEFAULT_LR["js"]
        return DEFAULT_LR[self.w_frame]

    @property
    def weights(self) -> tuple[float, float]:
        """``(wasserstein_weight, lam)`` of the configured variant."""
        if self.loss == "w":
            return 1.0, 0.0
        if self.loss == "js":
            return 0.0, 1.0
        return 1.0, self.lam


@dataclass
class FitTrace:
    config: FitConfig
    losses: list[float]
    final: GaussianParams  # pixel frame on the fit grid
    report: MetricReport
    grad_norm: float
    logits: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "config": {**asdict(self.config), "lr": self.config.step},
            "losses": self.losses,
            "final": {"mu": self.final.mu.tolist(), "sigma": self.final.sigma.tolist(), "frame": self.final.frame},
            "final_ellipse": asdict(gaussian_to_ellipse(self.final)) if self.final.is_positive_definite else None,
            "metrics": asdict(self.report),
            "grad_norm": self.grad_norm,
        }


def initial_logits(cfg: FitConfig) -> np.ndarray:
    W, H = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    return rng.uniform(-0.01, 0.01, size=(H, W))


def target_gaussian(target: LabelRecord, grid: tuple[int, int]) -> GaussianParams:
    """The label's pixel-frame Gaussian expressed on ``grid``."""
    (Wl, Hl), (W, H) = target.heatmap_size, grid
    g = target.gaussian
    return g if (Wl, Hl) == (W, H) else rescale_gaussian(g, W / Wl, H / Hl)


def fit_heatmap(
    target: LabelRecord,
    cfg: FitConfig = FitConfig(),
    init: np.ndarray | None = None,
    check_truncation: bool = True,
    snapshot_every: int = 0,
    snapshots: list | None = None,
) -> FitTrace:
    """Fit logits so the extracted Gaussian matches ``target``.

    ``init`` overrides the seeded near-uniform initialization. Targets whose
    mass is more than 5% outside the grid are refused for variants with a
    Wasserstein term unless ``check_truncation`` is False. When
    ``snapshot_every`` > 0, softmax heatmaps are appended to ``snapshots``.
    """
    W, H = cfg.grid
    g_tgt = target_gaussian(target, cfg.grid)
    w_weight, lam = cfg.weights
    if check_truncation and w_weight > 0:
        frac = truncation_fraction(g_tgt, W, H)
        if frac >= MAX_TRUNCATION:
            raise ValueError(f"target is {frac:.1%} truncated by the grid; Wasserstein variants need < 5%")
    loss_target = LossTarget.from_label(target, W, H)
    logits = initial_logits(cfg) if init is None else np.array(init, dtype=float)
    if logits.shape != (H, W):
        raise ValueError(f"initial logits shape {logits.shape} does not match grid {(H, W)}")

    lr = cfg.step
    losses = []
    grad = np.zeros_like(logits)
    for it in range(cfg.iterations):
        try:
            value, grad = total_loss(logits, loss_target, lam, w_weight, cfg.w_frame)
        except DegenerateGeometryError:
            raise DivergenceError(it, float("nan"), "heatmap collapsed to a point mass") from None
        if not np.isfinite(value.total) or not np.all(np.isfinite(grad)):
            raise DivergenceError(it, value.total)
        losses.append(value.total)
        if snapshot_every and snapshots is not None and it % snapshot_every == 0:
            snapshots.append(softmax_normalize(logits))
        logits = logits - lr * grad

    z = softmax_normalize(logits)
    final = normalized_to_pixel(GaussianParams.from_vector(edsnt_moments(z), "normalized"), W, H)
    if final.is_positive_definite:
        report = evaluate(gaussian_to_ellipse(final), gaussian_to_ellipse(g_tgt))
    else:
        report = MetricReport(0.0, 0.0, 0.0, float("inf"), float("inf"), degenerate=True)
    return FitTrace(cfg, losses, final, report, float(np.linalg.norm(grad)), logits)


def compare_variants(target: LabelRecord, base: FitConfig = FitConfig(), check_truncation: bool = True) -> dict[str, FitTrace]:
    """One fit per loss variant, all sharing ``base``'s seed and settings."""
    return {v: fit_heatmap(target, replace(base, loss=v), check_truncation=check_truncation) for v in VARIANTS}


def variants_table(traces: dict[str, FitTrace]) -> dict:
    return {
        "schema_version": 1,
        "rows": {v: {"final_loss": t.losses[-1], **asdict(t.report)} for v, t in traces.items()},
    }
