"""Gaussian occupancy heatmaps and 3D-aware label generation.

Pixel ``(i, j)`` (row, column, both 1-based) has its centre at continuous
pixel coordinates ``(x, y) = (j, i)``. The normalized frame maps the grid
onto ``(-1, 1)^2`` with ``x_norm = (2 x - (W + 1)) / W``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (
    EllipseGeom,
    EllipsoidDims,
    GaussianParams,
    Intrinsics,
    Pose,
    conic_to_gaussian,
    ellipsoid_dual_quadric,
    gaussian_to_ellipse,
    project_ellipsoid,
    projection_matrix,
)

GOHM_MAGIC = b"GOHM"
GOHM_VERSION = 1
_GOHM_HEADER = struct.Struct("<4sIII")


class GohmFormatError(ValueError):
    pass


def coord_grids(W: int, H: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized coordinate matrices ``X`` and ``Y`` (each ``H x W``)."""
    if W < 1 or H < 1:
        raise ValueError("grid dimensions must be >= 1")
    j = np.arange(1, W + 1, dtype=float)
    i = np.arange(1, H + 1, dtype=float)
    x = (2.0 * j - (W + 1)) / W
    y = (2.0 * i - (H + 1)) / H
    return np.broadcast_to(x, (H, W)).copy(), np.broadcast_to(y[:, None], (H, W)).copy()


def pixel_to_normalized(g: GaussianParams, W: int, H: int) -> GaussianParams:
    if g.frame != "pixel":
        raise ValueError(f"expected pixel-frame parameters, got {g.frame!r}")
    mu = np.array([(2.0 * g.mu[0] - (W + 1)) / W, (2.0 * g.mu[1] - (H + 1)) / H])
    D = np.diag([2.0 / W, 2.0 / H])
    return GaussianParams(mu, D @ g.sigma @ D, "normalized")


def normalized_to_pixel(g: GaussianParams, W: int, H: int) -> GaussianParams:
    if g.frame != "normalized":
        raise ValueError(f"expected normalized-frame parameters, got {g.frame!r}")
    mu = np.array([(W * g.mu[0] + W + 1) / 2.0, (H * g.mu[1] + H + 1) / 2.0])
    D = np.diag([W / 2.0, H / 2.0])
    return GaussianParams(mu, D @ g.sigma @ D, "pixel")


def rescale_gaussian(g: GaussianParams, sx: float, sy: float) -> GaussianParams:
    """Pixel-frame parameters after resampling the image by ``(sx, sy)``."""
    if g.frame != "pixel":
        raise ValueError("rescaling applies to pixel-frame parameters")
    D = np.diag([sx, sy])
    return GaussianParams(D @ g.mu, D @ g.sigma @ D, "pixel")


def _grid_offsets(g: GaussianParams, W: int, H: int) -> tuple[np.ndarray, np.ndarray]:
    if g.frame == "pixel":
        x = np.broadcast_to(np.arange(1, W + 1, dtype=float), (H, W))
        y = np.broadcast_to(np.arange(1, H + 1, dtype=float)[:, None], (H, W))
    else:
        x, y = coord_grids(W, H)
    return x - g.mu[0], y - g.mu[1]


def _mahalanobis_sq(g: GaussianParams, W: int, H: int) -> np.ndarray:
    g.require_pd()
    dx, dy = _grid_offsets(g, W, H)
    sxx, syy, sxy = g.sigma[0, 0], g.sigma[1, 1], g.sigma[0, 1]
    det = sxx * syy - sxy * sxy
    return (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det


def render_gaussian_heatmap(g: GaussianParams, W: int, H: int) -> np.ndarray:
    """Gaussian density sampled at pixel centres, renormalized to sum 1.

    Works in either frame; the result is the same grid up to rounding.
    """
    e = -0.5 * _mahalanobis_sq(g, W, H)
    z = np.exp(e - e.max())
    return z / z.sum()


def truncation_fraction(g: GaussianParams, W: int, H: int) -> float:
    """Share of the Gaussian's mass that falls outside the ``W x H`` grid.

    Estimated as one minus the midpoint-rule mass over the grid cells.
    """
    if g.frame == "normalized":
        g = normalized_to_pixel(g, W, H)
    m = _mahalanobis_sq(g, W, H)
    det = g.sigma[0, 0] * g.sigma[1, 1] - g.sigma[0, 1] ** 2
    inside = np.exp(-0.5 * m).sum() / (2.0 * math.pi * math.sqrt(det))
    return float(min(1.0, max(0.0, 1.0 - inside)))


@dataclass(frozen=True)
class Provenance:
    pose: Pose
    intrinsics: Intrinsics
    dims: EllipsoidDims
    image_size: tuple[int, int]
    heatmap_size: tuple[int, int]


@dataclass(frozen=True)
class LabelRecord:
    """Gaussian occupancy label, pixel frame at heatmap resolution."""

    image_id: str
    gaussian: GaussianParams
    ellipse: EllipseGeom
    truncation_fraction: float
    provenance: Provenance | None = None
    grid: tuple[int, int] | None = None

    @property
    def heatmap_size(self) -> tuple[int, int]:
        if self.provenance is not None:
            return self.provenance.heatmap_size
        if self.grid is None:
            raise ValueError("label has neither provenance nor grid size")
        return self.grid

    def heatmap(self) -> np.ndarray:
        W, H = self.heatmap_size
        return render_gaussian_heatmap(self.gaussian, W, H)

    @classmethod
    def from_gaussian(cls, g: GaussianParams, W: int, H: int, image_id: str = "") -> "LabelRecord":
        """Label for a bare pixel-frame Gaussian on a ``W x H`` grid (no pose)."""
        if g.frame != "pixel":
            g = normalized_to_pixel(g, W, H)
        return cls(image_id, g, gaussian_to_ellipse(g), truncation_fraction(g, W, H), None, (int(W), int(H)))

    def heatmap_intrinsics(self) -> Intrinsics:
        (Wi, Hi), (Wh, Hh) = self.provenance.image_size, self.provenance.heatmap_size
        return self.provenance.intrinsics.scaled(Wh / Wi, Hh / Hi)


def labels_from_pose(
    K: Intrinsics,
    pose: Pose,
    dims: EllipsoidDims,
    image_size: tuple[int, int],
    heatmap_size: tuple[int, int] = (64, 64),
    image_id: str = "",
) -> LabelRecord:
    """Generate the 3D-aware Gaussian occupancy label of one image.

    Intrinsics are rescaled from image to heatmap resolution before the
    ellipsoid is projected, so the returned parameters are in heatmap
    pixels.
    """
    Wi, Hi = image_size
    Wh, Hh = heatmap_size
    if Wh > Wi or Hh > Hi:
        raise ValueError("heatmap size must not exceed image size")
    K_hm = K.scaled(Wh / Wi, Hh / Hi)
    C = project_ellipsoid(ellipsoid_dual_quadric(dims), projection_matrix(K_hm, pose))
    g = conic_to_gaussian(C)
    return LabelRecord(
        image_id=image_id,
        gaussian=g,
        ellipse=gaussian_to_ellipse(g),
        truncation_fraction=truncation_fraction(g, Wh, Hh),
        provenance=Provenance(pose, K, dims, (int(Wi), int(Hi)), (int(Wh), int(Hh))),
    )


def write_gohm(path, z: np.ndarray) -> None:
    """Write a heatmap as a GOHM file (float32, row-major, top row first)."""
    z = np.asarray(z)
    H, W = z.shape
    payload = np.ascontiguousarray(z, dtype="<f4").tobytes()
    Path(path).write_bytes(_GOHM_HEADER.pack(GOHM_MAGIC, W, H, GOHM_VERSION) + payload)


def read_gohm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _GOHM_HEADER.size:
        raise GohmFormatError(f"{path}: file too short for GOHM header")
    magic, W, H, version = _GOHM_HEADER.unpack_from(data)
    if magic != GOHM_MAGIC:
        raise GohmFormatError(f"{path}: bad magic {magic!r}")
    if version != GOHM_VERSION:
        raise GohmFormatError(f"{path}: unsupported GOHM version {version}")
    expected = _GOHM_HEADER.size + 4 * W * H
    if len(data) != expected:
        raise GohmFormatError(f"{path}: expected {expected} bytes for {W}x{H} grid, got {len(data)}")
    z = np.frombuffer(data, dtype="<f4", offset=_GOHM_HEADER.size).reshape(H, W)
    return z.astype(float)
