"""Ellipsoid triangulation from multi-view ellipses.

Each view contributes ``s_i C_i = P_i Q P_i^T`` for an unknown scale
``s_i``. Writing both sides in half-vectorized form gives a homogeneous
linear system in the ten entries of ``Q`` and the per-view scales, solved
as the right singular vector of the smallest singular value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    DegenerateGeometryError,
    GaussianParams,
    conic_to_gaussian,
    gaussian_to_conic,
    normalize_conic,
)

MIN_VIEWS = 3
# Ratio of the two smallest singular values above which the null space is
# not one-dimensional.
NULLSPACE_TOL = 1e-10


@dataclass(frozen=True)
class ViewObservation:
    P: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if P.shape != (3, 4) or C.shape != (3, 3):
            raise ValueError("view needs a 3x4 projection and a 3x3 conic")
        if np.linalg.matrix_rank(P) < 3:
            raise ValueError("projection matrix must have rank 3")
        if not np.allclose(C, C.T, rtol=0, atol=1e-12 * np.abs(C).max()):
            raise ValueError("conic must be symmetric")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "C", 0.5 * (C + C.T))

    @classmethod
    def from_gaussian(cls, P, g: GaussianParams) -> "ViewObservation":
        return cls(P, gaussian_to_conic(g))


@dataclass(frozen=True)
class EllipsoidEstimate:
    center: np.ndarray
    half_axes: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        ax = np.asarray(self.half_axes, dtype=float).reshape(3)
        R = np.asarray(self.orientation, dtype=float).reshape(3, 3)
        if np.any(ax <= 0):
            raise ValueError("half-axes must be positive")
        order = np.argsort(-ax, kind="stable")
        R = R[:, order]
        if np.linalg.det(R) < 0:
            R[:, 2] = -R[:, 2]
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_axes", ax[order])
        object.__setattr__(self, "orientation", R)

    def dual_quadric(self) -> np.ndarray:
        return ellipsoid_to_dual_quadric(self.center, self.half_axes, self.orientation)


@dataclass(frozen=True)
class ReconError:
    position: float  # cm
    orientation: float  # degrees
    size: float  # cm


def ellipsoid_to_dual_quadric(center, half_axes, orientation) -> np.ndarray:
    """Dual quadric of a posed ellipsoid, normalized to ``Q[3,3] = -1``."""
    H = np.eye(4)
    H[:3, :3] = orientation
    H[:3, 3] = center
    return H @ np.diag(np.append(np.square(half_axes), -1.0)) @ H.T


_TRIU = np.triu_indices(3)
_TRIU4 = np.triu_indices(4)


def _vech(M: np.ndarray, idx) -> np.ndarray:
    # off-diagonals weighted by sqrt(2) so the Euclidean norm is Frobenius
    w = np.where(idx[0] == idx[1], 1.0, math.sqrt(2.0))
    return M[idx] * w


def _unvech4(v: np.ndarray) -> np.ndarray:
    w = np.where(_TRIU4[0] == _TRIU4[1], 1.0, math.sqrt(2.0))
    Q = np.zeros((4, 4))
    Q[_TRIU4] = v / w
    return Q + np.triu(Q, 1).T


def _quadric_basis() -> list[np.ndarray]:
    basis = []
    for k in range(10):
        e = np.zeros(10)
        e[k] = 1.0
        basis.append(_unvech4(e))
    return basis


_BASIS = _quadric_basis()


def projection_operator(P: np.ndarray) -> np.ndarray:
    """6x10 matrix of the linear map ``vech(Q) -> vech(P Q P^T)``."""
    return np.column_stack([_vech(P @ E @ P.T, _TRIU) for E in _BASIS])


def _image_normalization(C: np.ndarray) -> np.ndarray:
    """Similarity moving the ellipse centre to the origin at unit size."""
    g = conic_to_gaussian(C)
    s = math.sqrt(0.5 * np.trace(g.sigma))
    return np.array([[1.0 / s, 0.0, -g.mu[0] / s], [0.0, 1.0 / s, -g.mu[1] / s], [0.0, 0.0, 1.0]])


def _triangulate_centres(Ps: Sequence[np.ndarray], centres: Sequence[np.ndarray]) -> np.ndarray:
    rows = []
    for P, (u, v) in zip(Ps, centres):
        rows.append(u * P[2] - P[0])
        rows.append(v * P[2] - P[1])
    A = np.array(rows)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    X = np.linalg.svd(A)[2][-1]
    if abs(X[3]) < 1e-12:
        raise DegenerateGeometryError("degenerate view configuration")
    return X[:3] / X[3]


def triangulate_ellipsoid(views: Sequence[ViewObservation]) -> np.ndarray:
    """Dual quadric (``Q[3,3] = -1``) consistent with all view conics.

    Image coordinates are normalized per view and world coordinates are
    recentred on the triangulated ellipse centres before solving, which
    keeps the stacked system well conditioned.
    """
    if len(views) < MIN_VIEWS:
        raise DegenerateGeometryError(f"degenerate view configuration: need >= {MIN_VIEWS} views, got {len(views)}")
    norm_P, norm_C = [], []
    for v in views:
        C = normalize_conic(v.C)
        T = _image_normalization(C)
        P = T @ v.P
        norm_P.append(P / np.linalg.norm(P))
        Cn = T @ C @ T.T
        norm_C.append(Cn / np.linalg.norm(Cn))
    # ellipse centres map to the origin after image normalization
    X0 = _triangulate_centres(norm_P, [np.zeros(2)] * len(views))
    G = np.eye(4)
    G[:3, 3] = X0

    n = len(views)
    A = np.zeros((6 * n, 10 + n))
    for i, (P, C) in enumerate(zip(norm_P, norm_C)):
        PG = P @ G
        PG /= np.linalg.norm(PG)
        A[6 * i:6 * i + 6, :10] = projection_operator(PG)
        A[6 * i:6 * i + 6, 10 + i] = -_vech(C, _TRIU)
    _, s, vt = np.linalg.svd(A)
    if s[-2] < NULLSPACE_TOL * s[0]:
        raise DegenerateGeometryError("degenerate view configuration: solution is not unique")
    Q = G @ _unvech4(vt[-1, :10]) @ G.T
    if abs(Q[3, 3]) < 1e-15 * np.abs(Q).max():
        raise DegenerateGeometryError("reconstructed quadric has no finite centre")
    return Q / -Q[3, 3]


def decompose_dual_quadric(Q: np.ndarray) -> EllipsoidEstimate:
    """Centre, sorted half-axes and orientation of an ellipsoid dual quadric."""
    Q = np.asarray(Q, dtype=float)
    if abs(Q[3, 3]) < 1e-15 * np.abs(Q).max():
        raise DegenerateGeometryError("not an ellipsoid: Q[3,3] vanishes")
    Q = Q / -Q[3, 3]
    Q = 0.5 * (Q + Q.T)
    center = -Q[:3, 3]
    H = np.eye(4)
    H[:3, 3] = -center
    block = (H @ Q @ H.T)[:3, :3]
    w, V = np.linalg.eigh(0.5 * (block + block.T))
    if np.any(w <= 0):
        raise DegenerateGeometryError("not an ellipsoid: centred block is not positive-definite")
    return EllipsoidEstimate(center, np.sqrt(w), V)


# proper axis sign flips of a triaxial ellipsoid
_SIGN_FLIPS = [np.diag(d) for d in ([1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0])]


def rotation_angle(R: np.ndarray) -> float:
    """Geodesic angle (radians) of a rotation matrix."""
    c = 0.5 * (np.trace(R) - 1.0)
    # acos loses accuracy near 0; use the skew part as well
    s = 0.5 * np.linalg.norm([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return math.atan2(s, min(1.0, max(-1.0, c)))


def orientation_error(est: EllipsoidEstimate, gt: EllipsoidEstimate, axis_tol: float = 1e-3) -> float:
    """Smallest rotation (degrees) between the frames over ellipsoid symmetries.

    Ground-truth axes whose lengths agree within ``axis_tol`` (relative) are
    treated as equal: a sphere has no orientation, a spheroid only the
    direction of its distinct axis, and a triaxial ellipsoid is compared up
    to axis sign flips.
    """
    ax = gt.half_axes
    tol = axis_tol * ax.max()
    eq01, eq12 = ax[0] - ax[1] <= tol, ax[1] - ax[2] <= tol
    if eq01 and eq12:
        return 0.0
    if eq01 or eq12:
        k = 2 if eq01 else 0
        c = abs(float(gt.orientation[:, k] @ est.orientation[:, k]))
        s = float(np.linalg.norm(np.cross(gt.orientation[:, k], est.orientation[:, k])))
        return math.degrees(math.atan2(s, c))
    best = math.inf
    for S in _SIGN_FLIPS:
        best = min(best, rotation_angle(gt.orientation.T @ est.orientation @ S))
    return math.degrees(best)


def reconstruction_errors(est: EllipsoidEstimate, gt: EllipsoidEstimate) -> ReconError:
    position = 100.0 * float(np.linalg.norm(est.center - gt.center))
    size = 100.0 * float(np.mean(np.abs(2.0 * est.half_axes - 2.0 * gt.half_axes)))
    return ReconError(position, orientation_error(est, gt), size)


def closure_residual(Q: np.ndarray, views: Sequence[ViewObservation]) -> float:
    """Largest relative difference between reprojected and observed conics."""
    worst = 0.0
    for v in views:
        C_obs = normalize_conic(v.C)
        C_rep = normalize_conic(v.P @ Q @ v.P.T)
        worst = max(worst, float(np.linalg.norm(C_rep - C_obs) / np.linalg.norm(C_obs)))
    return worst
