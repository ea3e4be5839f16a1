"""Projective geometry of ellipsoids and their image ellipses.

An ellipsoid with half-axes (a', b', c') centred on the object origin is
represented by the dual quadric ``diag(a'^2, b'^2, c'^2, -1)``. Under a
pinhole camera ``P = K [R | T]`` it projects to the dual conic
``C = P Q P^T``, from which the mean and covariance of the associated
Gaussian occupancy are read off directly.

Conventions
-----------
* Quaternions are Hamilton, scalar first, and rotate object-frame vectors
  into the camera frame.
* Ellipse orientation ``theta`` is the direction of the major axis,
  measured from +x towards +y, folded into ``[0, pi)``.
* The covariance of an ellipse with semi-axes ``a >= b`` is
  ``R(theta) diag(a^2, b^2) R(theta)^T``; the ellipse is its unit
  Mahalanobis level set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Frame = Literal["pixel", "normalized"]

# Eigenvalue gap below which an ellipse is treated as a circle.
CIRCLE_TOL = 1e-12
# Relative magnitude of C[2,2] below which a dual conic is degenerate.
CONIC_TOL = 1e-15


class DegenerateGeometryError(ValueError):
    """Raised when a conic, quadric or view configuration is degenerate."""


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def scaled(self, sx: float, sy: float) -> "Intrinsics":
        """Intrinsics of the same camera after resampling the image by (sx, sy)."""
        return Intrinsics(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy)


@dataclass(frozen=True)
class Pose:
    """Object pose in the camera frame: ``x_cam = rotation @ x_obj + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_quaternion(cls, q, translation) -> "Pose":
        return cls(quat_to_rotation(q), translation)


@dataclass(frozen=True)
class EllipsoidDims:
    """Half-axes of the ellipsoid along the object's principal directions (m)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ValueError(f"ellipsoid half-axes must be positive, got {(self.a, self.b, self.c)}")

    @classmethod
    def from_full(cls, dx: float, dy: float, dz: float) -> "EllipsoidDims":
        """Build from full extents (as object dimensions are usually quoted)."""
        return cls(dx / 2.0, dy / 2.0, dz / 2.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


@dataclass(frozen=True)
class GaussianParams:
    """Mean and covariance of a bivariate Gaussian.

    Positive-definiteness is not enforced at construction, since heatmap
    moment extraction may legitimately yield a singular covariance (point
    mass). Operations needing a proper ellipse call :meth:`require_pd`.
    """

    mu: np.ndarray
    sigma: np.ndarray
    frame: Frame = "pixel"

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(2)
        sigma = np.asarray(self.sigma, dtype=float).reshape(2, 2)
        if abs(sigma[0, 1] - sigma[1, 0]) > 1e-12 * max(1.0, np.abs(sigma).max()):
            raise ValueError("covariance must be symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        if self.frame not in ("pixel", "normalized"):
            raise ValueError(f"unknown frame {self.frame!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_vector(cls, v, frame: Frame = "pixel") -> "GaussianParams":
        """From ``[mu_x, mu_y, s_xx, s_yy, s_xy]``."""
        mx, my, sxx, syy, sxy = (float(x) for x in v)
        return cls(np.array([mx, my]), np.array([[sxx, sxy], [sxy, syy]]), frame)

    def as_vector(self) -> np.ndarray:
        s = self.sigma
        return np.array([self.mu[0], self.mu[1], s[0, 0], s[1, 1], s[0, 1]])

    @property
    def is_positive_definite(self) -> bool:
        s = self.sigma
        return bool(s[0, 0] > 0 and s[0, 0] * s[1, 1] - s[0, 1] ** 2 > 0)

    def require_pd(self) -> "GaussianParams":
        if not self.is_positive_definite:
            raise DegenerateGeometryError("covariance is not positive-definite")
        return self


@dataclass(frozen=True)
class EllipseGeom:
    x0: float
    y0: float
    a: float
    b: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")
        object.__setattr__(self, "theta", float(self.theta) % math.pi)

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x0, self.y0])

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b


@dataclass(frozen=True)
class BoundingBox:
    xc: float
    yc: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("box width and height must be positive")


def rot2d(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def quat_to_rotation(q) -> np.ndarray:
    """Rotation matrix of a scalar-first Hamilton quaternion.

    The quaternion is renormalized; a zero quaternion raises ``ValueError``.
    """
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n == 0 or not np.isfinite(n):
        raise ValueError("quaternion has zero (or non-finite) norm")
    w, x, y, z = q / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def ellipsoid_dual_quadric(dims: EllipsoidDims) -> np.ndarray:
    """Dual quadric of an axis-aligned ellipsoid centred at the origin."""
    return np.diag([dims.a ** 2, dims.b ** 2, dims.c ** 2, -1.0])


def projection_matrix(K: Intrinsics, pose: Pose) -> np.ndarray:
    """``P = K [R | T]`` (3x4)."""
    return K.matrix @ np.hstack([pose.rotation, pose.translation[:, None]])


def dual_quadric_center(Q: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if abs(Q[3, 3]) < CONIC_TOL * np.abs(Q).max():
        raise DegenerateGeometryError("dual quadric has no finite centre")
    return Q[:3, 3] / Q[3, 3]


def project_ellipsoid(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Project a dual quadric to a dual conic, ``C = P Q P^T``.

    Raises :class:`DegenerateGeometryError` when the ellipsoid centre is not
    strictly in front of the camera or the image is not a real ellipse.
    """
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    center = dual_quadric_center(Q)
    depth = P[2] @ np.append(center, 1.0)
    # P is defined up to sign; compare against the orientation of K's last row
    # by using the sign of det(P[:, :3]).
    if depth * np.sign(np.linalg.det(P[:, :3])) <= 0:
        raise DegenerateGeometryError("ellipsoid centre is behind or on the camera plane")
    C = P @ Q @ P.T
    C = 0.5 * (C + C.T)
    conic_to_gaussian(C)  # validates that C is a real ellipse
    return C


def normalize_conic(C: np.ndarray) -> np.ndarray:
    """Scale a dual conic so that ``C[2,2] == -1``."""
    C = np.asarray(C, dtype=float)
    scale = np.abs(C).max()
    if not np.isfinite(scale) or scale == 0 or abs(C[2, 2]) < CONIC_TOL * scale:
        raise DegenerateGeometryError("degenerate conic")
    return C / -C[2, 2]


def conic_to_gaussian(C: np.ndarray) -> GaussianParams:
    """Mean and covariance of the ellipse encoded by dual conic ``C``.

    The conic is normalized to ``C[2,2] = -1``; the centre is then
    ``-C[:2, 2]`` and the covariance is the upper-left block of the conic
    translated to that centre.
    """
    Cn = normalize_conic(C)
    mu = -Cn[:2, 2]
    T = np.array([[1.0, 0.0, -mu[0]], [0.0, 1.0, -mu[1]], [0.0, 0.0, 1.0]])
    centred = T @ Cn @ T.T
    g = GaussianParams(mu, 0.5 * (centred[:2, :2] + centred[:2, :2].T), "pixel")
    if not g.is_positive_definite:
        raise DegenerateGeometryError("degenerate conic: covariance block is not positive-definite")
    return g


def gaussian_to_conic(g: GaussianParams) -> np.ndarray:
    """Dual conic (normalized, ``C[2,2] = -1``) of the ellipse of ``g``."""
    mu = g.mu
    C = np.empty((3, 3))
    C[:2, :2] = g.sigma - np.outer(mu, mu)
    C[:2, 2] = C[2, :2] = -mu
    C[2, 2] = -1.0
    return C


def eig_sym2(sigma: np.ndarray) -> tuple[float, float, float]:
    """Closed-form eigen-decomposition of a symmetric 2x2 matrix.

    Returns ``(lam1, lam2, theta)`` with ``lam1 >= lam2`` and ``theta`` the
    direction of the ``lam1`` eigenvector in ``[0, pi)`` (0 for isotropic
    matrices).
    """
    p, q, r = float(sigma[0, 0]), float(sigma[1, 1]), float(sigma[0, 1])
    half_diff = 0.5 * (p - q)
    mean = 0.5 * (p + q)
    d = math.hypot(half_diff, r)
    lam1 = mean + d
    det = p * q - r * r
    # lam2 = mean - d cancels catastrophically for elongated matrices
    lam2 = det / lam1 if lam1 > 0 and det > 0 else mean - d
    if d < CIRCLE_TOL * max(abs(lam1), 1.0):
        return lam1, lam2, 0.0
    theta = 0.5 * math.atan2(2.0 * r, p - q)
    return lam1, lam2, theta % math.pi


def gaussian_to_ellipse(g: GaussianParams) -> EllipseGeom:
    g.require_pd()
    lam1, lam2, theta = eig_sym2(g.sigma)
    return EllipseGeom(float(g.mu[0]), float(g.mu[1]), math.sqrt(lam1), math.sqrt(lam2), theta)


def ellipse_to_gaussian(e: EllipseGeom, frame: Frame = "pixel") -> GaussianParams:
    R = rot2d(e.theta)
    sigma = R @ np.diag([e.a ** 2, e.b ** 2]) @ R.T
    return GaussianParams(np.array([e.x0, e.y0]), sigma, frame)


def ellipse_to_conic(e: EllipseGeom) -> np.ndarray:
    return gaussian_to_conic(ellipse_to_gaussian(e))


def ellipse_from_bbox(box: BoundingBox) -> EllipseGeom:
    """Axis-aligned ellipse inscribed in a bounding box."""
    if box.width >= box.height:
        return EllipseGeom(box.xc, box.yc, box.width / 2.0, box.height / 2.0, 0.0)
    return EllipseGeom(box.xc, box.yc, box.height / 2.0, box.width / 2.0, math.pi / 2.0)
