"""Synthetic scenes: random camera poses around an object and matching manifests.

Used by the demos and the test-suite; nothing here is needed for real data.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from .formats import SCHEMA_VERSION
from .geometry import EllipsoidDims, Intrinsics, Pose

# TANGO spacecraft mock-up, full extents in metres
TANGO_FULL_DIMS = (0.80, 0.75, 0.32)
# SPEED+ camera (pixels)
SPEEDPLUS_INTRINSICS = Intrinsics(2988.5795, 2988.3401, 960.0, 600.0)
SPEEDPLUS_IMAGE_SIZE = (1920, 1200)


def tango_dims() -> EllipsoidDims:
    return EllipsoidDims.from_full(*TANGO_FULL_DIMS)


def look_at_pose(camera_position, target=(0.0, 0.0, 0.0), roll: float = 0.0) -> Pose:
    """Pose of the object frame seen by a camera at ``camera_position`` aimed at ``target``."""
    c = np.asarray(camera_position, dtype=float)
    z = np.asarray(target, dtype=float) - c
    z /= np.linalg.norm(z)
    helper = np.array([0.0, 0.0, 1.0]) if abs(z[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    x = np.cross(helper, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R = np.vstack([x, y, z])
    cr, sr = np.cos(roll), np.sin(roll)
    R = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]]) @ R
    return Pose(R, -R @ c)


def random_pose(rng: np.random.Generator, distance=(5.0, 15.0), aim_jitter: float = 0.3) -> Pose:
    """Camera at a uniform random direction and distance, aimed near the origin."""
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    r = rng.uniform(*distance)
    target = rng.uniform(-aim_jitter, aim_jitter, size=3)
    return look_at_pose(r * d, target, rng.uniform(0.0, 2.0 * np.pi))


def pose_to_quaternion(pose: Pose) -> np.ndarray:
    """Scalar-first quaternion of a pose's rotation."""
    x, y, z, w = Rotation.from_matrix(pose.rotation).as_quat()
    return np.array([w, x, y, z])


def synthetic_manifest(
    n: int,
    seed: int = 0,
    K: Intrinsics = SPEEDPLUS_INTRINSICS,
    image_size: tuple[int, int] = SPEEDPLUS_IMAGE_SIZE,
    distance=(5.0, 15.0),
) -> dict:
    """Native manifest document with ``n`` random views of one object."""
    rng = np.random.default_rng(seed)
    records = []
    for k in range(n):
        pose = random_pose(rng, distance)
        records.append({
            "id": f"img{k:04d}",
            "quaternion": pose_to_quaternion(pose).tolist(),
            "translation": pose.translation.tolist(),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "camera": {"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy, "width": image_size[0], "height": image_size[1]},
        "records": records,
    }
