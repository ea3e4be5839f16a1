"""
Projecting an ellipsoid into an image
=====================================

A target is approximated by an ellipsoid built from its coarse dimensions.
Its dual quadric projects through a pinhole camera to a dual conic, which
reads directly as the mean and covariance of a 2D Gaussian.
"""

import numpy as np

from occupancy3d import (
    EllipsoidDims,
    Intrinsics,
    Pose,
    conic_to_gaussian,
    ellipsoid_dual_quadric,
    gaussian_to_ellipse,
    project_ellipsoid,
    projection_matrix,
)
from occupancy3d.synthetic import SPEEDPLUS_INTRINSICS, look_at_pose

# A spacecraft body of 80 x 75 x 32 cm, given as full extents.
dims = EllipsoidDims.from_full(0.80, 0.75, 0.32)
Q = ellipsoid_dual_quadric(dims)
print("half-axes (m):", dims.as_array())
print("dual quadric diag:", np.diag(Q))

# A camera 8 m away, slightly off to the side.
pose = look_at_pose([2.0, -1.0, -7.5], [0.0, 0.0, 0.0])
P = projection_matrix(SPEEDPLUS_INTRINSICS, pose)
C = project_ellipsoid(Q, P)
g = conic_to_gaussian(C)
e = gaussian_to_ellipse(g)
print("image Gaussian mean (px):", g.mu.round(2))
print("image Gaussian covariance (px^2):\n", g.sigma.round(2))
print(f"ellipse: centre ({e.x0:.1f}, {e.y0:.1f}), semi-axes {e.a:.2f} / {e.b:.2f} px, theta {np.degrees(e.theta):.1f} deg")

# Sanity check against a hand-computable case: a 0.5 m sphere 10 m down the
# optical axis of a 1000 px camera has radius 500 / sqrt(99.75) px.
sphere = ellipsoid_dual_quadric(EllipsoidDims(0.5, 0.5, 0.5))
P0 = projection_matrix(Intrinsics(1000.0, 1000.0, 640.0, 480.0), Pose(np.eye(3), np.array([0.0, 0.0, 10.0])))
circle = gaussian_to_ellipse(conic_to_gaussian(project_ellipsoid(sphere, P0)))
print(f"sphere radius {circle.a:.6f} px, expected {500 / np.sqrt(99.75):.6f} px")
