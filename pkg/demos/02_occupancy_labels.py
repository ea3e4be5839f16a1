"""
Gaussian occupancy labels from a pose
=====================================

A label is the projected Gaussian rescaled to the heatmap grid, together with
its rendered heatmap. Only the pose, the camera and the coarse dimensions are
needed; the image itself is never read.
"""

import tempfile
from pathlib import Path

import numpy as np

from occupancy3d import EllipsoidDims, read_gohm, write_gohm
from occupancy3d.occupancy import labels_from_pose
from occupancy3d.synthetic import SPEEDPLUS_IMAGE_SIZE, SPEEDPLUS_INTRINSICS, random_pose

rng = np.random.default_rng(7)
dims = EllipsoidDims.from_full(0.80, 0.75, 0.32)
label = labels_from_pose(SPEEDPLUS_INTRINSICS, random_pose(rng), dims, SPEEDPLUS_IMAGE_SIZE, (64, 64), "img0000")

print("heatmap-frame mean:", label.gaussian.mu.round(3))
print("heatmap-frame covariance:\n", label.gaussian.sigma.round(3))
print(f"mass outside the grid: {label.truncation_fraction:.2e}")

z = label.heatmap()
print("heatmap shape", z.shape, "sum", z.sum())

# Show the heatmap as coarse ASCII art.
for row in z[::4, ::2]:
    print("".join(" .:-=+*#%@"[min(9, int(10 * v / z.max()))] for v in row))

# Heatmaps are stored in the compact GOHM binary format (float32).
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "img0000.gohm"
    write_gohm(path, z)
    back = read_gohm(path)
    print(f"GOHM file {path.stat().st_size} bytes, max round-trip error {np.abs(back - z).max():.1e}")
