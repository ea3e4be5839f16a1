"""
Scoring predicted ellipses
==========================

IoU, overlap, Dice and relative volume difference come from rasterizing both
ellipses on a supersampled lattice; the modified Hausdorff distance compares
boundary samples. Batches report mean and standard deviation.
"""

from occupancy3d import EllipseGeom, evaluate, evaluate_batch

small, large = EllipseGeom(0, 0, 10, 10, 0), EllipseGeom(0, 0, 20, 20, 0)
r = evaluate(small, large)
print(f"r=10 inside r=20: IoU {r.iou:.3f}, overlap {r.overlap:.3f}, Dice {r.dice:.3f}, RVD {r.rvd:.3f}, MHD {r.mhd:.3f}")
print(f"r=10 vs r=12 MHD: {evaluate(small, EllipseGeom(0, 0, 12, 12, 0)).mhd:.3f}")

gt = {f"img{k}": EllipseGeom(40 + k, 30 - k, 12, 6, 0.2 * k) for k in range(4)}
pred = {k: EllipseGeom(e.x0 + 0.8, e.y0 - 0.5, e.a * 1.05, e.b * 0.97, e.theta + 0.03) for k, e in gt.items()}
batch = evaluate_batch(pred, gt)
for name, text in batch.formatted().items():
    print(f"{name:>8}: {text}")
