"""
Wasserstein and Jensen-Shannon losses
=====================================

The training objective compares the extracted Gaussian with the label in
closed form (2-Wasserstein) and the heatmaps pixel-wise (Jensen-Shannon).
Both gradients are analytic; here they are checked against finite differences.
"""

import numpy as np

from occupancy3d import GaussianParams, LabelRecord, js_heatmaps, softmax_normalize, total_loss, wasserstein

a = GaussianParams([0.0, 0.0], np.diag([4.0, 1.0]))
b = GaussianParams([0.0, 0.0], np.diag([1.0, 4.0]))
print("W(diag(4,1), diag(1,4)) =", round(wasserstein(a, b)[0], 12))
print("W with a 3-4-5 offset  =", wasserstein(GaussianParams([1, 2], 3 * np.eye(2)), GaussianParams([4, 6], 3 * np.eye(2)))[0])

p, q = np.array([[0.5, 0.5]]), np.array([[0.25, 0.75]])
print(f"JS of a two-pixel pair = {js_heatmaps(p, q)[0]:.5f}")

label = LabelRecord.from_gaussian(GaussianParams([8.3, 7.6], [[5.0, 1.5], [1.5, 3.0]]), 16, 16)
logits = np.random.default_rng(0).normal(size=(16, 16))
value, grad = total_loss(logits, label)
print(f"total {value.total:.4f} = W {value.wasserstein_term:.4f} + lambda * JS {value.js_term:.4f}")

# Finite-difference check of a handful of logit entries.
h = 1e-5
for idx in [(0, 0), (7, 8), (15, 3)]:
    up, dn = logits.copy(), logits.copy()
    up[idx] += h
    dn[idx] -= h
    num = (total_loss(up, label)[0].total - total_loss(dn, label)[0].total) / (2 * h)
    print(f"d/dlogit{idx}: analytic {grad[idx]: .8f}, numeric {num: .8f}")

print("heatmap of the logits sums to", softmax_normalize(logits).sum())
