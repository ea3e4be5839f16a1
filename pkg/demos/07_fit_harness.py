"""
Fitting heatmap logits by gradient descent
==========================================

In place of a network, the raw 64 x 64 logits are the free parameters. Every
loss variant starts from the same logits and is scored on its final ellipse.
"""

from occupancy3d import GaussianParams, LabelRecord
from occupancy3d.descent import FitConfig, compare_variants, fit_heatmap, variants_table

target = LabelRecord.from_gaussian(GaussianParams([34.2, 29.5], [[30.0, 9.0], [9.0, 14.0]]), 64, 64, "demo")
table = variants_table(compare_variants(target, FitConfig(iterations=1500)))
for name, row in table["rows"].items():
    print(f"{name:>4}: IoU {row['iou']:.3f}, MHD {row['mhd']:.3f} px, final loss {row['final_loss']:.2e}")

# Near the grid edge the heatmap is clipped. JS reproduces the clipped
# heatmap, while W keeps pulling the moments toward the full Gaussian.
edge = LabelRecord.from_gaussian(GaussianParams([4.0, 32.0], [[36.0, 0.0], [0.0, 16.0]]), 64, 64, "edge")
print(f"edge target truncation: {edge.truncation_fraction:.1%}")
for loss in ("js", "w"):
    tr = fit_heatmap(edge, FitConfig(loss=loss), check_truncation=False)
    print(f"{loss:>4}: fitted Sxx {tr.final.sigma[0, 0]:.1f} vs label {edge.gaussian.sigma[0, 0]:.1f}")
