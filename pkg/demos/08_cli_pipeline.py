"""
The command-line pipeline end to end
====================================

Generate labels from a pose manifest, score them against themselves,
reconstruct the ellipsoid from their stored poses, and fit one target.
Each step is the same call the ``occupancy3d`` command makes.
"""

import json
import tempfile
from pathlib import Path

from occupancy3d.cli import main
from occupancy3d.synthetic import synthetic_manifest

with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    (d / "manifest.json").write_text(json.dumps(synthetic_manifest(10, seed=1)))
    print("gen-labels exit", main(["gen-labels", "--manifest", str(d / "manifest.json"), "--dims", "0.80,0.75,0.32", "--out", str(d / "labels"), "--emit-heatmaps"]))
    print("files:", sorted(p.name for p in (d / "labels").iterdir())[:4], "...")

    labels = str(d / "labels" / "labels.json")
    print("eval exit", main(["eval", "--pred", labels, "--gt", labels, "--out", str(d / "eval.json")]))
    print("aggregate:", json.loads((d / "eval.json").read_text())["aggregate"]["formatted"])

    print("extract exit", main(["extract", str(d / "labels" / "img0000.gohm"), "--out", str(d / "x.json")]))
    print("img0000 pixel mean:", json.loads((d / "x.json").read_text())["results"][0]["pixel"]["mu"])

    print("reconstruct exit", main(["reconstruct", "--labels", labels, "--out", str(d / "rec.json")]))
    print("errors:", json.loads((d / "rec.json").read_text())["errors"])

    print("fit exit", main(["fit", "--labels", labels, "--id", "img0003", "--iters", "300", "--allow-truncated", "--out", str(d / "fit.json")]))
    print("fit IoU:", json.loads((d / "fit.json").read_text())["metrics"]["iou"])
