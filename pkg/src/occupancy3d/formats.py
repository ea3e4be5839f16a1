"""JSON schemas: dataset manifests, label files and multi-view files.

Every top-level document carries ``"schema_version": 1``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .geometry import (
    EllipseGeom,
    EllipsoidDims,
    GaussianParams,
    Intrinsics,
    Pose,
    ellipse_to_gaussian,
    projection_matrix,
)
from .occupancy import LabelRecord, Provenance
from .reconstruction import EllipsoidEstimate, ViewObservation

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Malformed input document; the message names the offending field."""


@dataclass(frozen=True)
class Camera:
    intrinsics: Intrinsics
    width: int
    height: int


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    quaternion: np.ndarray
    translation: np.ndarray
    camera: Camera | None = None
    object: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    camera: Camera
    records: list[ManifestRecord]
    objects: dict[str, EllipsoidDims]


def load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from None


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _get(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(f"{where}: missing field {key!r}")
    return d[key]


def _vector(value, n, where) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: expected {n} numbers") from None
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise SchemaError(f"{where}: expected {n} finite numbers, got {value!r}")
    return v


def _matrix(value, shape, where) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: expected a {shape[0]}x{shape[1]} matrix") from None
    if m.shape != shape or not np.all(np.isfinite(m)):
        raise SchemaError(f"{where}: expected a finite {shape[0]}x{shape[1]} matrix")
    return m


def _check_version(doc, where):
    version = _get(doc, "schema_version", where)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported schema_version {version!r}")


def parse_dims(text: str) -> EllipsoidDims:
    """Full object dimensions ``"dx,dy,dz"`` in metres, halved to half-axes."""
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise SchemaError(f"--dims: cannot parse {text!r}") from None
    if len(parts) != 3:
        raise SchemaError(f"--dims: expected three comma-separated values, got {text!r}")
    try:
        return EllipsoidDims.from_full(*parts)
    except ValueError as exc:
        raise SchemaError(f"--dims: {exc}") from None


def parse_size(text: str) -> tuple[int, int]:
    """``"WxH"`` -> ``(W, H)``."""
    try:
        w, h = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise SchemaError(f"expected a size like 64x64, got {text!r}") from None
    if w < 1 or h < 1:
        raise SchemaError(f"size must be positive, got {text!r}")
    return w, h


def _camera(d, where) -> Camera:
    try:
        K = Intrinsics(*(float(_get(d, k, where)) for k in ("fx", "fy", "cx", "cy")))
        return Camera(K, int(_get(d, "width", where)), int(_get(d, "height", where)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def parse_manifest(doc) -> DatasetManifest:
    _check_version(doc, "manifest")
    camera = _camera(_get(doc, "camera", "manifest"), "manifest.camera")
    objects = {}
    for name, obj in (doc.get("objects") or {}).items():
        where = f"manifest.objects.{name}"
        axes = _vector(_get(obj, "half_axes", where), 3, f"{where}.half_axes")
        try:
            objects[name] = EllipsoidDims(*axes)
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
    records = []
    seen = set()
    raw = _get(doc, "records", "manifest")
    if not isinstance(raw, list):
        raise SchemaError("manifest.records: expected a list")
    for n, r in enumerate(raw):
        where = f"manifest.records[{n}]"
        rid = str(_get(r, "id", where))
        if rid in seen:
            raise SchemaError(f"{where}.id: duplicate record id {rid!r}")
        seen.add(rid)
        q = _vector(_get(r, "quaternion", where), 4, f"{where}.quaternion")
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise SchemaError(f"{where}.quaternion: norm {np.linalg.norm(q):.6g} is not 1")
        t = _vector(_get(r, "translation", where), 3, f"{where}.translation")
        cam = _camera(r["camera"], f"{where}.camera") if "camera" in r else None
        obj = r.get("object")
        if obj is not None and obj not in objects:
            raise SchemaError(f"{where}.object: unknown object {obj!r}")
        records.append(ManifestRecord(rid, q, t, cam, obj))
    return DatasetManifest(camera, records, objects)


def parse_speedplus(doc, camera_doc) -> DatasetManifest:
    """Convert SPEED/SPEED+ pose annotations into a manifest.

    Field mapping: ``filename -> id``, ``q_vbs2tango_true`` (scalar first)
    ``-> quaternion``, ``r_Vo2To_vbs_true -> translation``. The camera file
    supplies ``Nu``/``Nv`` and either ``cameraMatrix`` or ``fx, fy, ccx, ccy``
    in pixels.
    """
    if not isinstance(doc, list):
        raise SchemaError("speedplus: expected a list of annotations")
    if "cameraMatrix" in camera_doc:
        K = _matrix(camera_doc["cameraMatrix"], (3, 3), "camera.cameraMatrix")
        fx, fy, cx, cy = K[0, 0], K[1, 1], K[0, 2], K[1, 2]
    else:
        fx, fy, cx, cy = (float(_get(camera_doc, k, "camera")) for k in ("fx", "fy", "ccx", "ccy"))
    camera = Camera(Intrinsics(fx, fy, cx, cy), int(_get(camera_doc, "Nu", "camera")), int(_get(camera_doc, "Nv", "camera")))
    records = [
        {
            "id": _get(a, "filename", f"speedplus[{n}]"),
            "quaternion": _get(a, "q_vbs2tango_true", f"speedplus[{n}]"),
            "translation": _get(a, "r_Vo2To_vbs_true", f"speedplus[{n}]"),
        }
        for n, a in enumerate(doc)
    ]
    native = {"schema_version": SCHEMA_VERSION, "camera": {"fx": fx, "fy": fy, "cx": cx, "cy": cy, "width": camera.width, "height": camera.height}, "records": records}
    return parse_manifest(native)


def gaussian_to_json(g: GaussianParams) -> dict:
    return {"frame": g.frame, "mu": g.mu.tolist(), "sigma": g.sigma.tolist()}


def gaussian_from_json(d, where="gaussian") -> GaussianParams:
    try:
        g = GaussianParams(_vector(_get(d, "mu", where), 2, f"{where}.mu"), _matrix(_get(d, "sigma", where), (2, 2), f"{where}.sigma"), d.get("frame", "pixel"))
        return g.require_pd()
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def ellipse_from_json(d, where="ellipse") -> EllipseGeom:
    try:
        return EllipseGeom(*(float(_get(d, k, where)) for k in ("x0", "y0", "a", "b", "theta")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def label_to_json(label: LabelRecord) -> dict:
    out = {
        "id": label.image_id,
        "gaussian": gaussian_to_json(label.gaussian),
        "ellipse": asdict(label.ellipse),
        "truncation_fraction": label.truncation_fraction,
        "heatmap_size": list(label.heatmap_size),
    }
    p = label.provenance
    if p is not None:
        out["provenance"] = {
            "rotation": p.pose.rotation.tolist(),
            "translation": p.pose.translation.tolist(),
            "intrinsics": asdict(p.intrinsics),
            "half_axes": p.dims.as_array().tolist(),
            "image_size": list(p.image_size),
            "heatmap_size": list(p.heatmap_size),
        }
    return out


def label_from_json(d, where="label") -> LabelRecord:
    size = tuple(int(v) for v in _get(d, "heatmap_size", where))
    prov = None
    if "provenance" in d:
        pw = f"{where}.provenance"
        p = d["provenance"]
        try:
            prov = Provenance(
                pose=Pose(_matrix(_get(p, "rotation", pw), (3, 3), f"{pw}.rotation"), _vector(_get(p, "translation", pw), 3, f"{pw}.translation")),
                intrinsics=Intrinsics(**_get(p, "intrinsics", pw)),
                dims=EllipsoidDims(*_vector(_get(p, "half_axes", pw), 3, f"{pw}.half_axes")),
                image_size=tuple(int(v) for v in _get(p, "image_size", pw)),
                heatmap_size=tuple(int(v) for v in _get(p, "heatmap_size", pw)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"{pw}: {exc}") from None
    return LabelRecord(
        image_id=str(_get(d, "id", where)),
        gaussian=gaussian_from_json(_get(d, "gaussian", where), f"{where}.gaussian"),
        ellipse=ellipse_from_json(_get(d, "ellipse", where), f"{where}.ellipse"),
        truncation_fraction=float(_get(d, "truncation_fraction", where)),
        provenance=prov,
        grid=None if prov is not None else size,
    )


def label_file_to_json(labels: list[LabelRecord], errors: list[dict] | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "labels": [label_to_json(l) for l in sorted(labels, key=lambda l: l.image_id)],
        "errors": errors or [],
    }


def parse_label_file(doc) -> list[LabelRecord]:
    _check_version(doc, "label file")
    raw = _get(doc, "labels", "label file")
    if not isinstance(raw, list):
        raise SchemaError("label file.labels: expected a list")
    return [label_from_json(d, f"labels[{n}]") for n, d in enumerate(raw)]


def estimate_to_json(est: EllipsoidEstimate) -> dict:
    return {"center": est.center.tolist(), "half_axes": est.half_axes.tolist(), "orientation": est.orientation.tolist()}


def estimate_from_json(d, where="gt") -> EllipsoidEstimate:
    try:
        return EllipsoidEstimate(
            _vector(_get(d, "center", where), 3, f"{where}.center"),
            _vector(_get(d, "half_axes", where), 3, f"{where}.half_axes"),
            _matrix(d.get("orientation", np.eye(3).tolist()), (3, 3), f"{where}.orientation"),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from None


def parse_views(doc) -> tuple[list[ViewObservation], EllipsoidEstimate | None]:
    """Views document: ``{"views": [{"P": 3x4, "ellipse"|"gaussian": ...}], "gt"?}``."""
    _check_version(doc, "views file")
    raw = _get(doc, "views", "views file")
    if not isinstance(raw, list):
        raise SchemaError("views file.views: expected a list")
    views = []
    for n, v in enumerate(raw):
        where = f"views[{n}]"
        P = _matrix(_get(v, "P", where), (3, 4), f"{where}.P")
        if "gaussian" in v:
            g = gaussian_from_json(v["gaussian"], f"{where}.gaussian")
        elif "ellipse" in v:
            g = ellipse_to_gaussian(ellipse_from_json(v["ellipse"], f"{where}.ellipse"))
        else:
            raise SchemaError(f"{where}: needs an 'ellipse' or a 'gaussian'")
        try:
            views.append(ViewObservation.from_gaussian(P, g))
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
    gt = estimate_from_json(doc["gt"]) if doc.get("gt") is not None else None
    return views, gt


def views_from_labels(labels: list[LabelRecord]) -> tuple[list[ViewObservation], EllipsoidEstimate]:
    """Views in heatmap pixels from labels with provenance; ground truth is the
    labelled ellipsoid in its own object frame."""
    views = []
    dims = None
    for l in labels:
        if l.provenance is None:
            raise SchemaError(f"label {l.image_id!r} has no provenance; cannot build a view")
        P = projection_matrix(l.heatmap_intrinsics(), l.provenance.pose)
        views.append(ViewObservation.from_gaussian(P, l.gaussian))
        if dims is not None and l.provenance.dims != dims:
            raise SchemaError(f"label {l.image_id!r} describes a different object; reconstruct one object at a time")
        dims = l.provenance.dims
    gt = EllipsoidEstimate(np.zeros(3), dims.as_array(), np.eye(3)) if dims is not None else None
    return views, gt
