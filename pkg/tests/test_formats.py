import json

import numpy as np
import pytest

from occupancy3d.formats import (
    SchemaError,
    dump_json,
    label_file_to_json,
    load_json,
    parse_dims,
    parse_label_file,
    parse_manifest,
    parse_size,
    parse_speedplus,
    parse_views,
    views_from_labels,
)
from occupancy3d.geometry import GaussianParams, Pose
from occupancy3d.occupancy import LabelRecord, labels_from_pose
from occupancy3d.synthetic import SPEEDPLUS_IMAGE_SIZE, SPEEDPLUS_INTRINSICS, random_pose, synthetic_manifest, tango_dims


def test_dims_are_full_extents():
    d = parse_dims("0.80,0.75,0.32")
    np.testing.assert_allclose(d.as_array(), [0.40, 0.375, 0.16], rtol=1e-15)


@pytest.mark.parametrize("text", ["0.8,0.75", "a,b,c", "0.8,-0.75,0.32", ""])
def test_bad_dims(text):
    with pytest.raises(SchemaError, match="--dims"):
        parse_dims(text)


def test_parse_size():
    assert parse_size("64x48") == (64, 48)
    for bad in ("64", "0x64", "axb"):
        with pytest.raises(SchemaError):
            parse_size(bad)


def test_manifest_round_trip():
    m = parse_manifest(synthetic_manifest(4, seed=1))
    assert [r.id for r in m.records] == ["img0000", "img0001", "img0002", "img0003"]
    assert m.camera.width == SPEEDPLUS_IMAGE_SIZE[0]
    for r in m.records:
        assert abs(np.linalg.norm(r.quaternion) - 1) < 1e-12


def test_manifest_quaternion_reproduces_pose():
    doc = synthetic_manifest(3, seed=2)
    rng = np.random.default_rng(2)
    for r in parse_manifest(doc).records:
        pose = random_pose(rng)
        np.testing.assert_allclose(Pose.from_quaternion(r.quaternion, r.translation).rotation, pose.rotation, atol=1e-12)


def test_invalid_json_reports_line_and_column(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{\n  "schema_version": 1,\n  "camera": {,}\n}')
    with pytest.raises(SchemaError, match=r"line 3, column 14"):
        load_json(p)


@pytest.mark.parametrize(
    "mutate,field",
    [
        (lambda d: d["records"][1].pop("quaternion"), r"records\[1\].*quaternion"),
        (lambda d: d["records"][0].__setitem__("quaternion", [1, 1, 0, 0]), r"records\[0\]\.quaternion: norm"),
        (lambda d: d["records"][2].__setitem__("id", "img0000"), "duplicate"),
        (lambda d: d["camera"].pop("fx"), r"camera.*'fx'"),
        (lambda d: d.__setitem__("schema_version", 2), "schema_version"),
        (lambda d: d["records"][0].__setitem__("translation", [0, "x", 1]), r"records\[0\]\.translation"),
        (lambda d: d["records"][0].__setitem__("object", "hubble"), "unknown object"),
    ],
)
def test_manifest_errors_name_the_field(mutate, field):
    doc = synthetic_manifest(3)
    mutate(doc)
    with pytest.raises(SchemaError, match=field):
        parse_manifest(doc)


def test_manifest_objects_and_override():
    doc = synthetic_manifest(2)
    doc["objects"] = {"tango": {"half_axes": [0.4, 0.375, 0.16]}}
    doc["records"][0]["object"] = "tango"
    doc["records"][1]["camera"] = dict(doc["camera"], fx=1000.0)
    m = parse_manifest(doc)
    assert m.records[0].object == "tango"
    assert m.records[1].camera.intrinsics.fx == 1000.0


def speedplus_docs():
    ann = [
        {"filename": "img000001.jpg", "q_vbs2tango_true": [0.5, 0.5, 0.5, 0.5], "r_Vo2To_vbs_true": [0.1, -0.2, 8.0]},
        {"filename": "img000002.jpg", "q_vbs2tango_true": [1.0, 0.0, 0.0, 0.0], "r_Vo2To_vbs_true": [0.0, 0.0, 12.0]},
    ]
    K = SPEEDPLUS_INTRINSICS
    cam = {"Nu": 1920, "Nv": 1200, "fx": K.fx, "fy": K.fy, "ccx": K.cx, "ccy": K.cy}
    return ann, cam


def test_speedplus_mapping():
    ann, cam = speedplus_docs()
    m = parse_speedplus(ann, cam)
    assert [r.id for r in m.records] == ["img000001.jpg", "img000002.jpg"]
    np.testing.assert_array_equal(m.records[0].quaternion, [0.5, 0.5, 0.5, 0.5])
    np.testing.assert_array_equal(m.records[0].translation, [0.1, -0.2, 8.0])
    assert (m.camera.width, m.camera.height) == (1920, 1200)
    assert m.camera.intrinsics == SPEEDPLUS_INTRINSICS


def test_speedplus_camera_matrix():
    ann, _ = speedplus_docs()
    K = SPEEDPLUS_INTRINSICS
    cam = {"Nu": 1920, "Nv": 1200, "cameraMatrix": [[K.fx, 0, K.cx], [0, K.fy, K.cy], [0, 0, 1]]}
    assert parse_speedplus(ann, cam).camera.intrinsics == K


def test_speedplus_missing_field():
    ann, cam = speedplus_docs()
    del ann[1]["r_Vo2To_vbs_true"]
    with pytest.raises(SchemaError, match=r"speedplus\[1\].*r_Vo2To_vbs_true"):
        parse_speedplus(ann, cam)


def sample_labels():
    rng = np.random.default_rng(5)
    out = [labels_from_pose(SPEEDPLUS_INTRINSICS, random_pose(rng), tango_dims(), SPEEDPLUS_IMAGE_SIZE, (64, 64), f"v{k}") for k in range(3)]
    out.append(LabelRecord.from_gaussian(GaussianParams([20.5, 30.25], [[9.0, 1.0], [1.0, 4.0]]), 48, 40, "plain"))
    return out


def test_label_file_round_trip_is_identical():
    doc = label_file_to_json(sample_labels())
    text = dump_json(doc)
    again = dump_json(label_file_to_json(parse_label_file(json.loads(text))))
    assert again == text


def test_label_file_sorted_by_id():
    ids = [d["id"] for d in label_file_to_json(sample_labels()[::-1])["labels"]]
    assert ids == sorted(ids)


def test_label_heatmap_survives_round_trip():
    labels = sample_labels()
    back = parse_label_file(json.loads(dump_json(label_file_to_json(labels))))
    for a, b in zip(sorted(labels, key=lambda l: l.image_id), back):
        np.testing.assert_array_equal(a.heatmap(), b.heatmap())


def test_label_file_errors():
    with pytest.raises(SchemaError, match="labels"):
        parse_label_file({"schema_version": 1, "labels": {}})
    doc = label_file_to_json(sample_labels())
    doc["labels"][2]["gaussian"]["sigma"] = [[1, 2], [2, 1]]
    with pytest.raises(SchemaError, match=r"labels\[2\]\.gaussian"):
        parse_label_file(doc)


def test_views_from_labels_needs_provenance():
    with pytest.raises(SchemaError, match="provenance"):
        views_from_labels(sample_labels())
    views, gt = views_from_labels(sample_labels()[:3])
    assert len(views) == 3
    np.testing.assert_allclose(gt.half_axes, [0.4, 0.375, 0.16])


def test_views_file_accepts_gaussian_or_ellipse():
    labels = sample_labels()[:3]
    views, _ = views_from_labels(labels)
    doc = {"schema_version": 1, "views": [
        {"P": views[0].P.tolist(), "ellipse": {"x0": 900.0, "y0": 600.0, "a": 40.0, "b": 20.0, "theta": 0.3}},
        {"P": views[1].P.tolist(), "gaussian": {"mu": [950.0, 610.0], "sigma": [[400.0, 10.0], [10.0, 300.0]]}},
    ]}
    parsed, gt = parse_views(doc)
    assert len(parsed) == 2 and gt is None
    del doc["views"][0]["ellipse"]
    with pytest.raises(SchemaError, match=r"views\[0\]"):
        parse_views(doc)
