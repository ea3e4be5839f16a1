import json
from dataclasses import replace

import numpy as np
import pytest

from conftest import contained_targets
from occupancy3d.descent import (
    DEFAULT_LR,
    DivergenceError,
    FitConfig,
    compare_variants,
    fit_heatmap,
    initial_logits,
    variants_table,
)
from occupancy3d.edsnt import edsnt_extract, softmax_normalize
from occupancy3d.geometry import GaussianParams
from occupancy3d.losses import js_heatmaps
from occupancy3d.occupancy import LabelRecord, normalized_to_pixel


@pytest.fixture(scope="module")
def target():
    return LabelRecord.from_gaussian(GaussianParams([30.3, 33.1], [[36.0, 8.0], [8.0, 16.0]]), 64, 64, "t")


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(iterations=0)
    with pytest.raises(ValueError):
        FitConfig(lr=-1.0)
    with pytest.raises(ValueError):
        FitConfig(loss="kl")


def test_default_steps():
    assert FitConfig().step == DEFAULT_LR["pixel"]
    assert FitConfig(loss="js").step == DEFAULT_LR["js"]
    assert FitConfig(lr=0.5).step == 0.5
    assert FitConfig(loss="w").weights == (1.0, 0.0)
    assert FitConfig(loss="js").weights == (0.0, 1.0)
    assert FitConfig(lam=0.25).weights == (1.0, 0.25)


def test_initial_logits_small_and_seeded():
    L = initial_logits(FitConfig(seed=3))
    assert L.shape == (64, 64) and np.abs(L).max() <= 0.01
    np.testing.assert_array_equal(L, initial_logits(FitConfig(seed=3)))
    assert not np.array_equal(L, initial_logits(FitConfig(seed=4)))


def test_converges_with_few_upticks(target):
    trace = fit_heatmap(target)
    losses = np.array(trace.losses)
    assert trace.report.iou > 0.95
    assert np.mean(np.diff(losses) > 0) <= 0.05
    assert losses[-1] < 1e-2 * losses[0]


def test_uptick_budget_on_random_targets():
    fractions = [np.mean(np.diff(fit_heatmap(t).losses) > 0) for t in contained_targets(10, 4242)]
    assert max(fractions) <= 0.05, f"uptick fractions {np.round(fractions, 3)}"


def test_fixed_point():
    # over 6 sigma from every edge, so the rendered heatmap carries the label moments
    label = LabelRecord.from_gaussian(GaussianParams([31.7, 32.4], [[20.0, 5.0], [5.0, 12.0]]), 64, 64)
    trace = fit_heatmap(label, FitConfig(iterations=50), init=np.log(label.heatmap()))
    assert abs(trace.losses[0]) < 1e-6
    assert np.abs(trace.final.as_vector() - label.gaussian.as_vector()).max() < 1e-6


def test_fixed_point_near_edge_moves_by_truncation_bias(target):
    # 5 sigma from the edge the clipped tail biases the extracted moments; W removes it
    trace = fit_heatmap(target, FitConfig(iterations=50), init=np.log(target.heatmap()))
    p0 = normalized_to_pixel(edsnt_extract(target.heatmap()), 64, 64).as_vector()
    drift = np.abs(trace.final.as_vector() - p0).max()
    assert drift < 1e-2
    assert np.abs(trace.final.as_vector() - target.gaussian.as_vector()).max() < drift


def test_zero_learning_rate_is_constant(target):
    trace = fit_heatmap(target, FitConfig(iterations=20, lr=0.0))
    assert len(set(trace.losses)) == 1
    np.testing.assert_array_equal(trace.logits, initial_logits(FitConfig()))


def test_lambda_zero_equals_w_only(target):
    cfg = FitConfig(iterations=300, seed=9)
    a = fit_heatmap(target, replace(cfg, lam=0.0, loss="wjs"))
    b = fit_heatmap(target, replace(cfg, loss="w"))
    assert a.losses == b.losses
    np.testing.assert_array_equal(a.logits, b.logits)


def test_deterministic(target):
    cfg = FitConfig(iterations=200, seed=5)
    a = json.dumps(fit_heatmap(target, cfg).to_json())
    b = json.dumps(fit_heatmap(target, cfg).to_json())
    assert a == b


def test_losses_finite_and_gradient_small(target):
    # the tail converges like 1/t; 2000 steps leave the gradient near 3e-3
    trace = fit_heatmap(target, FitConfig(iterations=10_000))
    assert np.all(np.isfinite(trace.losses))
    assert trace.grad_norm < 1e-3


def test_truncated_target_refused_for_w_variants():
    edge = LabelRecord.from_gaussian(GaussianParams([3.0, 32.0], np.diag([36.0, 16.0])), 64, 64)
    assert edge.truncation_fraction >= 0.05
    for v in ("w", "wjs"):
        with pytest.raises(ValueError, match="truncated"):
            fit_heatmap(edge, FitConfig(loss=v, iterations=5))
    fit_heatmap(edge, FitConfig(loss="js", iterations=5))


def test_truncation_effect_direction():
    edge = LabelRecord.from_gaussian(GaussianParams([4.0, 32.0], np.diag([36.0, 16.0])), 64, 64)
    z_gt = edge.heatmap()
    heatmap_sigma = normalized_to_pixel(edsnt_extract(z_gt), 64, 64).sigma
    js = fit_heatmap(edge, FitConfig(loss="js"), check_truncation=False)
    w = fit_heatmap(edge, FitConfig(loss="w"), check_truncation=False)
    # JS reproduces the clipped heatmap; W pushes its moments to the full Gaussian
    assert js_heatmaps(softmax_normalize(js.logits), z_gt)[0] < 5e-3
    assert js.final.sigma[0, 0] == pytest.approx(heatmap_sigma[0, 0], rel=0.25)
    assert js.final.sigma[0, 0] < 0.7 * edge.gaussian.sigma[0, 0]
    assert w.final.sigma[0, 0] > 1.5 * heatmap_sigma[0, 0]
    assert js_heatmaps(softmax_normalize(w.logits), z_gt)[0] > 10 * js_heatmaps(softmax_normalize(js.logits), z_gt)[0]


def test_compare_variants(target):
    traces = compare_variants(target)
    assert set(traces) == {"w", "wjs", "js"}
    for v, t in traces.items():
        assert t.report.iou > 0.9, v
    table = variants_table(traces)
    assert set(table["rows"]) == {"w", "wjs", "js"}
    json.dumps(table)


def test_divergence_reported(target):
    with pytest.raises(DivergenceError) as info:
        fit_heatmap(target, FitConfig(loss="js", lr=1e308, iterations=10))
    assert info.value.iteration >= 0


def test_snapshots(target):
    snaps = []
    fit_heatmap(target, FitConfig(iterations=25), snapshot_every=10, snapshots=snaps)
    assert len(snaps) == 3
    assert all(abs(s.sum() - 1) < 1e-12 for s in snaps)


def test_rescaled_grid(target):
    trace = fit_heatmap(target, FitConfig(grid=(32, 32), iterations=1500))
    assert trace.report.iou > 0.9
    assert trace.final.mu == pytest.approx(target.gaussian.mu / 2, abs=0.5)


def test_bad_init_shape(target):
    with pytest.raises(ValueError):
        fit_heatmap(target, init=np.zeros((3, 3)))
