"""3D-aware Gaussian occupancy labels for object localization.

An object is approximated by an ellipsoid; its exact perspective image is an
ellipse, read as a 2D Gaussian and rendered as a probability heatmap. The
package covers label generation, moment extraction from heatmaps (E-DSNT),
the Wasserstein and Jensen-Shannon losses with analytic gradients, region
and boundary metrics, and ellipsoid triangulation from several views.
"""

from .descent import DivergenceError, FitConfig, FitTrace, compare_variants, fit_heatmap
from .edsnt import edsnt_backward, edsnt_extract, edsnt_moments, softmax_backward, softmax_normalize
from .geometry import (
    BoundingBox,
    DegenerateGeometryError,
    EllipseGeom,
    EllipsoidDims,
    GaussianParams,
    Intrinsics,
    Pose,
    conic_to_gaussian,
    ellipse_to_conic,
    ellipse_to_gaussian,
    ellipsoid_dual_quadric,
    gaussian_to_conic,
    gaussian_to_ellipse,
    project_ellipsoid,
    projection_matrix,
)
from .losses import LossTarget, LossValue, js_heatmaps, total_loss, wasserstein
from .metrics import BatchReport, MetricReport, evaluate, evaluate_batch, mhd, region_metrics
from .occupancy import (
    LabelRecord,
    labels_from_pose,
    normalized_to_pixel,
    pixel_to_normalized,
    read_gohm,
    render_gaussian_heatmap,
    truncation_fraction,
    write_gohm,
)
from .reconstruction import (
    EllipsoidEstimate,
    ReconError,
    ViewObservation,
    decompose_dual_quadric,
    reconstruction_errors,
    triangulate_ellipsoid,
)

__version__ = "0.1.0"
