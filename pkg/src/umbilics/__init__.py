"""Umbilic points, curvature fields, and lines of curvature on two convex
surface families (even-power superquadrics and quartically perturbed
ellipsoids of revolution), with a verification CLI."""

from .surface import (
    ChartId,
    ChartPoint,
    SurfaceSpec,
    chart_atlas,
    chart_to_ambient,
    implicit_gradient,
    implicit_value,
    load_spec,
)
from .forms import (
    CurvatureSummary,
    FundamentalForms,
    ShapeOperator,
    convexity_scan,
    curvature_summary,
    forms_closed,
    forms_numeric,
    shape_operator,
)
from .umbilic import (
    FindConfig,
    ThresholdReport,
    UmbilicRecord,
    closed_form_umbilics,
    critical_epsilon,
    find_umbilics,
    umbilic_residual,
)
from .flowlines import (
    CurveTrace,
    DirectionPair,
    TraceConfig,
    principal_quadratic,
    residual_log,
    trace_line,
)
from .index import (
    IndexConfig,
    WindingResult,
    attach_indices,
    conjecture_sweep,
    poincare_hopf_check,
    umbilic_index,
)

__version__ = "0.1.0"
