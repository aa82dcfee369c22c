"""Numerical laboratory for a two-species chemotaxis system on the plane.

Parameter classification against the critical parabola-and-lines geometry,
auxiliary-parameter search for the entropy method, a regularized interaction
kernel with free-space convolution, a positivity-preserving finite-volume
solver with blow-up detection, and the full diagnostic suite of tracked
integrals and bounds.
"""

from .diagnostics import (
    CSV_COLUMNS,
    BoundReport,
    CsvSink,
    DiagnosticsError,
    DiagnosticsRecord,
    JsonlSink,
    dissipation,
    dissipation_detail,
    emit,
    entropy,
    entropy_lower_bound,
    evaluate_bounds,
    free_energy,
    make_record,
    mixed_entropy,
    read_csv,
    total_mass,
    total_moment,
    weighted_moment,
)
from .hls import (
    AuxiliaryParams,
    check_bounded_below,
    check_minimizer_exists,
    entropy_coefficients,
    find_admissible_params,
    subset_polynomial,
    two_species_embedding,
)
from .kernel import (
    ChemoField,
    Field,
    GeometryError,
    KernelProfile,
    KernelTable,
    build_kernel_table,
    chemo_field,
    gradient_bound_constant,
    kernel_value,
)
from .model import (
    MassPair,
    Parameters,
    RegionLabel,
    classify,
    intersects_lines,
    moment_rate,
    parabola_value,
    predict_blowup_deadline,
    swap_species,
)
from .solver import (
    DEFAULT_EPSILON,
    BlowupDetected,
    BoundaryLeak,
    GaussianBump,
    InitialData,
    RunOutcome,
    SolverConfig,
    State,
    TerminationReason,
    load_snapshot,
    run,
    save_snapshot,
    stable_dt,
    step,
)

__all__ = [
    "AuxiliaryParams",
    "BlowupDetected",
    "BoundReport",
    "BoundaryLeak",
    "CSV_COLUMNS",
    "ChemoField",
    "CsvSink",
    "DEFAULT_EPSILON",
    "DiagnosticsError",
    "DiagnosticsRecord",
    "Field",
    "GaussianBump",
    "GeometryError",
    "InitialData",
    "JsonlSink",
    "KernelProfile",
    "KernelTable",
    "MassPair",
    "Parameters",
    "RegionLabel",
    "RunOutcome",
    "SolverConfig",
    "State",
    "TerminationReason",
    "build_kernel_table",
    "check_bounded_below",
    "check_minimizer_exists",
    "chemo_field",
    "classify",
    "dissipation",
    "dissipation_detail",
    "emit",
    "entropy",
    "entropy_coefficients",
    "entropy_lower_bound",
    "evaluate_bounds",
    "find_admissible_params",
    "free_energy",
    "gradient_bound_constant",
    "intersects_lines",
    "kernel_value",
    "load_snapshot",
    "make_record",
    "mixed_entropy",
    "moment_rate",
    "parabola_value",
    "predict_blowup_deadline",
    "read_csv",
    "run",
    "save_snapshot",
    "stable_dt",
    "step",
    "subset_polynomial",
    "swap_species",
    "total_mass",
    "total_moment",
    "two_species_embedding",
    "weighted_moment",
]

__version__ = "0.1.0"
