"""Gradient descent near strict saddles: objectives, dynamics, spectra and Monte Carlo."""

from .critical import Classification, CriticalPointReport, classify, find_critical_points
from .dynamics import (
    ContractionSchedule,
    FixedSchedule,
    RunConfig,
    StaircaseSchedule,
    Status,
    Trajectory,
    next_alpha,
    run,
    run_batch,
    schedule_from_json,
    step,
)
from .experiment import (
    ExperimentConfig,
    ExperimentSummary,
    run_experiment,
    schedule_experiment,
    sweep_alpha,
    wilson_interval,
)
from .objective import (
    Objective,
    QuadraticSpec,
    fd_gradient,
    fd_hessian,
    make_example0,
    make_example1,
    make_example2,
    make_quadratic,
    objective_from_name,
    validate_objective,
)
from .spectral import LinearizationReport, SpectralReport, linearize, scan_box, scan_refinement, sym_eigenvalues

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "CriticalPointReport",
    "classify",
    "find_critical_points",
    "ContractionSchedule",
    "FixedSchedule",
    "RunConfig",
    "StaircaseSchedule",
    "Status",
    "Trajectory",
    "next_alpha",
    "run",
    "run_batch",
    "schedule_from_json",
    "step",
    "ExperimentConfig",
    "ExperimentSummary",
    "run_experiment",
    "schedule_experiment",
    "sweep_alpha",
    "wilson_interval",
    "Objective",
    "QuadraticSpec",
    "fd_gradient",
    "fd_hessian",
    "make_example0",
    "make_example1",
    "make_example2",
    "make_quadratic",
    "objective_from_name",
    "validate_objective",
    "LinearizationReport",
    "SpectralReport",
    "linearize",
    "scan_box",
    "scan_refinement",
    "sym_eigenvalues",
]
