"""Forward and inverse spectral solver for Sturm-Liouville operators with an
interior Bessel-type singularity and transition-matrix matching.

The public surface is re-exported here; see the README for the CLI.
"""

from . import contour, errors, forward, series
from .errors import (
    AtSingularity,
    AtSpectrum,
    BadTruncation,
    CountMismatch,
    DegenerateRecursion,
    IterationDiverged,
    NearIntegerNu,
    NearZeroRho,
    NonIntegrable,
    NumericalFailure,
    ProblemValidationError,
    RouteDisagreement,
    SConditionFailed,
    SeedDiverged,
    SeriesNotConverged,
    SLWError,
    UnsupportedRegime,
)
from .problem import (
    Potential,
    RegimeReport,
    SingularProblem,
    SpectralPoint,
    TransitionMatrix,
    WReport,
    XiMatrix,
    branch_power,
    check_class_W,
    classify_regime,
    compute_xi,
    eta,
    lift_lambda,
)
from .forward import (
    EigenvalueRecord,
    JostSolution,
    RayCheck,
    SpectrumEstimate,
    WeylEvaluation,
    asymptotic_validators,
    characteristic,
    choose_h,
    jost,
    jost_values,
    phi,
    phi_pair,
    spectrum,
    theta_pair,
    weyl_M,
    weyl_samples,
)
from .contour import (
    Contour,
    DecayReport,
    MainEquationSolve,
    RecoveredPotential,
    SolutionCache,
    TransferDiagnostics,
    WeylReconstruction,
    build_contour,
    check_Mhat_decay,
    default_s_max,
    diagnostics_P,
    epsilon0,
    kernel_D,
    main_relation_residual,
    nystrom_kernel,
    recover_q,
    reconstruct_Phi_and_M,
    solve_main_equation,
    solve_phi_prime,
)
from .series import (
    LocalSolution,
    SeriesCoefficients,
    build_coefficients,
    eval_C,
    fundamental_pair,
    sigma,
    sigma_pair,
    solve_s,
)

__version__ = "0.1.0"

__all__ = [
    "contour",
    "errors",
    "forward",
    "series",
    "SLWError",
    "ProblemValidationError",
    "NearIntegerNu",
    "AtSingularity",
    "NonIntegrable",
    "SeriesNotConverged",
    "DegenerateRecursion",
    "IterationDiverged",
    "NearZeroRho",
    "AtSpectrum",
    "UnsupportedRegime",
    "SeedDiverged",
    "CountMismatch",
    "BadTruncation",
    "SConditionFailed",
    "RouteDisagreement",
    "NumericalFailure",
    "Potential",
    "RegimeReport",
    "SingularProblem",
    "SpectralPoint",
    "TransitionMatrix",
    "WReport",
    "XiMatrix",
    "branch_power",
    "check_class_W",
    "classify_regime",
    "compute_xi",
    "eta",
    "lift_lambda",
    "EigenvalueRecord",
    "JostSolution",
    "RayCheck",
    "SpectrumEstimate",
    "WeylEvaluation",
    "asymptotic_validators",
    "characteristic",
    "choose_h",
    "jost",
    "jost_values",
    "phi",
    "phi_pair",
    "spectrum",
    "theta_pair",
    "weyl_M",
    "weyl_samples",
    "Contour",
    "DecayReport",
    "MainEquationSolve",
    "RecoveredPotential",
    "SolutionCache",
    "TransferDiagnostics",
    "WeylReconstruction",
    "build_contour",
    "check_Mhat_decay",
    "default_s_max",
    "diagnostics_P",
    "epsilon0",
    "kernel_D",
    "main_relation_residual",
    "nystrom_kernel",
    "recover_q",
    "reconstruct_Phi_and_M",
    "solve_main_equation",
    "solve_phi_prime",
    "LocalSolution",
    "SeriesCoefficients",
    "build_coefficients",
    "eval_C",
    "fundamental_pair",
    "sigma",
    "sigma_pair",
    "solve_s",
    "__version__",
]
