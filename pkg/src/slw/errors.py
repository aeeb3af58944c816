"""Exception taxonomy for the solver.

Every failure mode that callers are expected to handle gets its own class so
the CLI can map it to a stable exit code. All classes derive from
:class:`SLWError`; plain ``ValueError``/``TypeError`` are reserved for
programming errors (bad argument types, impossible shapes).
"""

from __future__ import annotations


class SLWError(Exception):
    """Base class for solver-domain failures."""


class ProblemValidationError(SLWError):
    """A problem definition violates a structural constraint (exit code 1)."""


class NearIntegerNu(ProblemValidationError):
    """|sin(pi nu)| below tolerance: the two exponents collide."""


class AtSingularity(SLWError):
    """Evaluation requested exactly at the interior singular point."""


class NonIntegrable(SLWError):
    """Weighted integrability check diverged under mesh refinement."""


class SeriesNotConverged(SLWError):
    """Power-series tail bound still above tolerance at the last kept term."""


class DegenerateRecursion(SLWError):
    """A series recursion denominator fell below tolerance."""


class IterationDiverged(SLWError):
    """Successive approximations stopped contracting."""


class NearZeroRho(SLWError):
    """|rho| too small for the scattering normalization to make sense."""


class AtSpectrum(SLWError):
    """Weyl evaluation at a point where the characteristic function vanishes."""


class UnsupportedRegime(SLWError):
    """The xi-matrix magnitudes fall outside the implemented regime (exit 3)."""


class SeedDiverged(SLWError):
    """Newton refinement left the box of its asymptotic seed."""


class CountMismatch(SLWError):
    """Argument-principle zero count disagrees with the refined zeros."""


class BadTruncation(SLWError):
    """Contour truncation too short for its height."""


class SConditionFailed(SLWError):
    """Discretized main-equation operator numerically singular (exit 2)."""


class RouteDisagreement(SLWError):
    """The two recovery routes differ beyond the discretization-error budget."""


class NumericalFailure(SLWError):
    """Catch-all for a numerically rejected run (exit 4)."""
