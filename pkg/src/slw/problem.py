"""Problem definitions: singular point, transition matrix, potential, regime.

The operator under study is

    -y'' + ( nu0/(x-a)^2 + q(x) ) y = lambda y,   x > 0,  nu0 = nu^2 - 1/4,

with a Dirichlet condition at x = 0, an interior singular point a > 0, and
solutions matched across a through a fixed 2x2 transition matrix A acting on
the local fundamental system.  This module holds the value types shared by
every other module plus the cheap structural computations on them: the
xi-matrix that controls all large-|rho| asymptotics, the regime
classification, the piecewise weight eta, the lambda -> rho lift with its
two-sided cut, and the weighted integrability check for the potential class.

Branch convention used throughout the package:

    z^mu = exp( mu * (ln|z| + i*arg z) ),  arg z in (-pi, pi],

so for x < a the base x - a carries arg = +pi.  After lifting, rho values on
the real or imaginary axis are normalized to a +0.0 imaginary part so that
numpy principal powers agree with this convention.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AtSingularity,
    NearIntegerNu,
    NonIntegrable,
    ProblemValidationError,
)

__all__ = [
    "SpectralPoint",
    "TransitionMatrix",
    "XiMatrix",
    "RegimeReport",
    "Potential",
    "SingularProblem",
    "WReport",
    "lift_lambda",
    "compute_xi",
    "classify_regime",
    "eta",
    "check_class_W",
    "branch_power",
]

#: Tolerance below which |sin(pi nu)| counts as a collision of exponents.
NEAR_INTEGER_TOL = 1e-8

#: Gaussian bump is truncated to exactly zero beyond this many widths.
BUMP_CUTOFF_WIDTHS = 8.0


def _as_complex(value) -> complex:
    """Accept a number or an [re, im] pair and return a builtin complex."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ProblemValidationError(f"complex pair must have 2 entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _require_finite(name: str, z: complex) -> None:
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ProblemValidationError(f"{name} must be finite, got {z!r}")


def branch_power(base, exponent):
    """base**exponent on the branch arg in (-pi, pi] (negative reals -> +pi).

    Works on scalars and arrays.  The only care needed beyond numpy's
    principal power is the sign of zero in the imaginary part: values that
    are exactly real are rebuilt with +0.0 imaginary part first.
    """
    z = np.asarray(base, dtype=complex)
    z = np.where(z.imag == 0.0, z.real + 0.0j, z)
    out = np.exp(np.asarray(exponent, dtype=complex) * np.log(z))
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# spectral parameter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralPoint:
    """A point lambda = rho^2 with its lifted square root, Im rho >= 0.

    ``side`` records which edge of the two-sided cut along the positive real
    lambda-axis the point belongs to ("upper" or "lower"); it only
    disambiguates when lambda is real positive.
    """

    lam: complex
    rho: complex
    side: str = "upper"

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ProblemValidationError(f"side must be 'upper' or 'lower', got {self.side!r}")
        if self.rho.imag < 0.0:
            raise ProblemValidationError(f"rho must satisfy Im rho >= 0, got {self.rho!r}")
        scale = max(1.0, abs(self.lam))
        if abs(self.rho * self.rho - self.lam) > 1e-12 * scale:
            raise ProblemValidationError(
                f"rho^2 = {self.rho * self.rho!r} does not match lambda = {self.lam!r}"
            )


def lift_lambda(lam, side: str = "upper") -> SpectralPoint:
    """Lift lambda to rho with Im rho >= 0, honoring the two-sided cut.

    For Im lambda > 0 the principal square root already lands in the upper
    half plane; for Im lambda < 0 its negative does.  Real positive lambda is
    ambiguous and resolved by ``side``: the upper edge lifts to +sqrt(lambda),
    the lower edge to -sqrt(lambda).  Real negative lambda lifts to
    i*sqrt(-lambda) from either side.
    """
    lam = complex(lam)
    if lam.imag > 0.0:
        rho = cmath.sqrt(lam)
        side = "upper"
    elif lam.imag < 0.0:
        rho = -cmath.sqrt(lam)
        side = "lower"
    else:
        x = lam.real
        lam = complex(x, 0.0)
        if x >= 0.0:
            r = math.sqrt(x)
            rho = complex(r if side == "upper" else -r, 0.0)
        else:
            rho = complex(0.0, math.sqrt(-x))
    # normalize signed zeros so principal powers use arg = +pi on (-inf, 0)
    rho = complex(rho.real, rho.imag if rho.imag != 0.0 else 0.0)
    return SpectralPoint(lam=lam, rho=rho, side=side)


# ---------------------------------------------------------------------------
# transition matrix and xi
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    """The matrix A gluing the local fundamental system across x = a.

    The implemented regime requires a12 = 0 (the coefficient that would mix
    the recessive branch into the dominant one), and A must be invertible.
    """

    a11: complex
    a12: complex
    a21: complex
    a22: complex

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            _require_finite(name, getattr(self, name))
        if self.a12 != 0:
            raise ProblemValidationError(
                f"transition matrix must have a12 = 0 in the implemented regime, got {self.a12!r}"
            )
        if self.det == 0:
            raise ProblemValidationError("transition matrix must be invertible")

    @property
    def det(self) -> complex:
        return self.a11 * self.a22 - self.a12 * self.a21

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=complex)

    @classmethod
    def identity(cls) -> "TransitionMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_flat(cls, entries: Sequence) -> "TransitionMatrix":
        """Row-major [a11, a12, a21, a22], each a number or [re, im] pair."""
        if len(entries) != 4:
            raise ProblemValidationError(f"need 4 matrix entries, got {len(entries)}")
        return cls(*(_as_complex(e) for e in entries))


@dataclass(frozen=True)
class XiMatrix:
    """Connection coefficients controlling every large-|rho| estimate.

    Symmetric by construction (xi21 = xi12).  Entries depend only on a11,
    a22 and nu.
    """

    xi11: complex
    xi12: complex
    xi21: complex
    xi22: complex

    def as_array(self) -> np.ndarray:
        return np.array([[self.xi11, self.xi12], [self.xi21, self.xi22]], dtype=complex)


def compute_xi(tm: TransitionMatrix, nu: complex) -> XiMatrix:
    """xi-matrix of (A, nu); raises NearIntegerNu when the exponents collide."""
    nu = complex(nu)
    s = cmath.sin(cmath.pi * nu)
    if abs(s) < NEAR_INTEGER_TOL:
        raise NearIntegerNu(f"|sin(pi nu)| = {abs(s):.3e} < {NEAR_INTEGER_TOL:g} for nu = {nu!r}")
    e1 = cmath.exp(1j * cmath.pi * nu)
    e2 = e1 * e1
    pref = 1.0 / (2.0 * s)
    xi11 = pref * (-tm.a11 * e2 + tm.a22 / e2)
    xi12 = pref * (-1j) * (tm.a11 * e1 - tm.a22 / e1)
    xi22 = pref * (tm.a11 - tm.a22)
    return XiMatrix(xi11=xi11, xi12=xi12, xi21=xi12, xi22=xi22)


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of the magnitude test |xi11| > |xi12| > 0 and |xi22| > |xi12|."""

    supported: bool
    mag11: float
    mag12: float
    mag22: float
    reason: str

    @property
    def margins(self) -> tuple[float, float]:
        """(|xi11| - |xi12|, |xi22| - |xi12|); both must be positive."""
        return (self.mag11 - self.mag12, self.mag22 - self.mag12)


def classify_regime(xi: XiMatrix) -> RegimeReport:
    """Check the strict magnitude ordering the localization theory needs."""
    m11, m12, m22 = abs(xi.xi11), abs(xi.xi12), abs(xi.xi22)
    if m12 == 0.0:
        return RegimeReport(False, m11, m12, m22, "xi12 vanishes")
    if m11 <= m12:
        return RegimeReport(False, m11, m12, m22, f"|xi11| = {m11:.6g} <= |xi12| = {m12:.6g}")
    if m22 <= m12:
        return RegimeReport(False, m11, m12, m22, f"|xi22| = {m22:.6g} <= |xi12| = {m12:.6g}")
    return RegimeReport(True, m11, m12, m22, "magnitude ordering satisfied")


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Complex-valued potential q.  Variants: zero, gaussian_bump, grid.

    gaussian_bump: amplitude * exp(-((x-center)/width)^2), truncated to exact
    zero beyond BUMP_CUTOFF_WIDTHS widths (below 1e-27 of the peak), which
    gives it a genuine compact support for the scattering tail.

    grid: linear interpolation through samples, identically zero outside the
    sampled range.
    """

    kind: str
    center: float = 0.0
    width: float = 0.0
    amplitude: complex = 0.0
    x: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "zero":
            return
        if self.kind == "gaussian_bump":
            if not (self.width > 0.0 and math.isfinite(self.width) and math.isfinite(self.center)):
                raise ProblemValidationError("gaussian_bump needs finite center and width > 0")
            _require_finite("amplitude", self.amplitude)
            return
        if self.kind == "grid":
            x = np.array(self.x, dtype=float, copy=True)
            v = np.array(self.values, dtype=complex, copy=True)
            if x.ndim != 1 or x.size < 2 or v.shape != x.shape:
                raise ProblemValidationError("grid potential needs matching 1-d x and values, n >= 2")
            if not np.all(np.diff(x) > 0):
                raise ProblemValidationError("grid potential x must be strictly increasing")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v.real)) and np.all(np.isfinite(v.imag))):
                raise ProblemValidationError("grid potential samples must be finite")
            x.flags.writeable = False
            v.flags.writeable = False
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "values", v)
            return
        raise ProblemValidationError(f"unknown potential kind {self.kind!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "Potential":
        return cls(kind="zero")

    @classmethod
    def gaussian_bump(cls, center: float, width: float, amplitude) -> "Potential":
        return cls(kind="gaussian_bump", center=float(center), width=float(width),
                   amplitude=_as_complex(amplitude))

    @classmethod
    def grid(cls, x, values) -> "Potential":
        return cls(kind="grid", x=np.asarray(x, float), values=np.asarray(values, complex))

    # -- evaluation ---------------------------------------------------------

    def eval(self, x) -> np.ndarray:
        """q(x) for scalar or array x; exact zero outside the support."""
        xs = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros(xs.shape, dtype=complex)
        elif self.kind == "gaussian_bump":
            u = (xs - self.center) / self.width
            out = np.where(np.abs(u) <= BUMP_CUTOFF_WIDTHS,
                           self.amplitude * np.exp(-np.square(u)), 0.0 + 0.0j)
        else:
            gx, gv = self.x, self.values
            re = np.interp(xs, gx, gv.real, left=0.0, right=0.0)
            im = np.interp(xs, gx, gv.imag, left=0.0, right=0.0)
            out = re + 1j * im
            out = np.where((xs < gx[0]) | (xs > gx[-1]), 0.0 + 0.0j, out)
        return out if out.ndim else complex(out)

    # -- support ------------------------------------------------------------

    def support_bounds(self) -> tuple[float, float] | None:
        """Closed interval outside which q vanishes identically, or None."""
        if self.kind == "zero":
            return None
        if self.kind == "gaussian_bump":
            r = BUMP_CUTOFF_WIDTHS * self.width
            return (self.center - r, self.center + r)
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return None
        lo = self.x[max(nz[0] - 1, 0)]
        hi = self.x[min(nz[-1] + 1, self.x.size - 1)]
        return (float(lo), float(hi))

    def is_zero_on(self, lo: float, hi: float) -> bool:
        """True when q vanishes identically on [lo, hi] (exact, not sampled)."""
        if lo > hi:
            return True
        b = self.support_bounds()
        return b is None or hi < b[0] or lo > b[1]


# ---------------------------------------------------------------------------
# the assembled problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularProblem:
    """Operator data: singular point a, exponent nu, matrix A, bound T, q."""

    a: float
    nu: complex
    A: TransitionMatrix
    T: float
    q: Potential = field(default_factory=Potential.zero)

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ProblemValidationError(f"a must be positive and finite, got {self.a!r}")
        nu = complex(self.nu)
        _require_finite("nu", nu)
        if nu.real <= 0.0:
            raise ProblemValidationError(f"need Re nu > 0, got nu = {nu!r}")
        if abs(cmath.sin(cmath.pi * nu)) < NEAR_INTEGER_TOL:
            raise NearIntegerNu(f"nu = {nu!r} is within tolerance of a positive integer")
        if not (math.isfinite(self.T) and self.T > self.a):
            raise ProblemValidationError(f"T must be finite and exceed a = {self.a}, got {self.T!r}")
        object.__setattr__(self, "nu", nu)

    @property
    def nu0(self) -> complex:
        return self.nu * self.nu - 0.25

    @property
    def mu1(self) -> complex:
        return 0.5 - self.nu

    @property
    def mu2(self) -> complex:
        return 0.5 + self.nu

    def xi(self) -> XiMatrix:
        return compute_xi(self.A, self.nu)

    def regime(self) -> RegimeReport:
        return classify_regime(self.xi())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        q: dict
        if self.q.kind == "zero":
            q = {"type": "zero"}
        elif self.q.kind == "gaussian_bump":
            q = {
                "type": "gaussian_bump",
                "center": self.q.center,
                "width": self.q.width,
                "amplitude_re": self.q.amplitude.real,
                "amplitude_im": self.q.amplitude.imag,
            }
        else:
            q = {
                "type": "grid",
                "x": [float(v) for v in self.q.x],
                "re": [float(v) for v in self.q.values.real],
                "im": [float(v) for v in self.q.values.imag],
            }
        return {
            "a": self.a,
            "nu": _pair(self.nu),
            "A": [_pair(self.A.a11), _pair(self.A.a12), _pair(self.A.a21), _pair(self.A.a22)],
            "T": self.T,
            "q": q,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SingularProblem":
        try:
            qd = data["q"]
            kind = qd["type"]
            if kind == "zero":
                q = Potential.zero()
            elif kind == "gaussian_bump":
                q = Potential.gaussian_bump(
                    qd["center"], qd["width"], complex(qd["amplitude_re"], qd["amplitude_im"])
                )
            elif kind == "grid":
                q = Potential.grid(qd["x"], np.asarray(qd["re"], float) + 1j * np.asarray(qd["im"], float))
            else:
                raise ProblemValidationError(f"unknown potential type {kind!r}")
            return cls(
                a=float(data["a"]),
                nu=_as_complex(data["nu"]),
                A=TransitionMatrix.from_flat(data["A"]),
                T=float(data["T"]),
                q=q,
            )
        except KeyError as exc:
            raise ProblemValidationError(f"problem definition missing key {exc}") from None


def eta(x, problem: SingularProblem):
    """The piecewise weight: 1 left of the singular point, det A right of it."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs == problem.a):
        raise AtSingularity(f"eta undefined at x = a = {problem.a}")
    out = np.where(xs > problem.a, problem.A.det, 1.0 + 0.0j)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# potential-class check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WReport:
    """Refinement study of the weighted integrability of q.

    ``weighted`` holds the three nested-mesh values of
    int_0^T |q| |x-a|^kappa dx with kappa = min(0, 1 - 2 Re nu);
    ``tail`` is int_T^sup |q| dx.  The verdict passes when the weighted
    values are Cauchy within 1%.
    """

    passed: bool
    kappa: float
    weighted: tuple[float, float, float]
    tail: float
    detail: str


def _graded_mesh(a: float, T: float, eps: float, per_octave: int, n_uniform: int) -> np.ndarray:
    """[0, T] mesh, geometrically refined into a from both sides down to eps*a."""
    pts = [np.linspace(0.0, T, n_uniform)]
    w = a / 2.0
    lo_cap = eps * a
    while w > lo_cap:
        w_next = max(w / 2.0, lo_cap)
        band = np.linspace(w_next, w, per_octave + 1)
        pts.append(a - band)
        pts.append(a + band)
        w = w_next
    mesh = np.unique(np.concatenate(pts))
    return mesh[(mesh >= 0.0) & (mesh <= T)]


def check_class_W(
    problem: SingularProblem,
    q_eval: Callable[[np.ndarray], np.ndarray] | None = None,
    strict: bool = False,
) -> WReport:
    """Verify the weighted integrability of q by a nested-mesh refinement study.

    ``q_eval`` overrides the potential's evaluator (used to probe genuinely
    singular model potentials).  With ``strict=True`` a failed verdict raises
    NonIntegrable instead of returning.
    """
    a, T = problem.a, problem.T
    kappa = min(0.0, 1.0 - 2.0 * problem.nu.real)
    qf = q_eval if q_eval is not None else problem.q.eval

    values = []
    for level in range(3):
        eps = 10.0 ** (-4 - 2 * level)
        mesh = _graded_mesh(a, T, eps, per_octave=4 * 2**level, n_uniform=401 * 2**level)
        mesh = mesh[np.abs(mesh - a) >= eps * a * 0.5]
        qv = np.abs(np.asarray(qf(mesh), dtype=complex))
        weight = np.abs(mesh - a) ** kappa if kappa != 0.0 else np.ones_like(mesh)
        values.append(float(np.trapezoid(qv * weight, mesh)))

    # tail beyond T, bounded by the (compact) support
    b = problem.q.support_bounds() if q_eval is None else None
    if q_eval is None and (b is None or b[1] <= T):
        tail = 0.0
    else:
        hi = b[1] if (q_eval is None and b is not None) else T + 10.0 * a
        xs = np.linspace(T, max(hi, T + 1e-9), 2001)
        tail = float(np.trapezoid(np.abs(np.asarray(qf(xs), dtype=complex)), xs))

    v0, v1, v2 = values
    scale = max(abs(v2), 1e-300)
    cauchy = abs(v2 - v1) <= 0.01 * scale
    if cauchy:
        report = WReport(True, kappa, (v0, v1, v2), tail, "Cauchy within 1% under refinement")
    else:
        report = WReport(
            False, kappa, (v0, v1, v2), tail,
            f"refinement not Cauchy: {v0:.6g} -> {v1:.6g} -> {v2:.6g}",
        )
        if strict:
            raise NonIntegrable(report.detail)
    return report
