"""Local fundamental solutions near the interior singularity.

Everything here is radial.  With ``w = |x - a|`` the free equation has the
Frobenius pair

    P_j(w, lam) = w**mu_j * G_j(lam * w**2),    G_j(u) = sum_k c_jk u**k,

with exponents ``mu_1 = 1/2 - nu``, ``mu_2 = 1/2 + nu`` and a two-term
recursion for the coefficients.  The normalization ``c_10 = c_20 =
(2 nu)**(-1/2)`` makes the pair have unit Wronskian.  A potential adds a
Volterra correction

    T_j(w) = P_j(w) + int_0^w [P_1(t) P_2(w) - P_1(w) P_2(t)] q_s(t) T_j(t) dt

with ``q_s(t) = q(a +/- t)``, solved by product integration on a mesh graded
toward ``w = 0`` (the weight ``t**(mu_j + mu_k)`` is integrated exactly
against a piecewise parabola).  Past the series trust region the pair is
continued as an ODE.  Values on the left half-line pick up the reflection
phases ``exp(i pi mu_j)`` coming from ``(x - a)**mu_j`` with
``arg(x - a) = pi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp
from scipy.special import gamma as _cgamma
from scipy.special import jv as _jv

from .errors import (
    AtSingularity,
    DegenerateRecursion,
    IterationDiverged,
    NumericalFailure,
    SeriesNotConverged,
)
from .problem import branch_power

K_MAX = 60
TRUST_RADIUS = 6.0
TAIL_TOL = 1e-13
VOLTERRA_TOL = 1e-12
VOLTERRA_MAX_ITER = 80
MIN_OFFSET_FACTOR = 1e-8
RK_RTOL = 1e-10
RK_ATOL = 1e-12


@dataclass(frozen=True)
class SeriesCoefficients:
    """Frobenius data for one value of nu: exponents and coefficient rows."""

    nu: complex
    mu1: complex
    mu2: complex
    c1: np.ndarray
    c2: np.ndarray

    def coeff(self, j):
        if j == 1:
            return self.c1
        if j == 2:
            return self.c2
        raise ValueError("solution index must be 1 or 2")

    def mu(self, j):
        if j == 1:
            return self.mu1
        if j == 2:
            return self.mu2
        raise ValueError("solution index must be 1 or 2")


def build_coefficients(nu, k_max=K_MAX):
    """Run the coefficient recursion for both exponents.

    The denominator at step ``k`` is ``(2k + mu_j)(2k + mu_j - 1) - nu0``,
    which collapses only when nu approaches a nonzero integer; that raises
    ``DegenerateRecursion``.
    """
    nu = complex(nu)
    nu0 = nu * nu - 0.25
    mus = (0.5 - nu, 0.5 + nu)
    c0 = branch_power(2.0 * nu, -0.5)
    rows = []
    for m in mus:
        c = np.zeros(k_max + 1, dtype=complex)
        c[0] = c0
        for k in range(1, k_max + 1):
            den = (2.0 * k + m) * (2.0 * k + m - 1.0) - nu0
            if abs(den) < 1e-10:
                raise DegenerateRecursion(
                    f"coefficient denominator {den:.3e} at k={k}, nu={nu}"
                )
            c[k] = -c[k - 1] / den
        rows.append(c)
    return SeriesCoefficients(nu=nu, mu1=mus[0], mu2=mus[1], c1=rows[0], c2=rows[1])


def _as_radial(w):
    w = np.asarray(w, dtype=float)
    scalar = w.ndim == 0
    return np.atleast_1d(w), scalar


def series_profile(coeffs, j, w, lam, check=True):
    """P_j and dP_j/dw from the truncated power series, for ``w > 0``.

    The series is entire in ``u = lam w**2`` but loses digits to
    cancellation once ``|rho w|`` exceeds TRUST_RADIUS; with ``check`` the
    trust region and the geometric tail bound are enforced and violations
    raise ``SeriesNotConverged``.
    """
    w, scalar = _as_radial(w)
    lam = complex(lam)
    u = lam * w * w
    c = coeffs.coeff(j)
    if check and u.size:
        umax = float(np.max(np.abs(u)))
        if umax > TRUST_RADIUS**2 * (1.0 + 1e-9):
            raise SeriesNotConverged(
                f"|rho w| = {np.sqrt(umax):.3f} outside series trust radius "
                f"{TRUST_RADIUS}"
            )
        tail = 2.0 * abs(c[-1]) * umax ** (len(c) - 1)
        if tail > TAIL_TOL * max(1.0, abs(c[0])):
            raise SeriesNotConverged(f"series tail bound {tail:.3e} too large")
    g = npoly.polyval(u, c)
    gp = npoly.polyval(u, c[1:] * np.arange(1, len(c)))
    m = coeffs.mu(j)
    p = w**m * g
    dp = w ** (m - 1.0) * (m * g + 2.0 * u * gp)
    if scalar:
        return complex(p[0]), complex(dp[0])
    return p, dp


def _besselj(order, z):
    """J_order(z) for complex z; mpmath handles genuinely complex orders."""
    z = np.asarray(z, dtype=complex)
    order = complex(order)
    if order.imag == 0.0:
        return _jv(order.real, z)
    flat = np.atleast_1d(z).ravel()
    vals = np.array([complex(mpmath.besselj(order, complex(t))) for t in flat])
    return vals.reshape(z.shape)


def bridge_constants(coeffs, rho):
    """Prefactors gamma_1, gamma_2 tying the profiles to Bessel functions.

    P_1 = gamma_1 sqrt(w) J_{-nu}(rho w) and P_2 = gamma_2 sqrt(w)
    J_{nu}(rho w), with the power (rho/2)**(+/-nu) on the fixed branch.
    """
    nu = coeffs.nu
    g1 = coeffs.c1[0] * _cgamma(1.0 - nu) * branch_power(rho / 2.0, nu)
    g2 = coeffs.c2[0] * _cgamma(1.0 + nu) * branch_power(rho / 2.0, -nu)
    return complex(g1), complex(g2)


def bessel_profile(coeffs, j, w, rho):
    """P_j and dP_j/dw via the Bessel representation, stable at large |rho w|."""
    w, scalar = _as_radial(w)
    rho = complex(rho)
    if rho == 0.0:
        raise ValueError("Bessel representation needs rho != 0")
    nu = coeffs.nu
    order = -nu if j == 1 else nu
    gam = bridge_constants(coeffs, rho)[j - 1]
    z = rho * w
    jj = _besselj(order, z)
    jm = _besselj(order - 1.0, z)
    sq = np.sqrt(w)
    p = gam * sq * jj
    dp = gam * (jj / (2.0 * sq) + sq * (rho * jm - (order / w) * jj))
    if scalar:
        return complex(p[0]), complex(dp[0])
    return p, dp


def profile(coeffs, w, lam, rho):
    """Both profiles and derivatives, choosing series or Bessel per point.

    Returns ``(P_1, dP_1, P_2, dP_2)`` as arrays over ``w``.
    """
    w, scalar = _as_radial(w)
    out = [np.empty(w.shape, dtype=complex) for _ in range(4)]
    near = np.abs(rho) * w <= TRUST_RADIUS
    for j in (1, 2):
        if near.any():
            p, dp = series_profile(coeffs, j, w[near], lam)
            out[2 * j - 2][near] = p
            out[2 * j - 1][near] = dp
        if (~near).any():
            p, dp = bessel_profile(coeffs, j, w[~near], rho)
            out[2 * j - 2][~near] = p
            out[2 * j - 1][~near] = dp
    if scalar:
        return tuple(complex(o[0]) for o in out)
    return tuple(out)


def profile_at(coeffs, w, lams, rhos):
    """Both profiles at one radial offset, vectorized over spectral points.

    ``lams`` and ``rhos`` must be matching arrays with ``rhos**2 == lams``
    on the fixed branch.  Returns ``(P_1, dP_1, P_2, dP_2)`` over the
    spectral axis, series inside the trust region and Bessel outside.
    """
    w = float(w)
    if w <= 0.0:
        raise AtSingularity("radial offset must be positive")
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    out = [np.empty(lams.shape, dtype=complex) for _ in range(4)]
    near = np.abs(rhos) * w <= TRUST_RADIUS
    if near.any():
        u = lams[near] * w * w
        for j in (1, 2):
            c = coeffs.coeff(j)
            g = npoly.polyval(u, c)
            gp = npoly.polyval(u, c[1:] * np.arange(1, len(c)))
            m = coeffs.mu(j)
            out[2 * j - 2][near] = w**m * g
            out[2 * j - 1][near] = w ** (m - 1.0) * (m * g + 2.0 * u * gp)
    if (~near).any():
        rf = rhos[~near]
        sq = np.sqrt(w)
        nu = coeffs.nu
        for j in (1, 2):
            order = -nu if j == 1 else nu
            gam = (coeffs.coeff(j)[0]
                   * _cgamma(1.0 + (-1.0 if j == 1 else 1.0) * nu)
                   * branch_power(rf / 2.0, (1.0 if j == 1 else -1.0) * nu))
            z = rf * w
            jj = _besselj(order, z)
            jm = _besselj(order - 1.0, z)
            out[2 * j - 2][~near] = gam * sq * jj
            out[2 * j - 1][~near] = gam * (jj / (2.0 * sq)
                                           + sq * (rf * jm - (order / w) * jj))
    return tuple(out)


def eval_C(j, x, sp, coeffs, a):
    """C_j(x, lam) and its x-derivative by the power series about x = a.

    Left of the singular point the branch ``(x - a)**mu_j`` with
    ``arg(x - a) = pi`` turns into the phase ``exp(i pi mu_j)`` on the
    radial profile, and the chain rule flips the derivative sign.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa == a):
        raise AtSingularity("series solutions are not defined at x = a")
    w = np.abs(xa - a)
    p, dp = series_profile(coeffs, j, w, sp.lam)
    ph = np.exp(1j * np.pi * coeffs.mu(j))
    left = xa < a
    val = np.where(left, ph * p, p)
    der = np.where(left, -ph * dp, dp)
    if scalar:
        return complex(val[0]), complex(der[0])
    return val, der


def _free_radius(q, a, side):
    """Largest w with q vanishing on the open segment between a and a +/- w."""
    bounds = q.support_bounds()
    if bounds is None:
        return np.inf
    lo, hi = bounds
    if side == "+":
        return np.inf if hi <= a else max(0.0, lo - a)
    return np.inf if lo >= a else max(0.0, a - hi)


def _potential_scale(q):
    if q.kind == "gaussian_bump":
        return float(q.width)
    if q.kind == "grid":
        d = np.diff(np.asarray(q.x, dtype=float))
        d = d[d > 0]
        return float(d.min()) if d.size else np.inf
    return np.inf


def _side_sign(side):
    if side == "+":
        return 1.0
    if side == "-":
        return -1.0
    raise ValueError("side must be '+' or '-'")


def _pair_mesh(w_top, w_floor, dw):
    """Cell boundaries graded geometrically toward 0, plus interleaved midpoints."""
    desc = [w_top]
    hi = w_top
    while hi > 2.0 * w_floor:
        lo = max(hi / 2.0, w_floor)
        n = int(np.clip(np.ceil((hi - lo) / dw), 8, 1024))
        seg = np.linspace(lo, hi, n + 1)
        desc.extend(seg[-2::-1])
        hi = lo
    desc.append(0.0)
    b = np.asarray(desc[::-1], dtype=float)
    mesh = np.empty(2 * b.size - 1, dtype=float)
    mesh[0::2] = b
    mesh[1::2] = 0.5 * (b[:-1] + b[1:])
    return b, mesh


def _cell_quadratic(s0, s1, s2, f0, f1, f2):
    """Monomial coefficients of the parabola through three nodes of one cell."""
    l0 = f0 / ((s0 - s1) * (s0 - s2))
    l1 = f1 / ((s1 - s0) * (s1 - s2))
    l2 = f2 / ((s2 - s0) * (s2 - s1))
    b2 = l0 + l1 + l2
    b1 = -(l0 * (s1 + s2) + l1 * (s0 + s2) + l2 * (s0 + s1))
    b0 = l0 * s1 * s2 + l1 * s0 * s2 + l2 * s0 * s1
    return b0, b1, b2


class _RadialVolterra:
    """Product-integration solve of the radial Volterra equation on one side.

    Holds the converged regular profiles T_j / w**mu_j on a graded mesh
    together with the cumulative weighted integrals needed to evaluate
    T_j and its derivative anywhere inside the solved range.
    """

    def __init__(self, problem, sp, side, w_top, coeffs):
        self.coeffs = coeffs
        self.lam = sp.lam
        a = problem.a
        sgn = _side_sign(side)

        dw = min(
            w_top / 128.0,
            _potential_scale(problem.q) / 8.0,
            1.0 / (12.0 * max(abs(sp.rho), 1.0)),
        )
        w_floor = MIN_OFFSET_FACTOR * a
        if w_floor >= w_top / 4.0:
            w_floor = w_top / 4.0
        self.b, self.mesh = _pair_mesh(w_top, w_floor, dw)
        mesh = self.mesh

        self.qm = np.asarray(problem.q.eval(a + sgn * mesh), dtype=complex)
        u = self.lam * mesh * mesh
        self.ghat = {
            j: npoly.polyval(u, coeffs.coeff(j)) for j in (1, 2)
        }

        mu1, mu2 = coeffs.mu1, coeffs.mu2
        self.alpha = {(1, 1): 2.0 * mu1, (1, 2): mu1 + mu2,
                      (2, 1): mu1 + mu2, (2, 2): 2.0 * mu2}
        worst = min((al + 1.0).real for al in self.alpha.values())
        if worst <= 0.05:
            raise NumericalFailure(
                "potential active at the singularity with Re nu this large "
                "is outside the quadrature's regularity range"
            )
        self.pw = {}
        for al in set(self.alpha.values()):
            rows = []
            for m in (1, 2, 3):
                with np.errstate(divide="ignore", invalid="ignore"):
                    r = mesh ** (al + m)
                r[0] = 0.0
                rows.append(r)
            self.pw[al] = rows

        with np.errstate(divide="ignore", invalid="ignore"):
            p2nu = mesh ** (2.0 * coeffs.nu)
            m2nu = mesh ** (-2.0 * coeffs.nu)
        p2nu[0] = 0.0
        m2nu[0] = 0.0
        self._wfac = {1: (p2nu, np.ones_like(p2nu)), 2: (np.ones_like(p2nu), m2nu)}

        self.icum = {}
        self.gfin = {}
        self._iterate()

    def _cumulative(self, al, g):
        """Weighted integrals of the piecewise parabola through g, per point."""
        b = self.b
        pw = self.pw[al]
        s0, s1, s2 = b[:-1], self.mesh[1::2], b[1:]
        f0, f1, f2 = g[0:-2:2], g[1::2], g[2::2]
        b0, b1, b2 = _cell_quadratic(s0, s1, s2, f0, f1, f2)
        full = np.zeros(s0.size, dtype=complex)
        half = np.zeros(s0.size, dtype=complex)
        for m, bm in enumerate((b0, b1, b2)):
            lowp = pw[m][0:-2:2]
            den = al + m + 1.0
            full += bm * (pw[m][2::2] - lowp) / den
            half += bm * (pw[m][1::2] - lowp) / den
        cum = np.concatenate(([0.0 + 0.0j], np.cumsum(full)))
        imesh = np.empty(self.mesh.size, dtype=complex)
        imesh[0::2] = cum
        imesh[1::2] = cum[:-1] + half
        return imesh, cum

    def _iterate(self):
        that = {j: self.ghat[j].copy() for j in (1, 2)}
        scale0 = max(np.max(np.abs(that[1])), np.max(np.abs(that[2])), 1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(VOLTERRA_MAX_ITER):
                delta = 0.0
                for j in (1, 2):
                    g1 = self.ghat[1] * self.qm * that[j]
                    g2 = self.ghat[2] * self.qm * that[j]
                    i1, c1 = self._cumulative(self.alpha[(1, j)], g1)
                    i2, c2 = self._cumulative(self.alpha[(2, j)], g2)
                    w2, w1 = self._wfac[j]
                    new = (
                        self.ghat[j]
                        + self.ghat[2] * i1 * w2
                        - self.ghat[1] * i2 * w1
                    )
                    delta = max(delta, float(np.max(np.abs(new - that[j]))))
                    that[j] = new
                    self.gfin[(1, j)] = g1
                    self.gfin[(2, j)] = g2
                    self.icum[(1, j)] = c1
                    self.icum[(2, j)] = c2
                scale = max(
                    np.max(np.abs(that[1])), np.max(np.abs(that[2])), 1.0
                )
                if not np.isfinite(delta) or delta > 1e12 * scale0:
                    raise IterationDiverged(
                        "successive approximations for the radial Volterra "
                        "equation are blowing up"
                    )
                if delta <= VOLTERRA_TOL * scale:
                    return
        raise IterationDiverged(
            f"no convergence in {VOLTERRA_MAX_ITER} Volterra iterations"
        )

    def _partial(self, k, j, w, idx):
        """Cumulative weighted integral I_kj up to arbitrary points w."""
        al = self.alpha[(k, j)]
        g = self.gfin[(k, j)]
        s0, s1, s2 = self.b[idx], self.mesh[2 * idx + 1], self.b[idx + 1]
        f0, f1, f2 = g[2 * idx], g[2 * idx + 1], g[2 * idx + 2]
        b0, b1, b2 = _cell_quadratic(s0, s1, s2, f0, f1, f2)
        out = self.icum[(k, j)][idx].astype(complex)
        for m, bm in enumerate((b0, b1, b2)):
            lowp = self.pw[al][m][2 * idx]
            out += bm * (w ** (al + m + 1.0) - lowp) / (al + m + 1.0)
        return out

    def eval(self, w):
        """T_1, dT_1, T_2, dT_2 at radial offsets inside the solved range."""
        w = np.asarray(w, dtype=float)
        idx = np.clip(np.searchsorted(self.b, w, side="right") - 1, 0,
                      self.b.size - 2)
        p1, dp1 = series_profile(self.coeffs, 1, w, self.lam)
        p2, dp2 = series_profile(self.coeffs, 2, w, self.lam)
        out = []
        for j, (pj, dpj) in ((1, (p1, dp1)), (2, (p2, dp2))):
            i1 = self._partial(1, j, w, idx)
            i2 = self._partial(2, j, w, idx)
            out.append(pj + p2 * i1 - p1 * i2)
            out.append(dpj + dp2 * i1 - dp1 * i2)
        return tuple(out)


def _continue_ode(problem, side, lam, w0, y0, w1):
    """Continue (T_1, T_1', T_2, T_2') past the series region as an ODE."""
    a = problem.a
    sgn = _side_sign(side)
    nu0 = problem.nu0
    q = problem.q

    def rhs(t, y):
        f = nu0 / (t * t) + complex(q.eval(a + sgn * t)) - lam
        return np.array([y[1], f * y[0], y[3], f * y[2]])

    sol = solve_ivp(rhs, (w0, w1), np.asarray(y0, dtype=complex),
                    method="DOP853", rtol=RK_RTOL, atol=RK_ATOL,
                    dense_output=True)
    if not sol.success:
        raise NumericalFailure(f"radial continuation failed: {sol.message}")
    return sol


def radial_values(problem, sp, side, w, coeffs=None):
    """Radial pair T_1, T_2 with w-derivatives on one side, q included.

    Dispatch: closed form wherever the potential vanishes between the
    singularity and the requested offsets, product-integration Volterra
    inside the series trust region otherwise, ODE continuation beyond it.
    Returns ``(T_1, dT_1, T_2, dT_2)``.
    """
    w, scalar = _as_radial(w)
    if np.any(w <= 0.0):
        raise AtSingularity("radial offsets must be positive")
    if side == "-" and np.any(w > problem.a * (1.0 + 1e-12)):
        raise ValueError("left-side offsets cannot exceed the singular point")
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    lam, rho = sp.lam, sp.rho

    wmax = float(np.max(w))
    wfree = _free_radius(problem.q, problem.a, side)
    if wfree >= wmax:
        vals = profile(coeffs, w, lam, rho)
        return tuple(complex(v[0]) for v in vals) if scalar else vals

    absr = abs(rho)
    wser = np.inf if absr == 0.0 else TRUST_RADIUS / absr
    wv = min(wser, wmax)
    out = [np.empty(w.shape, dtype=complex) for _ in range(4)]
    low = w <= wv * (1.0 + 1e-12)

    if wfree >= wv:
        if low.any():
            vals = profile(coeffs, w[low], lam, rho)
            for o, v in zip(out, vals):
                o[low] = v
        y0 = np.asarray(profile(coeffs, wv, lam, rho), dtype=complex)
    else:
        solver = _RadialVolterra(problem, sp, side, wv, coeffs)
        if low.any():
            vals = solver.eval(w[low])
            for o, v in zip(out, vals):
                o[low] = v
        y0 = np.asarray(solver.eval(np.array([wv])), dtype=complex).ravel()

    if (~low).any():
        sol = _continue_ode(problem, side, lam, wv, y0, wmax)
        hi = sol.sol(w[~low])
        for i, o in enumerate(out):
            o[~low] = hi[i]
    return tuple(complex(o[0]) for o in out) if scalar else tuple(out)


def fundamental_pair(problem, sp, x, coeffs=None):
    """s_1, s_2 and x-derivatives at points on either side of the singularity.

    On the right the pair equals the radial one; on the left it carries the
    reflection phases and the chain-rule sign on derivatives.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0.0):
        raise ValueError("points must lie in the half-line x >= 0")
    if np.any(xa == problem.a):
        raise AtSingularity("local solutions are not defined at x = a")
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    out = [np.empty(xa.shape, dtype=complex) for _ in range(4)]
    for side, mask in (("-", xa < problem.a), ("+", xa > problem.a)):
        if not mask.any():
            continue
        wm = np.abs(xa[mask] - problem.a)
        t1, dt1, t2, dt2 = radial_values(problem, sp, side, wm, coeffs=coeffs)
        if side == "+":
            vals = (t1, dt1, t2, dt2)
        else:
            ph1 = np.exp(1j * np.pi * coeffs.mu1)
            ph2 = np.exp(1j * np.pi * coeffs.mu2)
            vals = (ph1 * t1, -ph1 * dt1, ph2 * t2, -ph2 * dt2)
        for o, v in zip(out, vals):
            o[mask] = v
    if scalar:
        return tuple(complex(o[0]) for o in out)
    return tuple(out)


def sigma_pair(problem, sp, x, coeffs=None):
    """sigma_1, sigma_2 and x-derivatives: the pair glued across x = a by A.

    Left of the singularity sigma_j is s_j; on the right the transition
    matrix acts by (sigma_1, sigma_2) = (s_1, s_2) A.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    s1, ds1, s2, ds2 = fundamental_pair(problem, sp, xa, coeffs=coeffs)
    A = problem.A
    right = xa > problem.a
    sig1 = np.where(right, A.a11 * s1 + A.a21 * s2, s1)
    dsig1 = np.where(right, A.a11 * ds1 + A.a21 * ds2, ds1)
    sig2 = np.where(right, A.a12 * s1 + A.a22 * s2, s2)
    dsig2 = np.where(right, A.a12 * ds1 + A.a22 * ds2, ds2)
    if scalar:
        return (complex(sig1[0]), complex(dsig1[0]),
                complex(sig2[0]), complex(dsig2[0]))
    return sig1, dsig1, sig2, dsig2


@dataclass(frozen=True)
class LocalSolution:
    """One fundamental solution sampled along a half-neighbourhood side."""

    j: int
    side: str
    x: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray


def solve_s(j, side, sp, problem, x=None, n=64):
    """Sample s_j on one side of the singularity.

    Without an explicit grid the points are geometrically spaced offsets
    between ``1e-6 a`` and nearly the full extent of the side (the interval
    (0, a) on the left, (a, T) on the right).
    """
    if j not in (1, 2):
        raise ValueError("solution index must be 1 or 2")
    sgn = _side_sign(side)
    a = problem.a
    if x is None:
        span = (problem.T - a) if side == "+" else a
        offs = np.geomspace(1e-6 * a, 0.999 * span, n)
        x = a + sgn * offs
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if side == "+" and np.any(x <= a):
        raise ValueError("right-side grid must satisfy x > a")
    if side == "-" and np.any((x >= a) | (x < 0.0)):
        raise ValueError("left-side grid must satisfy 0 <= x < a")
    vals = fundamental_pair(problem, sp, x)
    return LocalSolution(j=j, side=side, x=x, values=vals[2 * j - 2],
                         derivatives=vals[2 * j - 1])


def sigma(j, x, sp, problem):
    """sigma_j and its x-derivative at the given points."""
    if j not in (1, 2):
        raise ValueError("solution index must be 1 or 2")
    vals = sigma_pair(problem, sp, x)
    return vals[2 * j - 2], vals[2 * j - 1]
