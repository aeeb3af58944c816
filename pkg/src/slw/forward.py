"""Jost solution, characteristic function, Weyl function, and spectrum.

The Jost solution is normalized by ``e(x, rho) exp(-i rho x) -> 1`` at
infinity.  Beyond the potential's support the free equation is solved
exactly by a Hankel function of the first kind, so the tail values there
are closed form; from the support's outer edge the pair ``(e, e')`` is
integrated backward, batched across all requested rho as one ODE system,
and projected onto the local basis ``(s_1, s_2)`` at a point close enough
to the singularity for the series machinery.  Crossing ``x = a`` uses the
sigma-basis transport, never integration through the singular point.

Everything spectral hangs off ``Delta(rho) = e(0, rho)``: the Weyl
function is ``M = e'(0, rho) / Delta(rho)``, eigenvalues are the zeros of
Delta in the open upper half-plane, localized from the asymptotic seeds
``(pi/a)(k + theta_+-)`` and certified by argument-principle counts.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import hankel1 as _h1

from .errors import (
    AtSpectrum,
    CountMismatch,
    NearZeroRho,
    NumericalFailure,
    SeedDiverged,
    UnsupportedRegime,
)
from .problem import branch_power, classify_regime, eta, lift_lambda
from .series import (
    TRUST_RADIUS,
    _free_radius,
    build_coefficients,
    fundamental_pair,
    profile_at,
    radial_values,
)

NEAR_ZERO_RHO = 1e-8
AT_SPECTRUM_REL = 1e-8
PROJECTION_TARGET = 3.0
NEWTON_MAX_ITER = 30
NEWTON_RHO_STEP = 1e-6
NEWTON_STOP = 1e-10
WINDING_TOL = 0.05
JOST_RTOL = 1e-10
JOST_ATOL = 1e-12


def _hankel1(order, z):
    """H^(1)_order(z) for complex z; mpmath handles complex orders."""
    z = np.asarray(z, dtype=complex)
    order = complex(order)
    if order.imag == 0.0:
        return _h1(order.real, z)
    flat = np.atleast_1d(z).ravel()
    vals = np.array([complex(mpmath.hankel1(order, complex(t))) for t in flat])
    return vals.reshape(z.shape)


def _tail_values(problem, rhos, x):
    """Exact free-tail Jost values (e, e') at a point right of the support.

    For q = 0 on (x0, inf) the normalized solution is
    sqrt(pi rho (x-a)/2) exp(i(nu pi/2 + pi/4)) exp(i rho a)
    H^(1)_nu(rho (x-a)).
    """
    rhos = np.asarray(rhos, dtype=complex)
    nu = problem.nu
    a = problem.a
    w = x - a
    if w <= 0.0:
        raise ValueError("tail point must lie right of the singularity")
    pref = (np.sqrt(np.pi / 2.0) * branch_power(rhos, 0.5)
            * np.exp(1j * (nu * np.pi / 2.0 + np.pi / 4.0))
            * np.exp(1j * rhos * a))
    z = rhos * w
    h = _hankel1(nu, z)
    hm = _hankel1(nu - 1.0, z)
    sq = np.sqrt(w)
    e = pref * sq * h
    ep = pref * (h / (2.0 * sq) + sq * (rhos * hm - (nu / w) * h))
    return e, ep


def _tail_alpha(problem, rhos, coeffs):
    """Local-basis coefficients of the free tail: e = alpha_1 s_1 + alpha_2 s_2.

    Valid whenever q = 0 on all of (a, inf).  Derived from the expansion of
    the Hankel function in J_{+-nu} and the series bridge constants.
    """
    rhos = np.asarray(rhos, dtype=complex)
    nu = coeffs.nu
    sinp = cmath.sin(cmath.pi * nu)
    kappa = (np.sqrt(np.pi / 2.0) * branch_power(rhos, 0.5)
             * np.exp(1j * (nu * np.pi / 2.0 + np.pi / 4.0))
             * np.exp(1j * rhos * problem.a) / (1j * sinp))
    g1 = coeffs.c1[0] * complex(_cgamma_one_minus(nu)) * branch_power(rhos / 2.0, nu)
    g2 = coeffs.c2[0] * complex(_cgamma_one_plus(nu)) * branch_power(rhos / 2.0, -nu)
    alpha1 = kappa / g1
    alpha2 = -kappa * np.exp(-1j * np.pi * nu) / g2
    return alpha1, alpha2


def _cgamma_one_minus(nu):
    from scipy.special import gamma
    return gamma(1.0 - nu)


def _cgamma_one_plus(nu):
    from scipy.special import gamma
    return gamma(1.0 + nu)


def _support_end(problem):
    bounds = problem.q.support_bounds()
    if bounds is None:
        return problem.a
    return max(problem.a, float(bounds[1]))


def _right_pair_at(problem, lams, rhos, w_plus, coeffs):
    """(s_1, s_1', s_2, s_2') at a + w_plus for a batch of spectral points."""
    if _free_radius(problem.q, problem.a, "+") >= w_plus:
        return profile_at(coeffs, w_plus, lams, rhos)
    cols = []
    for lam, rho in zip(lams, rhos):
        sp = _SpectralPair(lam=complex(lam), rho=complex(rho))
        cols.append(radial_values(problem, sp, "+", np.array([w_plus]),
                                  coeffs=coeffs))
    arr = np.asarray(cols, dtype=complex)[:, :, 0]
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


@dataclass(frozen=True)
class _SpectralPair:
    """Duck-typed spectral point for internal batched loops."""

    lam: complex
    rho: complex


def jost_alpha(problem, rhos, coeffs=None):
    """Coefficients (alpha_1, alpha_2) of e in the right-side s-basis.

    Batched over rho: one backward integration of the stacked system from
    the support's outer edge down to a common projection point x_+ with
    |rho_max (x_+ - a)| about 3, then Wronskian projection.
    """
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    if np.any(np.abs(rhos) < NEAR_ZERO_RHO):
        raise NearZeroRho("Jost normalization degenerates as rho -> 0")
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    x_sup = _support_end(problem)
    if x_sup <= problem.a:
        return _tail_alpha(problem, rhos, coeffs)

    lams = rhos * rhos
    rmax = float(np.max(np.abs(rhos)))
    w_plus = min(PROJECTION_TARGET / rmax, 0.9 * (x_sup - problem.a))
    x_plus = problem.a + w_plus

    e_s, ep_s = _tail_values(problem, rhos, x_sup)
    scale = e_s.copy()
    y0 = np.concatenate([np.ones_like(scale), ep_s / scale])

    a = problem.a
    nu0 = problem.nu0
    q = problem.q
    n = rhos.size

    def rhs(x, y):
        f = nu0 / (x - a) ** 2 + complex(q.eval(x)) - lams
        return np.concatenate([y[n:], f * y[:n]])

    sol = solve_ivp(rhs, (x_sup, x_plus), y0, method="DOP853",
                    rtol=JOST_RTOL, atol=JOST_ATOL)
    if not sol.success:
        raise NumericalFailure(f"backward Jost integration failed: {sol.message}")
    e_p = sol.y[:n, -1] * scale
    ep_p = sol.y[n:, -1] * scale

    s1, ds1, s2, ds2 = _right_pair_at(problem, lams, rhos, w_plus, coeffs)
    alpha1 = e_p * ds2 - ep_p * s2
    alpha2 = s1 * ep_p - ds1 * e_p
    return alpha1, alpha2


def _sigma_coefficients(problem, alpha1, alpha2):
    """Solve A d = alpha for the global sigma-basis coefficients."""
    A = problem.A
    det = A.det
    d1 = (A.a22 * alpha1 - A.a12 * alpha2) / det
    d2 = (A.a11 * alpha2 - A.a21 * alpha1) / det
    return d1, d2


def _left_boundary(problem, lams, rhos, coeffs):
    """(s_1, s_1', s_2, s_2') at x = 0 for a batch of spectral points."""
    a = problem.a
    if _free_radius(problem.q, a, "-") >= a:
        t1, dt1, t2, dt2 = profile_at(coeffs, a, lams, rhos)
    else:
        cols = []
        for lam, rho in zip(lams, rhos):
            sp = _SpectralPair(lam=complex(lam), rho=complex(rho))
            cols.append(radial_values(problem, sp, "-", np.array([a]),
                                      coeffs=coeffs))
        arr = np.asarray(cols, dtype=complex)[:, :, 0]
        t1, dt1, t2, dt2 = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    ph1 = np.exp(1j * np.pi * coeffs.mu1)
    ph2 = np.exp(1j * np.pi * coeffs.mu2)
    return ph1 * t1, -ph1 * dt1, ph2 * t2, -ph2 * dt2


def characteristic_batch(problem, rhos, coeffs=None):
    """Delta(rho) = e(0, rho) and e'(0, rho) for an array of rho."""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    alpha1, alpha2 = jost_alpha(problem, rhos, coeffs)
    d1, d2 = _sigma_coefficients(problem, alpha1, alpha2)
    lams = rhos * rhos
    s1, ds1, s2, ds2 = _left_boundary(problem, lams, rhos, coeffs)
    delta = d1 * s1 + d2 * s2
    eprime = d1 * ds1 + d2 * ds2
    return delta, eprime


def characteristic(sp, problem):
    """Delta(rho) = e(0, rho) at one spectral point."""
    delta, _ = characteristic_batch(problem, np.array([sp.rho]))
    return complex(delta[0])


@dataclass(frozen=True)
class WeylEvaluation:
    """M(lambda) together with the pieces it was assembled from."""

    lam: complex
    M: complex
    delta: complex
    eprime0: complex
    zero_distance: float | None = None


def weyl_M(sp, problem, verify=True):
    """Weyl function M(lambda) = e'(0, rho) / Delta(rho) at one point.

    With ``verify`` the identity Phi = phi_1 + M phi is spot checked at
    x = a/2, tying the Jost route to the boundary-basis route.
    """
    delta, eprime = characteristic_batch(problem, np.array([sp.rho]))
    delta, eprime = complex(delta[0]), complex(eprime[0])
    if abs(delta) < AT_SPECTRUM_REL * (1.0 + abs(eprime)):
        raise AtSpectrum(
            f"Delta({sp.rho}) = {delta:.3e}; lambda is numerically at the spectrum"
        )
    m = eprime / delta
    if verify:
        x0 = problem.a / 2.0
        ej, _ = jost_values(problem, sp, np.array([x0]))
        phi_at = phi_pair(problem, sp, np.array([x0]))
        lhs = complex(ej[0]) / delta
        rhs = complex(phi_at[0][0] + m * phi_at[2][0])
        scale = max(abs(lhs), abs(rhs), 1e-30)
        if abs(lhs - rhs) / scale > 1e-6:
            raise NumericalFailure(
                "Weyl solution mismatch between Jost and basis routes: "
                f"{abs(lhs - rhs) / scale:.3e}"
            )
    return WeylEvaluation(lam=sp.lam, M=m, delta=delta, eprime0=eprime)


def weyl_samples(problem, rhos, coeffs=None):
    """M(lambda) for a batch of rho; AtSpectrum if any node grazes a zero."""
    delta, eprime = characteristic_batch(problem, rhos, coeffs)
    bad = np.abs(delta) < AT_SPECTRUM_REL * (1.0 + np.abs(eprime))
    if bad.any():
        k = int(np.argmax(bad))
        raise AtSpectrum(f"contour node rho = {rhos[k]} sits on the spectrum")
    return eprime / delta


@dataclass(frozen=True)
class JostSolution:
    """e and e' on a grid, with the basis coefficients used to build them."""

    rho: complex
    x: np.ndarray
    e: np.ndarray
    e_prime: np.ndarray
    alpha: tuple
    d: tuple


def jost_values(problem, sp, x, coeffs=None):
    """e(x, rho) and e'(x, rho) on both sides of the singularity."""
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alpha1, alpha2 = jost_alpha(problem, np.array([sp.rho]), coeffs)
    a1, a2 = complex(alpha1[0]), complex(alpha2[0])
    d1, d2 = _sigma_coefficients(problem, a1, a2)
    s1, ds1, s2, ds2 = fundamental_pair(problem, sp, x, coeffs=coeffs)
    right = x > problem.a
    e = np.where(right, a1 * s1 + a2 * s2, d1 * s1 + d2 * s2)
    ep = np.where(right, a1 * ds1 + a2 * ds2, d1 * ds1 + d2 * ds2)
    return e, ep


def jost(sp, problem, X_inf=None, x=None):
    """Assemble the Jost solution on a grid (default: dense up to the tail)."""
    x_sup = _support_end(problem)
    if X_inf is None:
        X_inf = x_sup + 1.0
    if X_inf <= max(problem.a, x_sup - 1e-12):
        raise ValueError("X_inf must lie beyond the potential's support")
    if x is None:
        x = np.linspace(0.0, X_inf, 257)
        x = x[np.abs(x - problem.a) > 1e-9]
    coeffs = build_coefficients(problem.nu)
    alpha1, alpha2 = jost_alpha(problem, np.array([sp.rho]), coeffs)
    a1, a2 = complex(alpha1[0]), complex(alpha2[0])
    d = _sigma_coefficients(problem, a1, a2)
    e, ep = jost_values(problem, sp, x, coeffs)
    return JostSolution(rho=complex(sp.rho), x=x, e=e, e_prime=ep,
                        alpha=(a1, a2), d=d)


def phi_pair(problem, sp, x, coeffs=None):
    """phi_1, phi_2 with x-derivatives, built bilinearly from the sigma basis.

    phi_1 = sigma_2'(0) sigma_1 - sigma_1'(0) sigma_2 and
    phi_2 = sigma_1(0) sigma_2 - sigma_2(0) sigma_1, which pins
    phi_j^(m-1)(0) = delta_jm.
    """
    from .series import sigma_pair

    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    lam0 = np.array([sp.lam], dtype=complex)
    rho0 = np.array([sp.rho], dtype=complex)
    s1, ds1, s2, ds2 = _left_boundary(problem, lam0, rho0, coeffs)
    g10, dg10 = complex(s1[0]), complex(ds1[0])
    g20, dg20 = complex(s2[0]), complex(ds2[0])
    sg1, dsg1, sg2, dsg2 = sigma_pair(problem, sp, x, coeffs=coeffs)
    phi1 = dg20 * sg1 - dg10 * sg2
    dphi1 = dg20 * dsg1 - dg10 * dsg2
    phi2 = g10 * sg2 - g20 * sg1
    dphi2 = g10 * dsg2 - g20 * dsg1
    return phi1, dphi1, phi2, dphi2


def phi(j, x, sp, problem):
    """phi_j and its x-derivative; phi := phi_2 is the inverse problem's basis."""
    if j not in (1, 2):
        raise ValueError("phi index must be 1 or 2")
    vals = phi_pair(problem, sp, x)
    return vals[2 * j - 2], vals[2 * j - 1]


def theta_pair(problem):
    """Asymptotic zero offsets (theta_plus, theta_minus) from the xi-matrix.

    theta = -(i/2pi) ln|xi_12/xi_jj| + (1/2pi) arg(xi_12/xi_jj) with the
    argument taken in [0, 2pi); "+" pairs with xi_22 (right sector), "-"
    with xi_11 (left sector).
    """
    xi = problem.xi()
    regime = classify_regime(xi)
    if not regime.supported:
        raise UnsupportedRegime(regime.reason)
    out = []
    for jj in (xi.xi22, xi.xi11):
        r = xi.xi12 / jj
        ang = float(np.angle(r))
        if ang < 0.0:
            ang += 2.0 * np.pi
        out.append(-1j / (2.0 * np.pi) * np.log(abs(r)) + ang / (2.0 * np.pi))
    return complex(out[0]), complex(out[1])


@dataclass(frozen=True)
class EigenvalueRecord:
    """One refined zero of Delta: family-signed index and certification data."""

    k: int
    rho: complex
    lam: complex
    beta: complex
    residual: float


@dataclass(frozen=True)
class SpectrumEstimate:
    theta_plus: complex
    theta_minus: complex
    eigenvalues: tuple
    real_zeros: tuple


def _winding(problem, boxes, coeffs):
    """Argument-principle zero counts for rectangles in the rho plane.

    Refines the boundary sampling until the winding number of Delta is
    within WINDING_TOL of an integer and stable under doubling.
    """
    counts = [None] * len(boxes)
    pending = list(range(len(boxes)))
    n = 16
    prev = {}
    while pending and n <= 512:
        paths = []
        for b in pending:
            lo, hi, bot, top = boxes[b]
            edges = [
                np.linspace(lo + 1j * bot, hi + 1j * bot, n, endpoint=False),
                np.linspace(hi + 1j * bot, hi + 1j * top, n, endpoint=False),
                np.linspace(hi + 1j * top, lo + 1j * top, n, endpoint=False),
                np.linspace(lo + 1j * top, lo + 1j * bot, n, endpoint=False),
            ]
            path = np.concatenate(edges + [np.array([lo + 1j * bot])])
            paths.append(path)
        flat = np.concatenate(paths)
        delta, _ = characteristic_batch(problem, flat, coeffs)
        pos = 0
        still = []
        for b, path in zip(pending, paths):
            vals = delta[pos:pos + path.size]
            pos += path.size
            wind = float(np.sum(np.diff(np.unwrap(np.angle(vals))))
                         / (2.0 * np.pi))
            near = round(wind)
            ok = abs(wind - near) <= WINDING_TOL and prev.get(b) == near
            prev[b] = near
            if ok:
                counts[b] = int(near)
            else:
                still.append(b)
        pending = still
        n *= 2
    if pending:
        raise CountMismatch(
            f"winding numbers failed to stabilize for boxes {pending}"
        )
    return counts


def _newton_refine(problem, seeds, coeffs, box_radius):
    """Batched Newton iteration on Delta with central-difference derivative."""
    rho = np.asarray(seeds, dtype=complex).copy()
    start = rho.copy()
    done = np.zeros(rho.shape, dtype=bool)
    res = np.full(rho.shape, np.inf)
    for _ in range(NEWTON_MAX_ITER):
        act = ~done
        if not act.any():
            break
        r = rho[act]
        d = NEWTON_RHO_STEP * (1.0 + np.abs(r))
        triple = np.concatenate([r, r + d, r - d])
        delta, eprime = characteristic_batch(problem, triple, coeffs)
        m = r.size
        f, fp = delta[:m], (delta[m:2 * m] - delta[2 * m:]) / (2.0 * d)
        res[act] = np.abs(f)
        conv = np.abs(f) < NEWTON_STOP * (1.0 + np.abs(eprime[:m]))
        step = np.where(conv, 0.0, f / np.where(fp == 0, 1.0, fp))
        newr = r - step
        idx = np.flatnonzero(act)
        rho[idx] = newr
        done[idx[conv]] = True
        lost = np.abs(rho - start) > box_radius
        if lost.any():
            raise SeedDiverged(
                f"Newton left its box from seed {start[np.argmax(lost)]}"
            )
    if not done.all():
        raise SeedDiverged("Newton failed to converge from some spectrum seeds")
    return rho, res


def _real_axis_zeros(problem, rho_max, coeffs):
    """Scan the real rho axis for zeros of Delta (the bounded set)."""
    a = problem.a
    found = []
    npts = max(64, int(16 * rho_max * a / np.pi))
    for sgn in (1.0, -1.0):
        grid = sgn * np.linspace(0.05, rho_max, npts)
        delta, eprime = characteristic_batch(problem, grid.astype(complex),
                                             coeffs)
        mag = np.abs(delta) / (1.0 + np.abs(eprime))
        interior = np.arange(1, npts - 1)
        dips = interior[(mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])
                        & (mag[1:-1] < 1e-2)]
        if dips.size == 0:
            continue
        for s in grid[dips]:
            try:
                zeros, _ = _newton_refine(problem, np.array([complex(s)]),
                                          coeffs, 2.0 * rho_max / npts)
            except SeedDiverged:
                continue
            z = zeros[0]
            if abs(z.imag) < 1e-6 * (1.0 + abs(z)):
                found.append(complex(z.real))
    merged = []
    for z in sorted(found, key=lambda t: t.real):
        if not merged or abs(z - merged[-1]) > 1e-6:
            merged.append(z)
    return tuple(merged)


def spectrum(problem, k_max=12, coeffs=None):
    """Localize the eigenvalues with asymptotic seeds + Newton + winding counts.

    Seeds (pi/a)(k + theta_+) for k = 1..k_max and (pi/a)(k + theta_-) for
    k = -1..-k_max; the searched strip is partitioned into disjoint boxes
    whose argument-principle counts must match the refined zeros exactly.
    """
    if coeffs is None:
        coeffs = build_coefficients(problem.nu)
    th_p, th_m = theta_pair(problem)
    a = problem.a
    step = np.pi / a

    seeds = {}
    for k in range(1, k_max + 1):
        seeds[k] = step * (k + th_p)
    for k in range(-1, -k_max - 1, -1):
        seeds[k] = step * (k + th_m)

    lo = min(s.real for s in seeds.values()) - 0.5 * step
    hi = max(s.real for s in seeds.values()) + 0.5 * step
    nbox = int(np.ceil((hi - lo) / step))
    edges = np.linspace(lo, hi, nbox + 1)
    bot = 1e-3 * step
    top = step * max(th_p.imag, th_m.imag) + 1.5 * step
    boxes = [(edges[i], edges[i + 1], bot, top) for i in range(nbox)]

    counts = _winding(problem, boxes, coeffs)

    starts = []
    owners = []
    for i, (blo, bhi, _, _) in enumerate(boxes):
        c = counts[i]
        if c == 0:
            continue
        inside = [k for k, s in seeds.items() if blo <= s.real < bhi]
        if c == 1:
            if inside:
                starts.append(seeds[inside[0]])
                owners.append(inside[0])
            else:
                starts.append(complex((blo + bhi) / 2.0,
                                      step * max(th_p.imag, th_m.imag)))
                owners.append(None)
        else:
            subs = np.linspace(blo, bhi, c + 1)
            for jj in range(c):
                starts.append(complex((subs[jj] + subs[jj + 1]) / 2.0,
                                      step * max(th_p.imag, th_m.imag)))
                owners.append(None)

    if starts:
        zeros, residuals = _newton_refine(problem, np.array(starts), coeffs,
                                          1.5 * step)
    else:
        zeros, residuals = np.array([], dtype=complex), np.array([])

    keep = []
    for i, z in enumerate(zeros):
        if z.imag <= bot:
            continue
        if any(abs(z - zeros[j]) < 1e-8 * (1.0 + abs(z)) for j in keep):
            continue
        keep.append(i)

    for i, (blo, bhi, _, _) in enumerate(boxes):
        got = sum(1 for j in keep
                  if blo <= zeros[j].real < bhi and zeros[j].imag <= top)
        if got != counts[i]:
            raise CountMismatch(
                f"box {i}: winding count {counts[i]} but {got} refined zeros"
            )

    _, eprime = characteristic_batch(
        problem, zeros[keep], coeffs) if keep else (None, np.array([]))

    records = []
    for pos, i in enumerate(keep):
        z = zeros[i]
        k = owners[i]
        if k is None:
            kp = int(np.round(z.real / step - th_p.real))
            km = int(np.round(z.real / step - th_m.real))
            dp = abs(z - step * (kp + th_p))
            dm = abs(z - step * (km + th_m))
            k = kp if dp <= dm else km
        records.append(EigenvalueRecord(
            k=k, rho=complex(z), lam=complex(z * z),
            beta=complex(eprime[pos]), residual=float(residuals[i]),
        ))
    records.sort(key=lambda r: (r.k, r.rho.real))

    real_zeros = _real_axis_zeros(problem, step * (k_max + 1), coeffs)
    return SpectrumEstimate(theta_plus=th_p, theta_minus=th_m,
                            eigenvalues=tuple(records),
                            real_zeros=real_zeros)


def choose_h(problem, estimate=None, k_max=8):
    """Contour height: above every zero of Delta, with a pi/(4a) margin.

    Unsupported regimes have no asymptotic zero lattice; the margin alone
    is returned (matching the free continuous problem, which has no zeros).
    """
    margin = 0.25 * np.pi / problem.a
    try:
        if estimate is None:
            estimate = spectrum(problem, k_max=k_max)
    except UnsupportedRegime:
        return margin
    ceiling = (np.pi / problem.a) * max(estimate.theta_plus.imag,
                                        estimate.theta_minus.imag)
    heights = [r.rho.imag for r in estimate.eigenvalues]
    h = max([ceiling] + heights) + margin
    while any(abs(im - h) < 1e-3 for im in heights):
        h += 1e-3
    return float(h)


@dataclass(frozen=True)
class RayCheck:
    """Deviation from one leading-order formula along a doubling ray."""

    name: str
    radii: tuple
    deviations: tuple

    @property
    def ratios(self):
        d = self.deviations
        return tuple(d[i] / d[i + 1] for i in range(len(d) - 1))


def asymptotic_validators(problem, radii=(20.0, 40.0, 80.0, 160.0, 320.0),
                          height=2.0, per_octave=8):
    """Compare computed phi, e, Delta, M with their large-|rho| leading terms.

    Evaluates along rho = +-R + i*height in the two sectors.  The error of
    each leading term is O(1/rho) with an oscillating e^{2i rho a} phase, so
    pointwise ratios wobble; each reported deviation is the mean over
    ``per_octave`` log-spaced radii in [R, 2R), which measures the decay of
    the envelope.  Doubling R should then halve the deviation.
    """
    xi = problem.xi()
    regime = classify_regime(xi)
    if not regime.supported:
        raise UnsupportedRegime(regime.reason)
    coeffs = build_coefficients(problem.nu)
    a = problem.a
    det = problem.A.det
    x_m = a / 2.0
    x_p = a + max(0.35, 0.4 * (_support_end(problem) - a + 0.5))

    fan = 2.0 ** (np.arange(per_octave) / per_octave)
    r_all = np.concatenate([r * fan for r in radii])
    nr = r_all.size

    checks = {}

    def record(name, devs):
        per_band = np.asarray(devs).reshape(len(radii), per_octave)
        checks[name] = per_band.mean(axis=1)

    for sgn, jj, tag in ((1.0, xi.xi22, "right"), (-1.0, xi.xi11, "left")):
        rhos = sgn * r_all + 1j * height
        lams = rhos * rhos
        delta, eprime = characteristic_batch(problem, rhos, coeffs)

        osc = jj * np.exp(2j * rhos * a)
        lead = (xi.xi12 - osc) / det
        scale = (abs(xi.xi12) + np.abs(osc)) / abs(det)
        record(f"Delta {tag}", np.abs(delta - lead) / scale)

        m = eprime / delta
        m0 = (xi.xi12 + osc) / (xi.xi12 - osc)
        record(f"M {tag}", np.abs(m - 1j * rhos * m0) / np.abs(1j * rhos * m0))

        devs = {"e right-side": [], "e left-side": [],
                "phi_1^(0)": [], "phi_1^(1)": [],
                "phi_2^(0)": [], "phi_2^(1)": []}
        for i in range(nr):
            sp = _SpectralPair(lam=complex(lams[i]), rho=complex(rhos[i]))

            ej, _ = jost_values(problem, sp, np.array([x_p, x_m]), coeffs)
            lead_p = np.exp(1j * sp.rho * x_p)
            devs["e right-side"].append(abs(ej[0] - lead_p) / abs(lead_p))
            t1 = xi.xi12 * np.exp(1j * sp.rho * x_m) / det
            t2 = -jj * np.exp(1j * sp.rho * (2 * a - x_m)) / det
            devs["e left-side"].append(abs(ej[1] - t1 - t2)
                                       / (abs(t1) + abs(t2)))

            p1, dp1, p2, dp2 = phi_pair(problem, sp, np.array([x_m]), coeffs)
            for j, (val, der) in ((1, (p1, dp1)), (2, (p2, dp2))):
                for mm, v in ((0, complex(val[0])), (1, complex(der[0]))):
                    t1 = ((-1j * sp.rho) ** (mm - j + 1)
                          * np.exp(-1j * sp.rho * x_m) / 2.0)
                    t2 = ((1j * sp.rho) ** (mm - j + 1)
                          * np.exp(1j * sp.rho * x_m) / 2.0)
                    devs[f"phi_{j}^({mm})"].append(abs(v - t1 - t2)
                                                   / (abs(t1) + abs(t2)))
        for key, vals in devs.items():
            record(f"{key} {tag}", vals)

    return [RayCheck(name=name, radii=tuple(radii),
                     deviations=tuple(float(d) for d in devs))
            for name, devs in checks.items()]
