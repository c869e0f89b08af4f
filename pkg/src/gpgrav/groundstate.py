"""The positive radial ground state Q of -dQ'' - Q'/r + Q - Q^3 = 0 and
every constant derived from it.

Q is found by shooting on Q(0) with bisection, then polishing the whole
profile with Newton's method on the second-order finite-difference
boundary-value problem, so the discrete ODE residual reported by
ode_residual is at rounding level rather than at the shooting method's
tail-contamination level. The normalized profile Q0 = Q/||Q|| feeds the
critical strength a_star = int Q^2, the self-interaction constant
D0 = iint Q0^2(x) Q0^2(y)/|x-y|, the singular moments
I(p) = int Q0^2 |x|^{-p}, and the collapse-law coefficients built from
them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import InterpolatedUnivariateSpline
from scipy.linalg import solve_banded
from scipy.special import ellipk, k0

from .grid import Field, Grid2D, coords, make_field, normalize

__all__ = [
    "RadialProfile",
    "Q0Constants",
    "A_STAR_REFERENCE",
    "solve_Q",
    "a_star",
    "a_star_grid",
    "ode_residual",
    "q0_constants",
    "q0_on_grid",
    "profile_mass",
    "profile_kinetic",
    "profile_quartic",
    "radial_moment",
]

#: critical strength from solve_Q() + a_star() at default resolution,
#: agreeing with an independent adaptive integrator to 2e-7 relative;
#: used only as a gate when freshly computed constants are not at hand
A_STAR_REFERENCE = 11.70089471


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of Q on the uniform mesh r_i = i*dr, i = 0..N."""

    r: np.ndarray
    q: np.ndarray
    q0_initial: float  # converged shooting parameter Q(0)
    dr: float
    r_max: float


@dataclass(frozen=True)
class Q0Constants:
    """Constants of the normalized profile Q0 = Q/||Q||.

    I maps each requested exponent p to int Q0^2 |x|^{-p}. A and
    beta_strong are populated for the p >= 1 entries only (the regimes
    where the singular potential shapes the collapse); both depend on the
    envelope constant h0 recorded here. beta_weak = (a_star/2) D0.
    """

    a_star: float
    D0: float
    I: Mapping[float, float]
    beta_weak: float
    h0: float
    A: Mapping[float, float]
    beta_strong: Mapping[float, float]

    def as_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "D0": self.D0,
            "I": {str(p): v for p, v in self.I.items()},
            "beta_weak": self.beta_weak,
            "h0": self.h0,
            "A": {str(p): v for p, v in self.A.items()},
            "beta_strong": {str(p): v for p, v in self.beta_strong.items()},
        }


# ---------------------------------------------------------------- shooting

def _classify_shot(c: float, dr: float, r_stop: float) -> int:
    """-1 when the trajectory crosses zero (c too large), +1 otherwise.

    The radial term damps the motion in the double-well landscape, so a
    trajectory that turns upward below Q = 0.9 has too little energy ever
    to reach zero afterwards; it is sub-critical and oscillates around 1.
    Genuine upward divergence cannot occur from this bracket, but the
    Q > 2c guard stays as a cheap stop.
    """
    q = c + (c - c**3) * dr * dr / 4.0
    dq = (c - c**3) * dr / 2.0
    r = dr
    half = dr / 2.0
    sixth = dr / 6.0
    while r < r_stop:
        k1q = dq
        k1d = -dq / r + q - q * q * q
        q2 = q + half * k1q
        d2 = dq + half * k1d
        rm = r + half
        k2q = d2
        k2d = -d2 / rm + q2 - q2 * q2 * q2
        q3 = q + half * k2q
        d3 = dq + half * k2d
        k3q = d3
        k3d = -d3 / rm + q3 - q3 * q3 * q3
        q4 = q + dr * k3q
        d4 = dq + dr * k3d
        rn = r + dr
        k4q = d4
        k4d = -d4 / rn + q4 - q4 * q4 * q4
        q += sixth * (k1q + 2.0 * (k2q + k3q) + k4q)
        dq += sixth * (k1d + 2.0 * (k2d + k3d) + k4d)
        r = rn
        if q < 0.0:
            return -1
        if dq > 0.0 and q < 0.9:
            return +1
        if q > 2.0 * c:
            return +1
    return +1


def _shoot_profile(c: float, dr: float, n_steps: int) -> np.ndarray:
    # one stored integration at the converged c; contamination at large r
    # is cut off later by the tail graft
    out = np.empty(n_steps + 1)
    out[0] = c
    q = c + (c - c**3) * dr * dr / 4.0
    dq = (c - c**3) * dr / 2.0
    out[1] = q
    r = dr
    half = dr / 2.0
    sixth = dr / 6.0
    for i in range(2, n_steps + 1):
        k1q = dq
        k1d = -dq / r + q - q * q * q
        q2 = q + half * k1q
        d2 = dq + half * k1d
        rm = r + half
        k2q = d2
        k2d = -d2 / rm + q2 - q2 * q2 * q2
        q3 = q + half * k2q
        d3 = dq + half * k2d
        k3q = d3
        k3d = -d3 / rm + q3 - q3 * q3 * q3
        q4 = q + dr * k3q
        d4 = dq + dr * k3d
        rn = r + dr
        k4q = d4
        k4d = -d4 / rn + q4 - q4 * q4 * q4
        q += sixth * (k1q + 2.0 * (k2q + k3q) + k4q)
        dq += sixth * (k1d + 2.0 * (k2d + k3d) + k4d)
        r = rn
        out[i] = q
    return out


def _newton_polish(q: np.ndarray, dr: float, rho: float, max_iter: int = 40) -> np.ndarray:
    """Newton iteration on the finite-difference system

        i = 0:        4 (q1 - q0)/dr^2 - q0 + q0^3 = 0   (evenness at r=0)
        0 < i < N:    (q_{i+1} - 2 q_i + q_{i-1})/dr^2
                      + (q_{i+1} - q_{i-1})/(2 r_i dr) - q_i + q_i^3 = 0
        closure:      q_N = rho * q_{N-1}   (exponential-tail ratio)

    driving the residual to rounding level. The Jacobian is tridiagonal.
    """
    N = len(q) - 1
    r = dr * np.arange(N + 1)
    inv2 = 1.0 / dr**2
    x = q[:N].copy()  # unknowns q_0 .. q_{N-1}
    for _ in range(max_iter):
        qN = rho * x[N - 1]
        full = np.concatenate([x, [qN]])
        F = np.empty(N)
        F[0] = 4.0 * (full[1] - full[0]) * inv2 - full[0] + full[0] ** 3
        i = np.arange(1, N)
        cp = inv2 + 1.0 / (2.0 * r[i] * dr)
        cm = inv2 - 1.0 / (2.0 * r[i] * dr)
        F[1:] = cp * full[i + 1] + cm * full[i - 1] - 2.0 * inv2 * full[i] \
            - full[i] + full[i] ** 3
        # banded Jacobian: rows (upper, diagonal, lower)
        ab = np.zeros((3, N))
        ab[1, 0] = -4.0 * inv2 - 1.0 + 3.0 * x[0] ** 2
        ab[0, 1] = 4.0 * inv2
        ab[1, 1:] = -2.0 * inv2 - 1.0 + 3.0 * x[1:] ** 2
        ab[0, 2:] = cp[:-1]
        ab[2, :-1] = cm
        ab[1, N - 1] += cp[-1] * rho  # fold the tail closure into the last row
        dx = solve_banded((1, 1), ab, -F)
        x += dx
        if np.max(np.abs(dx)) < 1e-14 * max(1.0, np.max(np.abs(x))):
            break
    return np.concatenate([x, [rho * x[N - 1]]])


def solve_Q(dr: float = 5e-4, r_max: float = 20.0, tol: float = 1e-12) -> RadialProfile:
    """Compute the decaying positive radial profile.

    Shooting bisection on Q(0) in [1, 5] at step dr classifies each shot
    by the zero-crossing rule; the converged shot, grafted onto the
    Bessel-K0 tail where contamination takes over, seeds the Newton
    polish of the finite-difference boundary-value problem.
    """
    if not 0.0 < dr <= 1e-3 * r_max:
        raise ValueError(f"dr={dr} out of range for r_max={r_max} (need 0 < dr <= r_max/1000)")
    if r_max < 12.0:
        raise ValueError(f"r_max={r_max} too small to contain the profile (need >= 12)")
    if tol > 1e-10:
        raise ValueError(f"shooting tolerance must be <= 1e-10, got {tol}")
    n_steps = int(round(r_max / dr))
    if abs(n_steps * dr - r_max) > 1e-9 * r_max:
        raise ValueError("r_max must be an integer multiple of dr")
    if n_steps % 2:
        raise ValueError("r_max/dr must be even (composite quadrature pairs)")

    lo, hi = 1.0, 5.0
    s_lo = _classify_shot(lo, dr, r_max)
    s_hi = _classify_shot(hi, dr, r_max)
    if not (s_lo == +1 and s_hi == -1):
        raise RuntimeError(f"no shooting bracket in [1, 5] (got {s_lo}, {s_hi})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _classify_shot(mid, dr, r_max) == +1:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)

    q = _shoot_profile(c, dr, n_steps)
    r = dr * np.arange(n_steps + 1)
    # graft the exponential tail where the shot leaves the decay envelope
    small = np.nonzero(q < 1e-6 * c)[0]
    rising = np.nonzero((np.diff(q) > 0) & (q[:-1] < 0.5 * c))[0]
    cut = n_steps
    if small.size:
        cut = min(cut, int(small[0]))
    if rising.size:
        cut = min(cut, int(rising[0]))
    if cut < n_steps:
        tail = k0(r[cut:]) * (q[cut] / k0(r[cut]))
        q = np.concatenate([q[:cut], tail])

    rho = float(k0(r_max) / k0(r_max - dr))
    q = _newton_polish(q, dr, rho)

    if np.any(q[:-1] <= 0.0):
        raise RuntimeError("profile lost positivity")
    if np.any(np.diff(q) >= 0.0):
        raise RuntimeError("profile is not strictly decreasing")
    if not q[-1] < 1e-8:
        raise RuntimeError(
            f"profile value {q[-1]:.3e} at r_max={r_max} exceeds the decay "
            "threshold 1e-8; the exponential tail needs r_max >= 19 or so"
        )
    q.flags.writeable = False
    r.flags.writeable = False
    return RadialProfile(r=r, q=q, q0_initial=c, dr=dr, r_max=r_max)


def ode_residual(profile: RadialProfile) -> float:
    """Sup norm of the finite-difference ODE residual at interior points."""
    q, dr = profile.q, profile.dr
    r = profile.r
    i = np.arange(1, len(q) - 1)
    lap = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / dr**2 \
        + (q[i + 1] - q[i - 1]) / (2.0 * r[i] * dr)
    return float(np.max(np.abs(lap - q[i] + q[i] ** 3)))


# ------------------------------------------------------------- quadrature

def radial_moment(f: np.ndarray, r: np.ndarray, alpha: float) -> float:
    """int_0^rmax f(r) r^alpha dr for f sampled on a uniform mesh with an
    even number of intervals, alpha > -1.

    Product integration: on each point pair the quadratic interpolant of
    f is integrated against the weight r^alpha exactly, so integrable
    endpoint singularities of the weight cost no accuracy.
    """
    if alpha <= -1.0:
        raise ValueError(f"weight exponent must exceed -1, got {alpha}")
    N = len(f) - 1
    if N % 2:
        raise ValueError("need an even number of intervals")
    r0 = r[0:-1:2]
    r1 = r[1::2]
    r2 = r[2::2]
    d = r1 - r0
    # exact moments M_m = int_{r0}^{r2} r^{alpha+m} dr
    M = [(r2 ** (alpha + m + 1) - r0 ** (alpha + m + 1)) / (alpha + m + 1)
         for m in (0, 1, 2)]
    w0 = (M[2] - (r1 + r2) * M[1] + r1 * r2 * M[0]) / (2 * d * d)
    w1 = (M[2] - (r0 + r2) * M[1] + r0 * r2 * M[0]) / (-d * d)
    w2 = (M[2] - (r0 + r1) * M[1] + r0 * r1 * M[0]) / (2 * d * d)
    return float(np.sum(w0 * f[0:-1:2] + w1 * f[1::2] + w2 * f[2::2]))


def a_star(profile: RadialProfile) -> float:
    """Critical interaction strength: 2 pi int Q(r)^2 r dr."""
    return 2.0 * np.pi * radial_moment(profile.q**2, profile.r, 1.0)


def profile_mass(profile: RadialProfile) -> float:
    """int Q0^2, by composite Simpson rather than the product rule that
    defines the normalization, so the unit-mass identity is a genuine
    cross-check of two quadratures."""
    from scipy.integrate import simpson

    astar = a_star(profile)
    return 2.0 * np.pi * simpson(profile.q**2 * profile.r, x=profile.r) / astar


def profile_kinetic(profile: RadialProfile) -> float:
    """int |grad Q0|^2 = 2 pi int Q0'(r)^2 r dr, derivative by quintic spline."""
    astar = a_star(profile)
    spl = InterpolatedUnivariateSpline(profile.r, profile.q, k=5)
    dq = spl.derivative()(profile.r)
    return 2.0 * np.pi * radial_moment(dq**2, profile.r, 1.0) / astar


def profile_quartic(profile: RadialProfile) -> float:
    """int Q0^4 = 2 pi int Q0(r)^4 r dr."""
    astar = a_star(profile)
    return 2.0 * np.pi * radial_moment(profile.q**4, profile.r, 1.0) / astar**2


def _d0_radial(profile: RadialProfile, astar: float) -> float:
    """D0 by real-space double quadrature with the angular average of
    1/|x-y|: (1/2pi) int d(theta) |x-y|^{-1} = (2/pi) K(m)/(r+s),
    m = 4 r s/(r+s)^2, giving

        D0 = 8 pi iint rho(r) rho(s) r s K(m)/(r+s) dr ds,  rho = Q0^2.

    The elliptic integral diverges logarithmically on the diagonal r=s;
    the inner integral is split there and the modulus clamped below 1.
    """
    rho = InterpolatedUnivariateSpline(profile.r, (profile.q / np.sqrt(astar)) ** 2, k=3)
    rmax = profile.r_max

    def inner(r):
        def f(s):
            m = min(4.0 * r * s / (r + s) ** 2, 1.0 - 1e-15)
            return rho(s) * s * ellipk(m) / (r + s)

        lo, _ = quad(f, 0.0, r, limit=200, epsabs=1e-12, epsrel=1e-10)
        hi, _ = quad(f, r, rmax, limit=200, epsabs=1e-12, epsrel=1e-10)
        return lo + hi

    val, _ = quad(lambda r: rho(r) * r * inner(r), 0.0, rmax,
                  limit=200, epsabs=1e-11, epsrel=1e-9)
    return 8.0 * np.pi * val


def q0_constants(profile: RadialProfile, p_list=(0.5, 1.0, 1.5), h0: float = 1.0) -> Q0Constants:
    """Assemble every derived constant of the normalized profile.

    For each p >= 1 in p_list the aggregate A is h0*I(p), plus D0 when
    p = 1 exactly (gravity enters the collapse law at the same order as
    the potential only at the border exponent); beta_strong is the
    minimizer (p a_star A / 2)^{1/(2-p)} of the reduced dilation energy
    lam^2/a_star - lam^p A.
    """
    if h0 < 0:
        raise ValueError("envelope constant h0 must be >= 0")
    for p in p_list:
        if not 0.0 < p < 2.0:
            raise ValueError(f"moment exponent must lie in (0, 2), got {p}")
    astar = a_star(profile)
    rho = (profile.q / np.sqrt(astar)) ** 2
    D0 = _d0_radial(profile, astar)
    I = {float(p): 2.0 * np.pi * radial_moment(rho, profile.r, 1.0 - p)
         for p in p_list}
    A = {}
    beta_strong = {}
    for p, Ip in I.items():
        if p < 1.0:
            continue
        A[p] = h0 * Ip + (D0 if p == 1.0 else 0.0)
        beta_strong[p] = (p * astar * A[p] / 2.0) ** (1.0 / (2.0 - p))
    return Q0Constants(
        a_star=astar,
        D0=D0,
        I=I,
        beta_weak=astar / 2.0 * D0,
        h0=float(h0),
        A=A,
        beta_strong=beta_strong,
    )


def q0_on_grid(profile: RadialProfile, grid: Grid2D, center=(0.0, 0.0), b: float = 1.0) -> Field:
    """Sample the dilated normalized profile b Q0(b |x - center|) on a grid
    and renormalize.

    Spatial resolution guidance: b*h <= 0.25 keeps the core resolved; a
    RuntimeWarning fires beyond that.
    """
    if not b > 0:
        raise ValueError(f"dilation parameter must be positive, got {b}")
    if b * grid.h > 0.25:
        import warnings

        warnings.warn(
            f"q0_on_grid: b*h = {b * grid.h:.3f} > 0.25, profile core under-resolved",
            RuntimeWarning,
            stacklevel=2,
        )
    astar = a_star(profile)
    spl = InterpolatedUnivariateSpline(profile.r, profile.q / np.sqrt(astar), k=3)
    x = coords(grid)
    cx, cy = center
    rr = np.hypot(x[:, None] - cx, x[None, :] - cy) * b
    vals = b * spl(rr)
    vals[rr >= profile.r_max] = 0.0
    np.maximum(vals, 0.0, out=vals)
    return normalize(make_field(grid, vals))


def a_star_grid(grid: Grid2D, tol: float = 1e-13, max_iter: int = 2000,
                seed_width: float = 1.2) -> float:
    """Critical strength by grid minimization of the interpolation
    quotient 2 int|grad u|^2 int u^2 / int u^4, independent of the
    radial shooting route.

    The bare quotient degenerates on a periodic box (constants send it
    to zero), so the equivalent constrained form is minimized instead:
    the action S(u) = K + M - P/2 restricted to the set K + M = P,
    where K, M, P are the kinetic, mass, and quartic integrals. On that
    set the amplitude is fixed by the closed-form rescaling
    t^2 = (K+M)/P, the dilation direction has an interior optimum with
    value 2KM/P, and the minimum level of S equals the critical
    strength. Projected preconditioned descent from a localized
    Gaussian; the constraint projection precedes every energy test, so
    the accepted S-sequence is non-increasing.
    """
    from scipy import fft as _fft

    from .grid import _rfft_ksq, _rfft_weights, get_fft_workers

    x = coords(grid)
    u = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * seed_width**2))
    h2 = grid.h**2

    ksq = _rfft_ksq(grid)
    w = _rfft_weights(grid.n)[None, :]
    wk = get_fft_workers()

    def kml(v):
        vh = _fft.rfft2(v, workers=wk)
        kin = float(h2 / grid.n**2 * np.sum(w * ksq * np.abs(vh) ** 2))
        lap = _fft.irfft2(-ksq * vh, s=(grid.n, grid.n), workers=wk)
        mass_ = float(h2 * np.sum(v * v))
        quart = float(h2 * np.sum(v**4))
        return kin, mass_, quart, lap

    def project(v):
        kin, mass_, quart, lap = kml(v)
        if quart <= 0:
            return None
        t = np.sqrt((kin + mass_) / quart)
        return t * v, t**2 * kin, t**2 * mass_, t**4 * quart, t * lap

    u, kin, mass_, quart, lap = project(u)
    S = kin + mass_ - 0.5 * quart
    tau = 0.5
    for _ in range(max_iter):
        G = 2.0 * (-lap + u - u**3)
        Gh = _fft.rfft2(G, workers=wk)
        d = _fft.irfft2(Gh / (1.0 + ksq), s=(grid.n, grid.n), workers=wk)
        accepted = False
        while tau > 1e-14:
            proj = project(np.maximum(u - tau * d, 0.0))
            if proj is not None:
                v, kin_v, mass_v, quart_v, lap_v = proj
                S_v = kin_v + mass_v - 0.5 * quart_v
                if S_v <= S * (1.0 + 1e-14):
                    accepted = True
                    break
            tau *= 0.5
        if not accepted:
            break
        dS = abs(S - S_v) / S
        u, kin, mass_, quart, lap, S = v, kin_v, mass_v, quart_v, lap_v, S_v
        tau = min(tau * 1.3, 2.0)
        if dS < tol:
            break
    return S
