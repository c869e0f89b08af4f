"""The constrained energy

    E_a(u) = int |grad u|^2 + int V |u|^2 - (a/2) int u^4 - g D(u),

its four-term breakdown, its variational gradient, and the stationarity
residual of the associated Euler-Lagrange equation

    -du - Delta u + V u - a u^3 - 2 g (K * u^2) u = mu u,   K = 1/|x|.

The gradient is exactly twice the Euler-Lagrange operator applied to u
(each quadratic term contributes 2, the quartic 4*(a/2)/2 per factor,
and the gravity double integral 4 through its two density slots); the
finite-difference check in the test suite pins the factors.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import fft as _fft

from .grid import Field, _rfft_ksq, get_fft_workers, kinetic_energy, mass
from .gravity import GravityKernel, gravity_potential
from .potentials import Zero, sample_potential

__all__ = ["ModelParams", "EnergyBreakdown", "ELResult", "evaluate", "gradient", "el_residual", "hamiltonian_apply"]


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants and the external potential.

    a >= 0 is the contact attraction, g >= 0 the gravitational constant
    (default 1), potential any spec from the potentials module.
    """

    a: float
    g: float = 1.0
    potential: object = dc_field(default_factory=Zero)

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"contact strength a must be >= 0, got {self.a}")
        if self.g < 0:
            raise ValueError(f"gravitational constant g must be >= 0, got {self.g}")


@dataclass(frozen=True)
class EnergyBreakdown:
    """The four terms, each stored positive as written in the functional
    (quartic and gravity enter total with a minus sign)."""

    kinetic: float
    potential: float
    quartic: float
    gravity: float
    total: float


@dataclass(frozen=True)
class ELResult:
    mu: float
    residual_norm: float
    degenerate: bool = False


def _laplacian(u: Field) -> np.ndarray:
    g = u.grid
    w = get_fft_workers()
    uh = _fft.rfft2(u.values, workers=w)
    return _fft.irfft2(-_rfft_ksq(g) * uh, s=(g.n, g.n), workers=w)


def _check_normalized(u: Field) -> None:
    m = mass(u)
    if abs(m - 1.0) > 1e-8:
        raise ValueError(f"field must have unit mass, got {m:.12f}")


def evaluate(u: Field, params: ModelParams, kernel: GravityKernel,
             V: np.ndarray | None = None) -> EnergyBreakdown:
    """Energy breakdown of a unit-mass field.

    V may be passed precomputed (as sample_potential returns it) to avoid
    resampling in inner loops.
    """
    _check_normalized(u)
    g = u.grid
    h2 = g.h**2
    if V is None:
        V = sample_potential(params.potential, g)
    u2 = u.values**2
    kin = kinetic_energy(u)
    pot = float(h2 * np.sum(V * u2))
    quart = float(params.a / 2.0 * h2 * np.sum(u2 * u2))
    phi = gravity_potential(u, kernel)
    grav = float(params.g * h2 * np.sum(u2 * phi))
    return EnergyBreakdown(
        kinetic=kin,
        potential=pot,
        quartic=quart,
        gravity=grav,
        total=kin + pot - quart - grav,
    )


def hamiltonian_apply(u: Field, params: ModelParams, kernel: GravityKernel,
                      V: np.ndarray | None = None) -> np.ndarray:
    """H u = -Delta u + V u - a u^3 - 2 g (K * u^2) u."""
    if V is None:
        V = sample_potential(params.potential, u.grid)
    phi = gravity_potential(u, kernel)
    return (-_laplacian(u) + V * u.values - params.a * u.values**3
            - 2.0 * params.g * phi * u.values)


def gradient(u: Field, params: ModelParams, kernel: GravityKernel,
             V: np.ndarray | None = None) -> np.ndarray:
    """Variational derivative of the energy: 2 H u."""
    _check_normalized(u)
    return 2.0 * hamiltonian_apply(u, params, kernel, V)


def el_residual(u: Field, params: ModelParams, kernel: GravityKernel,
                V: np.ndarray | None = None) -> ELResult:
    """Lagrange multiplier mu = h^2 sum u Hu and the relative stationarity
    residual ||Hu - mu u|| / ||Hu||.

    A vanishing Hu (the flat field with no interactions) is flagged
    degenerate with residual 0.
    """
    _check_normalized(u)
    g = u.grid
    Hu = hamiltonian_apply(u, params, kernel, V)
    mu = float(g.h**2 * np.sum(u.values * Hu))
    nrm = float(np.sqrt(g.h**2 * np.sum(Hu**2)))
    if nrm < 1e-12:
        return ELResult(mu=mu, residual_norm=0.0, degenerate=True)
    res = float(np.sqrt(g.h**2 * np.sum((Hu - mu * u.values) ** 2)) / nrm)
    return ELResult(mu=mu, residual_norm=res, degenerate=False)
