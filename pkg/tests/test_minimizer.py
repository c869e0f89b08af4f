import numpy as np
import pytest

from gpgrav import (
    GaussianSeed,
    MinimizeOptions,
    ModelParams,
    Q0Seed,
    SingularSum,
    SingularTerm,
    Trap,
    Zero,
    build_kernel,
    make_field,
    make_grid,
    minimize,
    normalize,
)


@pytest.fixture(scope="module")
def g128():
    return make_grid(8.0, 128)


@pytest.fixture(scope="module")
def k128(g128):
    return build_kernel(g128)


def test_harmonic_ground_state(g128, k128):
    # -Laplace + r^2 has ground energy 2 in two dimensions
    res = minimize(ModelParams(a=0.0, g=0.0, potential=Trap(q=2.0)),
                   g128, k128, MinimizeOptions(max_iter=4000))
    assert res.converged
    assert res.breakdown.total == pytest.approx(2.0, abs=1e-7)
    assert res.el.mu == pytest.approx(2.0, abs=1e-5)
    assert np.hypot(*res.peak) < 2 * g128.h


def test_seed_independence(profile, consts, g128, k128):
    params = ModelParams(a=0.5 * consts.a_star, g=1.0, potential=Zero())
    base = MinimizeOptions(consts=consts, max_iter=6000)
    from dataclasses import replace
    r1 = minimize(params, g128, k128,
                  replace(base, init=GaussianSeed(center=(0.0, 0.0), width=1.5)))
    r2 = minimize(params, g128, k128,
                  replace(base, init=Q0Seed(profile=profile, b=2.0)))
    assert r1.converged and r2.converged
    assert r1.breakdown.total == pytest.approx(r2.breakdown.total, abs=1e-7)


def test_spreading_runs_flat(g128, k128):
    # no attraction, no gravity, no potential: the infimum 0 is not
    # attained; the flow spreads and must report non-convergence
    params = ModelParams(a=0.0, g=0.0, potential=Zero())
    with pytest.warns(RuntimeWarning):
        res = minimize(params, g128, k128, MinimizeOptions(max_iter=300))
    assert not res.converged
    assert res.breakdown.total >= 0.0


def test_supercritical_raises(consts, g128, k128):
    params = ModelParams(a=consts.a_star, g=1.0, potential=Zero())
    with pytest.raises(ValueError, match="unbounded"):
        minimize(params, g128, k128, MinimizeOptions(consts=consts))
    with pytest.raises(ValueError, match="unbounded"):
        minimize(ModelParams(a=2 * consts.a_star, g=0.0, potential=Zero()),
                 g128, k128, MinimizeOptions(consts=consts))


def test_two_site_tie_candidates(consts):
    # symmetric double well: one run per most-singular site, the two
    # candidate energies tie to rounding (near-degenerate doublet, so the
    # runs end unconverged; the bookkeeping is what is asserted)
    g = make_grid(4.0, 128)
    k = build_kernel(g)
    pot = SingularSum(points=(SingularTerm(z=(1.0, 0.0), p=1.2),
                              SingularTerm(z=(-1.0, 0.0), p=1.2)))
    params = ModelParams(a=0.5 * consts.a_star, g=0.5, potential=pot)
    with pytest.warns(RuntimeWarning):
        res = minimize(params, g, k,
                       MinimizeOptions(consts=consts, max_iter=1500))
    assert len(res.candidates) == 2
    sites = {z for z, _ in res.candidates}
    assert sites == {(1.0, 0.0), (-1.0, 0.0)}
    energies = [E for _, E in res.candidates]
    assert abs(energies[0] - energies[1]) <= 1e-8
    assert res.degenerate_tie
    # the winning field localizes at one of the two sites
    assert min(np.hypot(res.peak[0] - 1.0, res.peak[1]),
               np.hypot(res.peak[0] + 1.0, res.peak[1])) < 2 * g.h


def test_asymmetric_sites_pick_deeper(consts):
    # distinct exponents: the blow-up site set contains only the most
    # singular point, so the default policy runs once, seeded there; the
    # shallow far well leaves a slow tail mode, reported honestly as
    # non-convergence while the energy and peak are settled
    g = make_grid(4.0, 128)
    k = build_kernel(g)
    pot = SingularSum(points=(SingularTerm(z=(2.0, 0.0), p=1.2),
                              SingularTerm(z=(-2.0, 0.0), p=0.6)))
    params = ModelParams(a=0.5 * consts.a_star, g=0.5, potential=pot)
    with pytest.warns(RuntimeWarning):
        res = minimize(params, g, k,
                       MinimizeOptions(consts=consts, max_iter=1500))
    assert res.candidates == ()
    assert np.hypot(res.peak[0] - 2.0, res.peak[1]) < 2 * g.h
    assert not res.degenerate_tie


def test_energy_sequence_monotone(trap_result):
    res, _ = trap_result
    seq = res.energy_sequence
    slack = 4e-15 * max(1.0, abs(seq[-1]))
    assert np.all(np.diff(seq) <= slack)
    assert res.converged


def test_field_seed_grid_mismatch(g128, k128):
    other = make_grid(4.0, 64)
    u = normalize(make_field(other, np.ones((64, 64))))
    with pytest.raises(ValueError, match="different grid"):
        minimize(ModelParams(a=1.0, g=0.0, potential=Trap(q=2.0)),
                 g128, k128, MinimizeOptions(init=u))


def test_options_validation():
    with pytest.raises(ValueError):
        MinimizeOptions(max_iter=0)
    with pytest.raises(ValueError):
        MinimizeOptions(energy_tol=0.0)
    with pytest.raises(ValueError):
        MinimizeOptions(backtrack=1.5)
    with pytest.raises(ValueError):
        MinimizeOptions(tau0=-0.1)


def test_under_resolution_warning(consts):
    # weak-regime scale prediction fires when h cannot resolve 1/ell
    g = make_grid(8.0, 16)
    k = build_kernel(g)
    params = ModelParams(a=0.93 * consts.a_star, g=1.0, potential=Zero())
    with pytest.warns(RuntimeWarning, match="under-resolves"):
        minimize(params, g, k, MinimizeOptions(consts=consts, max_iter=2))
