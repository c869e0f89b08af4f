import numpy as np
import pytest

from gpgrav import (
    build_kernel,
    coords,
    dilate,
    gravity_energy,
    gravity_potential,
    make_field,
    make_grid,
    normalize,
    origin_cell_average,
    potential_of_density,
)


def gaussian(grid, width=1.0, center=(0.0, 0.0)):
    x = coords(grid)
    rr2 = (x[:, None] - center[0]) ** 2 + (x[None, :] - center[1]) ** 2
    return normalize(make_field(grid, np.exp(-rr2 / (2 * width**2))))


@pytest.fixture(scope="module")
def g256():
    return make_grid(8.0, 256)


@pytest.fixture(scope="module")
def k256(g256):
    return build_kernel(g256)


def test_gaussian_energy_oracle(g256, k256):
    # D(u) = sqrt(pi/2) for the normalized unit-width Gaussian
    u = gaussian(g256)
    assert gravity_energy(u, k256) == pytest.approx(np.sqrt(np.pi / 2), rel=5e-4)


def test_origin_cell_average_value():
    # integral of 1/|x| over the centered unit square is 4 log(1 + sqrt 2)
    h = 0.125
    assert origin_cell_average(h) * h == pytest.approx(
        4 * np.log(1 + np.sqrt(2)), rel=1e-12)


def test_energy_translation_invariant(g256, k256):
    u0 = gaussian(g256)
    u1 = gaussian(g256, center=(1.5, -2.25))
    e0 = gravity_energy(u0, k256)
    e1 = gravity_energy(u1, k256)
    assert e1 == pytest.approx(e0, rel=1e-10)


def test_energy_dilation_scaling(g256, k256):
    u = gaussian(g256)
    for ell in (0.5, 2.0):
        ud = dilate(u, ell, warn=False)
        assert gravity_energy(ud, k256) == pytest.approx(
            ell * gravity_energy(u, k256), rel=1e-3)


def test_potential_far_field(g256, k256):
    # far from a localized density the potential looks like total mass / r
    u = gaussian(g256, width=0.3)
    phi = gravity_potential(u, k256)
    x = coords(g256)
    i = int(np.argmin(np.abs(x - 5.0)))
    io = g256.n // 2
    r = abs(x[i])
    assert phi[i, io] == pytest.approx(1.0 / r, rel=1e-3)


def test_potential_positive_and_peaked(g256, k256):
    u = gaussian(g256)
    phi = gravity_potential(u, k256)
    assert phi.min() > 0
    io = g256.n // 2
    assert phi[io, io] == phi.max()


def test_free_space_no_wraparound(k256, g256):
    # an off-center blob must see no image charge through the boundary:
    # compare against the same blob centered, shifted back
    uc = gaussian(g256, width=0.5)
    us = gaussian(g256, width=0.5, center=(5.0, 5.0))
    pc = gravity_potential(uc, k256)
    ps = gravity_potential(us, k256)
    sh = int(round(5.0 / g256.h))
    back = np.roll(np.roll(ps, -sh, axis=0), -sh, axis=1)
    core = slice(g256.n // 2 - 40, g256.n // 2 + 40)
    assert np.max(np.abs(back[core, core] - pc[core, core])) < 1e-10


def test_potential_of_density_matches_field_route(g256, k256):
    u = gaussian(g256)
    a = gravity_potential(u, k256)
    b = potential_of_density(u.values**2, k256)
    assert np.max(np.abs(a - b)) < 1e-14


def test_kernel_grid_mismatch(k256):
    u = gaussian(make_grid(4.0, 128))
    with pytest.raises(ValueError):
        gravity_potential(u, k256)
