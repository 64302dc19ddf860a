import math

import numpy as np
import pytest

from oracles import random_sequence
from specdegen.classes import (
    BraidedSpec,
    bandstop_project,
    braid_L,
    braided_approximant,
    detect_degeneracy,
    disjointness_check,
    nu_scheme,
    root_separation,
)
from specdegen.errors import ConfigurationError
from specdegen.kernels import GapSpec, gap_mask
from specdegen.seqops import braid_assemble, subsequence
from specdegen.spectral import ClassSpec, Sequence, WeightParams, make_grid, membership_value, ztrace

GAP = GapSpec(0.5, 4)


def _full(g, x):
    lo, hi = g.full_window
    return x.on(lo, hi)


# -- band-stop projection -------------------------------------------------------


def test_projection_zeroes_gap_nodes(grid, rng):
    y = bandstop_project(random_sequence(rng, 64, -32), GAP, grid)
    X = ztrace(y, grid).values
    assert np.max(np.abs(X[gap_mask(GAP, grid)])) <= 1e-12


def test_projection_is_orthogonal(grid, rng):
    x = _full(grid, random_sequence(rng, 64, -32))
    z = _full(grid, random_sequence(rng, 64, -10))
    px, pz = bandstop_project(x, GAP, grid), bandstop_project(z, GAP, grid)
    assert bandstop_project(px, GAP, grid).max_abs_diff(px) <= 1e-10
    assert px.norm() <= x.norm()
    lhs = np.vdot(z(px.indices), px.samples)
    rhs = np.vdot(pz.samples, x(pz.indices))
    assert abs(lhs - rhs) <= 1e-9 * x.norm() * z.norm()


def test_projection_leaves_gap_free_signal(grid, rng):
    y = bandstop_project(random_sequence(rng, 64, -32), GAP, grid)
    assert bandstop_project(y, GAP, grid).max_abs_diff(y) <= 1e-10


def test_projection_full_cover_rejected(grid):
    with pytest.raises(ConfigurationError):
        bandstop_project(Sequence.impulse(0), GapSpec(2.0, 4), grid)


def test_gap_members_have_finite_membership(grid, rng):
    x = _full(grid, random_sequence(rng, 64, -32, real=True))
    spec = ClassSpec(4, math.pi, WeightParams(2.0, 0.05), 1.0)
    assert membership_value(x, spec, grid) == math.inf
    v = membership_value(bandstop_project(x, GAP, grid), spec, grid)
    assert math.isfinite(v)
    # outside the gaps rho^2 <= exp(2c / delta^q); the integral of |X|^2 is 2 pi ||x||^2
    assert v <= 2 * math.pi * math.exp(2 * 0.05 / 0.5**2) * x.norm() ** 2


# -- nu scheme and disjointness -------------------------------------------------


def test_nu_scheme_examples():
    assert nu_scheme(1) == {0: 1}
    assert nu_scheme(2) == {-1: 4, 0: 1, 1: 2}
    assert nu_scheme(3) == {-2: 8, -1: 16, 0: 1, 1: 2, 2: 4}


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_nu_scheme_disjoint(m):
    assert disjointness_check(m, nu_scheme(m), math.pi)


def test_equal_nu_not_disjoint():
    for m in (2, 3):
        nu = {d: 2 for d in range(-m + 1, m)}
        assert not disjointness_check(m, nu, math.pi)
        assert not disjointness_check(m, nu, 1.0)


def test_single_phase_trivially_disjoint():
    assert disjointness_check(1, {0: 5}, 0.3)


def test_braid_L_makes_weight_one_between_neighbourhoods():
    m, q = 2, 1.1
    nu = nu_scheme(m)
    L = braid_L(m, nu, math.pi, q)
    half = 0.5 * root_separation(m, nu, math.pi)
    assert math.log(L) == pytest.approx(1.0 / half**q)


def test_braided_spec_validation():
    with pytest.raises(ConfigurationError):
        BraidedSpec(2, {0: 1, 1: 2})
    with pytest.raises(ConfigurationError):
        BraidedSpec(0)
    assert BraidedSpec(2).nu == nu_scheme(2)


# -- braided approximant ----------------------------------------------------------


def test_approximant_of_zero(grid):
    spec = BraidedSpec.with_default_L(2, 0.01)
    x_hat, cert, _ = braided_approximant(Sequence.zeros(-5, 5), spec, grid)
    assert x_hat.norm() == 0
    assert cert.distance == 0 and cert.passed


def test_approximant_rejects_overlapping_roots(grid):
    spec = BraidedSpec(2, {-1: 1, 0: 1, 1: 1})
    with pytest.raises(ConfigurationError):
        braided_approximant(Sequence.impulse(0), spec, grid)


def test_approximant_braid_agreements(grid14, rng):
    x = random_sequence(rng, 64, -32)
    spec = BraidedSpec.with_default_L(2, 0.01, r=4 * math.pi * x.norm() ** 2)
    x_hat, cert, xi = braided_approximant(x, spec, grid14)
    assert braid_assemble(xi, 2, check=True, tol=1e-12).max_abs_diff(x_hat) == 0.0
    assert cert.arho_max <= 1.0 + 1e-9


def test_density_ladder(grid14, rng):
    x = random_sequence(rng, 64, -32)
    r = 4 * math.pi * x.norm() ** 2
    dists = []
    for c in (0.1, 0.01, 0.001):
        spec = BraidedSpec.with_default_L(2, c, r=r)
        _, cert, _ = braided_approximant(x, spec, grid14)
        assert cert.passed, cert.failed_phases
        dists.append(cert.relative_distance)
    assert dists[0] > dists[1] > dists[2]


def test_certificate_reports_failed_phase(grid14, rng):
    x = random_sequence(rng, 64, -32)
    spec = BraidedSpec.with_default_L(2, 0.01, r=1e-6)
    _, cert, _ = braided_approximant(x, spec, grid14)
    assert not cert.passed
    assert set(cert.failed_phases) == {-1, 0, 1}
    assert cert.to_dict()["passed"] is False


# -- degeneracy detection ---------------------------------------------------------


@pytest.mark.parametrize("nu", [1, 2])
def test_detect_constructed_class(rng, nu):
    g = make_grid(1024)
    x = random_sequence(rng, 200, -100, real=True)
    y = bandstop_project(x, GapSpec(0.5, 2 * nu), g)
    yh = subsequence(y, 2, 1)
    w = WeightParams(2.0, 0.05)
    r1 = 2 * math.pi * math.exp(2 * 0.05 / 0.5**2) * x.norm() ** 2
    assert detect_degeneracy(yh, 2, 1, [1, 2, 4], w, r1, g) == nu


def test_detect_white_noise_is_none(rng):
    g = make_grid(1024)
    yh = random_sequence(rng, 50, -25, real=True)
    assert detect_degeneracy(yh, 2, 1, [1, 2, 4], WeightParams(2.0, 0.05), 1e3, g) is None


def test_detect_zero_picks_smallest(grid):
    assert detect_degeneracy(Sequence.zeros(-3, 3), 2, 0, [4, 2, 8], WeightParams(2.0, 1.0), 1e-9, grid) == 2
