import math

import numpy as np
import pytest

from oracles import lattice_taps
from specdegen.errors import ConfigurationError, KernelOverflowError
from specdegen.kernels import (
    GapSpec,
    KernelSpec,
    PredictKernel,
    distance_curve,
    gap_mask,
    kernel_log10_norm,
    kernel_series,
    log_transfer,
    masked_transfer,
    predictor_kernel,
    predictor_transfer,
    sparsity_report,
    v_trace,
)
from specdegen.spectral import Sequence, SpectrumTrace, inv_ztrace, make_grid, ztrace

# Taps of z^2 V(z^4)^2 at gamma=3, rhat=1.2 from the mpmath Taylor oracle.
FROZEN_TAPS_G3 = {6: 9.0, 10: -40.183550629438616, 14: 121.05981176572138, 18: -300.22460802098749}
# 1 - exp(3^2.2), the value of V at a root of exp(4iw) = -1.
FROZEN_V_AT_ROOT_G3 = -73981.1004073311


def _v_at(spec, omega):
    w = np.atleast_1d(float(omega))
    return complex(np.exp(log_transfer(spec.with_horizon(1), w) - 1j * w)[0])


# -- KernelSpec ---------------------------------------------------------------


def test_alpha_and_theta():
    s = KernelSpec(2, 1, 4, 3.0, 1.2)
    assert s.alpha == pytest.approx(1 - 3.0**-1.2)
    assert s.theta == 0.0
    assert KernelSpec(1, 2, 1, 3.0, beta=1.0).theta == pytest.approx((1.0 - math.pi) / 2)
    assert s.first_index == 6


@pytest.mark.parametrize(
    "kw",
    [dict(n=0), dict(gamma=1.0), dict(gamma=-2.0), dict(rhat=0.0), dict(m=0), dict(nu=0), dict(beta=4.0)],
)
def test_kernel_spec_rejects(kw):
    base = dict(n=2, m=1, nu=4, gamma=3.0, rhat=1.2, beta=math.pi)
    base.update(kw)
    with pytest.raises(ConfigurationError):
        KernelSpec(**base)


# -- V and H ------------------------------------------------------------------


def test_v_tends_to_one_for_large_gamma():
    vals = [abs(_v_at(KernelSpec(1, 1, 2, g), 0.0) - 1) for g in (3.0, 10.0, 30.0, 100.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-20


def test_v_hand_value_at_root():
    v = _v_at(KernelSpec(1, 1, 4, 3.0, 1.2), math.pi / 4)
    assert v.real == pytest.approx(FROZEN_V_AT_ROOT_G3, rel=1e-12)
    assert abs(v.imag) < 1e-9 * abs(v.real)


def test_v_kernel_has_zero_constant_tap(grid):
    v = inv_ztrace(v_trace(KernelSpec(1, 1, 1, 3.0), grid), (-4, 4))
    assert abs(v(0)) < 1e-12 * v.norm(np.inf)


def test_transfer_is_ramp_times_v_power(grid):
    spec = KernelSpec(2, 1, 4, 3.0)
    H = predictor_transfer(spec, grid)
    V = v_trace(spec, grid)
    np.testing.assert_allclose(H.values, np.exp(2j * grid.nodes) * V.values**2, rtol=1e-9)
    assert not H.any_overflow


def test_transfer_conjugate_symmetry(grid):
    H = predictor_transfer(KernelSpec(2, 1, 4, 6.0), grid).values
    # nodes are symmetric about zero: w_j = -w_{N-1-j}
    np.testing.assert_allclose(H[::-1], np.conj(H), rtol=1e-9)


def test_transfer_overflow_is_flagged_not_inf(grid):
    H = predictor_transfer(KernelSpec(2, 1, 4, 20.0), grid)
    assert H.any_overflow
    assert np.all(np.isfinite(H.values))
    assert np.all(np.isfinite(H.log_values))


def test_bounded_off_peak(grid):
    for g in (3.0, 6.0, 10.0, 20.0):
        spec = KernelSpec(1, 1, 4, g)
        phi = 4 * grid.nodes
        arg = g / (np.exp(1j * phi) + spec.alpha)
        keep = arg.real > 0
        V = v_trace(spec, grid).values
        assert np.max(np.abs(V[keep] - 1)) <= 2.0


def test_anticausal_transfer_is_reflection(grid):
    pos = log_transfer(KernelSpec(2, 1, 4, 3.0), grid.nodes)
    neg = log_transfer(KernelSpec(-2, 1, 4, 3.0), -grid.nodes)
    np.testing.assert_allclose(np.exp(pos), np.exp(neg), rtol=1e-12)


# -- distance curves ----------------------------------------------------------


def test_distance_zero_where_v_is_one(grid):
    spec = KernelSpec(2, 1, 4, 3.0)
    d = distance_curve(spec, grid).values
    H = predictor_transfer(spec, grid).values
    np.testing.assert_allclose(d, np.abs(H - np.exp(2j * grid.nodes)), rtol=1e-6, atol=1e-12)


def test_distance_monotone_on_interior_arc(grid):
    arc = np.abs(np.exp(4j * grid.nodes) + 1) >= 0.5
    prev = None
    for g in (3.0, 6.0, 10.0, 20.0):
        d = distance_curve(KernelSpec(2, 1, 4, g), grid).values
        if prev is not None:
            assert np.all(d[arc] <= prev[arc] + 1e-12)
        prev = d


def test_distance_spikes_near_roots(grid):
    d = distance_curve(KernelSpec(2, 1, 4, 3.0), grid).values
    interior = np.abs(np.exp(4j * grid.nodes) + 1) >= 0.5
    assert d.max() > 1e3 * d[interior].max()


# -- exact series -------------------------------------------------------------


def test_series_matches_taylor_oracle():
    ser = kernel_series(KernelSpec(2, 1, 4, 3.0, 1.2))
    vals = dict(zip(ser.index.tolist(), ser.values().tolist()))
    for k, v in FROZEN_TAPS_G3.items():
        assert vals[k] == pytest.approx(v, rel=1e-12)


@pytest.mark.parametrize("n,m_nu,gamma", [(1, 2, 3.0), (3, 6, 2.5), (2, 4, 6.0), (1, 8, 4.0)])
def test_series_matches_taylor_oracle_live(n, m_nu, gamma):
    ref = lattice_taps(n, m_nu, gamma, 1.2, 10)
    ser = kernel_series(KernelSpec(n, 1, m_nu, gamma, 1.2))
    vals = dict(zip(ser.index.tolist(), ser.values().tolist()))
    scale = max(abs(v) for v in ref.values())
    for k, v in ref.items():
        assert vals.get(k, 0.0) == pytest.approx(v, abs=1e-11 * scale)


def test_series_extended_agrees_with_double():
    spec = KernelSpec(2, 1, 4, 6.0)
    a = kernel_log10_norm(spec, "double")
    b = kernel_log10_norm(spec, "extended")
    assert a == pytest.approx(b, abs=1e-9)


def test_series_norm_grows_with_gamma():
    norms = [kernel_log10_norm(KernelSpec(2, 1, 4, g)) for g in (3.0, 6.0, 10.0)]
    assert norms[0] < norms[1] < norms[2]


def test_series_unrepresentable_values_raise():
    ser = kernel_series(KernelSpec(2, 1, 4, 20.0))
    assert ser.log10_sup_norm > 308
    assert not ser.representable
    with pytest.raises(KernelOverflowError):
        ser.values()


# -- grid kernels -------------------------------------------------------------


@pytest.mark.parametrize("n,m_nu", [(1, 2), (2, 4), (3, 6)])
def test_kernel_structure(grid14, n, m_nu):
    kern = predictor_kernel(KernelSpec(n, 1, m_nu, 3.0), grid14)
    taps, sup = kern.taps, kern.sup_norm
    assert sup == pytest.approx(np.max(np.abs(taps.samples)))
    neg = taps.indices < 0
    assert np.max(np.abs(taps.samples[neg])) <= 1e-10 * sup
    assert np.max(np.abs(taps.samples.imag)) <= 1e-9 * sup
    rep = sparsity_report(kern)
    assert rep.on_lattice_energy_fraction >= 1 - 1e-8
    assert rep.max_off_lattice_ratio <= 1e-8
    assert rep.first_nonzero_index == n * m_nu - n


def test_kernel_n2_taps_on_lattice(grid14):
    kern = predictor_kernel(KernelSpec(2, 1, 4, 3.0), grid14)
    big = kern.taps.indices[np.abs(kern.taps.samples) > 1e-8 * kern.sup_norm]
    assert big.min() == 6
    assert set(np.mod(big - 6, 4)) == {0}


def test_grid_kernel_matches_series(grid14):
    spec = KernelSpec(2, 1, 4, 3.0)
    kern = predictor_kernel(spec, grid14)
    ser = kernel_series(spec).to_sequence()
    assert kern.taps.max_abs_diff(ser.on(kern.taps.start, kern.taps.stop)) <= 1e-9 * kern.sup_norm


def test_anticausal_kernel_mirrors_causal(grid14):
    a = predictor_kernel(KernelSpec(2, 1, 4, 3.0), grid14)
    b = predictor_kernel(KernelSpec(-2, 1, 4, 3.0), grid14)
    np.testing.assert_allclose(b.taps(-a.taps.indices), a.taps.samples, atol=1e-9 * a.sup_norm)


def test_kernel_overflow_carries_norm(grid14):
    with pytest.raises(KernelOverflowError) as info:
        predictor_kernel(KernelSpec(2, 1, 4, 20.0), grid14)
    assert info.value.log10_norm == pytest.approx(kernel_log10_norm(KernelSpec(2, 1, 4, 20.0)))
    kern = predictor_kernel(KernelSpec(2, 1, 4, 20.0), grid14, strict=False)
    assert kern.overflow and kern.taps is None


def test_kernel_flags_unresolved_grid(grid14):
    kern = predictor_kernel(KernelSpec(2, 1, 4, 10.0), grid14, strict=False)
    assert kern.overflow


def test_sparsity_report_zero_kernel():
    spec = KernelSpec(2, 1, 4, 3.0)
    kern = PredictKernel(spec, Sequence.zeros(0, 8), 0.0, -math.inf)
    rep = sparsity_report(kern)
    assert rep.all_zero and rep.first_nonzero_index is None


# -- masks --------------------------------------------------------------------


def test_gap_mask_contains_roots(grid):
    mask = gap_mask(GapSpec(0.5, 4), grid)
    near = np.min(np.abs(np.exp(1j * grid.nodes)[:, None] - np.exp(1j * np.array([-3, -1, 1, 3]) * math.pi / 4)[None, :]), axis=1)
    np.testing.assert_array_equal(mask, near <= 0.5)


def test_masked_transfer_definition(grid):
    spec = KernelSpec(2, 1, 4, 3.0)
    gap = GapSpec(0.5, 4)
    H = predictor_transfer(spec, grid).values
    Ht = masked_transfer(spec, gap, grid).values
    keep = ~gap_mask(gap, grid)
    np.testing.assert_array_equal(Ht[keep], H[keep])
    assert np.all(Ht[~keep] == 0)


def test_masked_equals_full_on_retained_support(grid, rng):
    spec = KernelSpec(2, 1, 4, 3.0)
    gap = GapSpec(0.5, 4)
    keep = ~gap_mask(gap, grid)
    X = (rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)) * keep
    Xt = SpectrumTrace(grid, X)
    a = inv_ztrace(masked_transfer(spec, gap, grid) * Xt, (-50, 50))
    b = inv_ztrace(predictor_transfer(spec, grid) * Xt, (-50, 50))
    assert a.max_abs_diff(b) <= 1e-8


def test_masked_transfer_full_cover_rejected(grid):
    with pytest.raises(ConfigurationError):
        masked_transfer(KernelSpec(2, 1, 4, 3.0), GapSpec(2.0, 4), grid)


def test_masked_transfer_stays_finite_at_large_gamma(grid):
    H = masked_transfer(KernelSpec(2, 1, 4, 20.0), GapSpec(0.5, 4), grid)
    assert not H.any_overflow
    assert np.all(np.isfinite(H.values))


def test_ztrace_of_series_kernel_reproduces_transfer():
    g = make_grid(2**13)
    spec = KernelSpec(1, 1, 2, 3.0)
    taps = kernel_series(spec).to_sequence().trimmed(1e-30)
    X = ztrace(taps.on(taps.start, min(taps.stop, g.full_window[1])), g).values
    H = predictor_transfer(spec, g).values
    assert np.max(np.abs(X - H)) <= 1e-8 * np.max(np.abs(H))
