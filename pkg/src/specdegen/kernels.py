"""Predicting transfer functions and kernels.

For a horizon ``n > 0`` and period ``P = m * nu`` the predictor transfer is

.. math:: \\hat H_n(z) = z^n V(z^P)^n, \\qquad
          V(z) = 1 - \\exp\\bigl(-\\gamma / (z + \\alpha)\\bigr), \\quad
          \\alpha = 1 - \\gamma^{-\\hat r}.

``V`` equals one away from ``z = -1`` for large ``gamma`` and blows up near
it, so ``H_n`` approximates the ``n``-step advance except near the roots of
``z^P = -1``.  Magnitudes reach ``10^{600}`` at moderate ``gamma``.  For that
reason every trace is computed as a complex logarithm and linearised with an
explicit clamp and overflow flag.

Kernel taps are available by two independent routes:

* :func:`predictor_kernel` inverts the transfer on a frequency grid;
* :func:`kernel_series` expands ``V(1/w)^n`` as a power series in ``w``,
  which gives the taps on the sparsity lattice exactly (in doubles with
  log-domain rescaling, or in arbitrary precision through :mod:`mpmath`).

The series rests on the three-term recurrence for the coefficients of
``exp(-g w / (1 + alpha w))``,

.. math:: (k+1) e_{k+1} = -(g + 2 \\alpha k) e_k - \\alpha^2 (k-1) e_{k-1},

which follows from differentiating the generating function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np

from .errors import ConfigurationError, KernelOverflowError, ResolutionError
from .spectral import (
    FrequencyGrid,
    Sequence,
    SpectrumTrace,
    _check_beta,
    chordal_distance,
    inv_ztrace,
    root_set,
)

__all__ = [
    "KernelSpec",
    "PredictKernel",
    "KernelSeries",
    "GapSpec",
    "SparsityReport",
    "CLAMP",
    "v_trace",
    "log_transfer",
    "predictor_transfer",
    "predictor_kernel",
    "kernel_series",
    "kernel_log10_norm",
    "gap_mask",
    "masked_transfer",
    "sparsity_report",
    "distance_curve",
]

CLAMP = 1e300
_LOG_CLAMP = math.log(CLAMP)
_EPS = np.finfo(float).eps

Precision = Literal["double", "extended"]


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of the predicting transfer ``z^n V(z^{m nu})^n``.

    Parameters
    ----------
    n : int
        Horizon; positive for causal prediction, negative for anti-causal.
    m, nu : int
        The period is ``m * nu``.
    gamma : float
        Sharpness; larger values approximate the shift better and inflate
        the kernel.
    rhat : float
        Exponent in ``alpha = 1 - gamma**(-rhat)``.
    beta : float
        Root-set angle in ``(-pi, pi]``; enters prediction only through
        modulation by ``theta``.
    """

    n: int
    m: int = 1
    nu: int = 4
    gamma: float = 3.0
    rhat: float = 1.2
    beta: float = math.pi

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n == 0:
            raise ConfigurationError(f"horizon must be a nonzero integer, got {self.n}")
        if int(self.m) != self.m or self.m < 1 or int(self.nu) != self.nu or self.nu < 1:
            raise ConfigurationError("m and nu must be positive integers")
        if not self.gamma > 0 or not math.isfinite(self.gamma):
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not self.rhat > 0:
            raise ConfigurationError(f"rhat must be positive, got {self.rhat}")
        _check_beta(self.beta)
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(
                f"alpha = 1 - gamma^-rhat = {self.alpha} must lie in (0, 1); use gamma > 1"
            )

    @property
    def m_nu(self) -> int:
        return int(self.m * self.nu)

    @property
    def alpha(self) -> float:
        return 1.0 - self.gamma ** (-self.rhat)

    @property
    def theta(self) -> float:
        """Modulation frequency ``(beta - pi) / (m nu)``."""
        return (self.beta - math.pi) / self.m_nu

    def with_horizon(self, n: int) -> "KernelSpec":
        return KernelSpec(n, self.m, self.nu, self.gamma, self.rhat, self.beta)

    def with_gamma(self, gamma: float) -> "KernelSpec":
        return KernelSpec(self.n, self.m, self.nu, gamma, self.rhat, self.beta)

    @property
    def first_index(self) -> int:
        """Index closest to zero that can carry a nonzero tap: ``n P - n``."""
        k = abs(self.n) * self.m_nu - abs(self.n)
        return k if self.n > 0 else -k


# ---------------------------------------------------------------------------
# Log-domain transfer evaluation
# ---------------------------------------------------------------------------


def _log_one_minus_exp(u: np.ndarray) -> np.ndarray:
    """``log(1 - exp(u))`` for complex ``u`` without overflow."""
    out = np.empty_like(u)
    neg = u.real <= 0
    with np.errstate(divide="ignore"):
        out[neg] = np.log(-np.expm1(u[neg]))
        pos = ~neg
        out[pos] = u[pos] + np.log(np.expm1(-u[pos]))
    return out


def _log_v(phi: np.ndarray, gamma: float, alpha: float) -> np.ndarray:
    denom = np.exp(1j * phi) + alpha
    if np.min(np.abs(denom)) < 1e-300:
        raise ConfigurationError("grid node coincides with the pole of V")
    return _log_one_minus_exp(-gamma / denom)


def log_transfer(spec: KernelSpec, omega) -> np.ndarray:
    """Complex log of ``H_n(e^{iw})``; anti-causal horizons use ``w -> -w``.

    Only ``exp`` of the result is meaningful; the imaginary part is not
    reduced to a principal branch.
    """
    w = np.asarray(omega, dtype=float)
    k = abs(spec.n)
    sw = w if spec.n > 0 else -w
    return 1j * k * sw + k * _log_v(spec.m_nu * sw, spec.gamma, spec.alpha)


def _linearize(logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    over = logs.real > _LOG_CLAMP
    safe = np.where(over, _LOG_CLAMP + 1j * logs.imag, logs)
    with np.errstate(under="ignore"):
        return np.exp(safe), over


def v_trace(spec: KernelSpec, grid: FrequencyGrid) -> SpectrumTrace:
    """``V(e^{i w P})`` on the grid, with log values and overflow flags."""
    logs = _log_v(spec.m_nu * grid.nodes, spec.gamma, spec.alpha)
    vals, over = _linearize(logs)
    return SpectrumTrace(grid, vals, logs, over)


def predictor_transfer(spec: KernelSpec, grid: FrequencyGrid) -> SpectrumTrace:
    """``H_n(e^{i w}) = e^{i n w} V(e^{i w P})^n`` on the grid.

    Linear values are clamped at magnitude ``CLAMP`` with per-node overflow
    flags; ``log_values`` holds the exact complex logarithm.
    """
    logs = log_transfer(spec, grid.nodes)
    vals, over = _linearize(logs)
    return SpectrumTrace(grid, vals, logs, over)


def distance_curve(spec: KernelSpec, grid: FrequencyGrid) -> SpectrumTrace:
    """``|H_n(e^{iw}) - e^{inw}|`` at every node (real values).

    Computed as ``|expm1(|n| log V)|``, accurate where the distance is tiny.
    Overflowing nodes are clamped and flagged.
    """
    k = abs(spec.n)
    sw = grid.nodes if spec.n > 0 else -grid.nodes
    nlogv = k * _log_v(spec.m_nu * sw, spec.gamma, spec.alpha)
    over = nlogv.real > _LOG_CLAMP
    safe = np.where(over, 0.0, nlogv)
    dist = np.abs(np.expm1(safe))
    dist = np.where(over, CLAMP, dist)
    return SpectrumTrace(grid, dist, None, over)


# ---------------------------------------------------------------------------
# Exact lattice series
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelSeries:
    """Exact kernel taps on the sparsity lattice.

    ``index[k]`` is the time index of lattice coefficient ``k``; the tap
    value is ``sign[k] * exp(log_abs[k])``.  In extended precision
    ``mp_values`` holds the :mod:`mpmath` numbers.
    """

    spec: KernelSpec
    index: np.ndarray
    sign: np.ndarray
    log_abs: np.ndarray
    mp_values: list | None = None
    dps: int | None = None

    @property
    def log10_sup_norm(self) -> float:
        if self.mp_values is not None:
            top = max((abs(v) for v in self.mp_values), default=mpmath.mpf(0))
            return float(mpmath.log10(top)) if top else -math.inf
        return float(np.max(self.log_abs)) / math.log(10.0)

    @property
    def representable(self) -> bool:
        return float(np.max(self.log_abs)) <= _LOG_CLAMP

    def values(self) -> np.ndarray:
        """Tap values as doubles.

        Raises
        ------
        KernelOverflowError
            If some tap exceeds ``CLAMP``.
        """
        if not self.representable:
            raise KernelOverflowError(
                f"kernel taps reach 10^{self.log10_sup_norm:.1f}, beyond double range",
                self.log10_sup_norm,
            )
        with np.errstate(under="ignore"):
            return self.sign * np.exp(self.log_abs)

    def to_sequence(self) -> Sequence:
        """Taps as a dense :class:`Sequence` (zeros off the lattice)."""
        vals = self.values()
        idx = self.index
        lo, hi = int(idx.min()), int(idx.max())
        out = np.zeros(hi - lo + 1)
        out[idx - lo] = vals
        return Sequence(lo, out)


def _series_double(g: float, alpha: float, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Signs and log magnitudes of the first ``K`` coefficients of ``exp(-g w/(1+alpha w))``."""
    sign = np.zeros(K)
    logabs = np.full(K, -math.inf)
    e_prev, e_cur, scale = 0.0, 1.0, 0.0
    sign[0], logabs[0] = 1.0, 0.0
    a2 = alpha * alpha
    for k in range(K - 1):
        e_next = -((g + 2.0 * alpha * k) * e_cur + a2 * (k - 1) * e_prev) / (k + 1)
        e_prev, e_cur = e_cur, e_next
        mag = abs(e_cur)
        if mag > 1e150 or 0.0 < mag < 1e-150:
            s = math.log(mag)
            e_prev /= mag
            e_cur /= mag
            scale += s
            mag = 1.0
        if mag:
            sign[k + 1] = 1.0 if e_cur > 0 else -1.0
            logabs[k + 1] = math.log(mag) + scale
    return sign, logabs


def _combine_double(n: int, parts: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    # w_k = sum_j C(n, j) (-1)^j e^{(j gamma)}_k, with e^{(0)} = delta_k0.
    K = parts[0][0].size
    logs = np.vstack([p[1] + math.log(math.comb(n, j + 1)) for j, p in enumerate(parts)])
    signs = np.vstack([p[0] * (-1.0) ** (j + 1) for j, p in enumerate(parts)])
    top = np.max(logs, axis=0)
    top_safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(under="ignore"):
        total = np.sum(signs * np.exp(logs - top_safe), axis=0)
    total[0] += math.exp(-top_safe[0])
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(total)) + top_safe
    return np.sign(total), la


def _terms_needed(n: int, gamma: float, alpha: float, tail: float, max_terms: int) -> int:
    """Series length after which every component has decayed below ``tail`` times its peak."""
    K = 1024
    while True:
        sign, la = _series_double(n * gamma, alpha, K)
        peak = float(np.max(la))
        kpk = int(np.argmax(la))
        cut = peak + math.log(tail)
        above = np.flatnonzero(la[kpk:] > cut)
        last = kpk + (int(above[-1]) if above.size else 0)
        if last < K - 64:
            return last + 2
        if K >= max_terms:
            raise ConfigurationError(
                f"kernel series has not decayed after {max_terms} terms; raise max_terms"
            )
        K = min(4 * K, max_terms)


def kernel_series(
    spec: KernelSpec,
    precision: Precision = "double",
    *,
    count: int | None = None,
    tail: float = 1e-18,
    dps: int = 50,
    max_terms: int = 4_000_000,
) -> KernelSeries:
    """Exact lattice taps of ``H_n`` from the power series of ``V^n``.

    Parameters
    ----------
    spec : KernelSpec
    precision : {"double", "extended"}
        ``"double"`` runs the recurrence in floating point with log-domain
        rescaling, ``"extended"`` in :mod:`mpmath` with ``dps`` digits.
    count : int, optional
        Number of lattice coefficients; chosen automatically so that the
        remaining tail is below ``tail`` times the peak.
    """
    n = abs(spec.n)
    P = spec.m_nu
    a = spec.alpha
    if count is None:
        count = _terms_needed(n, spec.gamma, a, tail, max_terms)
    ks = np.arange(count)
    step = 1 if spec.n > 0 else -1
    index = step * (ks * P - n)
    if precision == "double":
        parts = [_series_double(j * spec.gamma, a, count) for j in range(1, n + 1)]
        sign, la = _combine_double(n, parts)
        return KernelSeries(spec, index, sign, la)
    if precision != "extended":
        raise ConfigurationError(f"unknown precision {precision!r}")
    with mpmath.workdps(dps):
        am = mpmath.mpf(1) - mpmath.mpf(spec.gamma) ** (-mpmath.mpf(spec.rhat))
        total = [mpmath.mpf(0)] * count
        total[0] = mpmath.mpf(1)
        a2 = am * am
        for j in range(1, n + 1):
            g = j * mpmath.mpf(spec.gamma)
            coef = math.comb(n, j) * (-1) ** j
            e_prev, e_cur = mpmath.mpf(0), mpmath.mpf(1)
            total[0] += coef
            for k in range(count - 1):
                e_next = -((g + 2 * am * k) * e_cur + a2 * (k - 1) * e_prev) / (k + 1)
                e_prev, e_cur = e_cur, e_next
                total[k + 1] += coef * e_cur
        sign = np.array([float(mpmath.sign(v)) for v in total])
        la = np.array([float(mpmath.log(abs(v))) if v else -math.inf for v in total])
    return KernelSeries(spec, index, sign, la, total, dps)


def kernel_log10_norm(spec: KernelSpec, precision: Precision = "double", **kw) -> float:
    """``log10 sup_k |h_n(k)|`` from the exact series."""
    return kernel_series(spec, precision, **kw).log10_sup_norm


# ---------------------------------------------------------------------------
# Grid kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PredictKernel:
    """Kernel taps from numerical inversion of the transfer.

    Attributes
    ----------
    taps : Sequence or None
        Taps on the support window; ``None`` when the transfer overflowed.
    sup_norm, log10_sup_norm : float
        From the taps when available, otherwise from the exact series.
    overflow : bool
        Set when the grid taps are unreliable: the transfer overflowed, the
        kernel wraps around the grid, or roundoff swamps the tail.
    aliasing_residual : float
        Largest tap on the wrong side of zero relative to ``sup_norm``.
    noise_floor : float
        Estimated absolute roundoff level of the taps.
    """

    spec: KernelSpec
    taps: Sequence | None
    sup_norm: float
    log10_sup_norm: float
    overflow: bool = False
    aliasing_residual: float = 0.0
    noise_floor: float = 0.0


def predictor_kernel(
    spec: KernelSpec,
    grid: FrequencyGrid,
    support: tuple[int, int] | None = None,
    *,
    tail_tol: float = 1e-12,
    strict: bool = True,
    reliability: float = 1e-8,
) -> PredictKernel:
    """Taps ``h_n = Z^{-1} H_n`` by quadrature on ``grid``.

    Parameters
    ----------
    support : (int, int), optional
        Inclusive window of returned taps.  By default it starts at ``-P``
        on the near side of zero and extends to the last tap above
        ``tail_tol * sup``, capped by the grid.
    strict : bool
        Raise :class:`KernelOverflowError` instead of returning a flagged
        kernel.
    reliability : float
        Largest acceptable relative aliasing residual or roundoff floor.

    Raises
    ------
    KernelOverflowError
        In strict mode, when the taps are unreliable in double precision.
    ResolutionError
        If ``support`` does not fit in the grid window.
    """
    T = predictor_transfer(spec, grid)
    lo_full, hi_full = grid.full_window
    if T.any_overflow:
        est = kernel_log10_norm(spec)
        msg = f"transfer exceeds {CLAMP:g} on {int(T.overflow.sum())} nodes; log10 norm ~ {est:.2f}"
        if strict:
            raise KernelOverflowError(msg, est)
        sup = 10.0**est if est < 308 else math.inf
        return PredictKernel(spec, None, sup, est, True, math.nan, math.nan)
    full = inv_ztrace(T, (lo_full, hi_full))
    mag = np.abs(full.samples)
    sup = float(mag.max())
    idx = full.indices
    wrong = idx < 0 if spec.n > 0 else idx > 0
    alias = float(mag[wrong].max() / sup) if sup > 0 else 0.0
    rms = math.sqrt(float(np.mean(np.abs(T.values) ** 2)))
    cond = math.log2(grid.size) + float(np.max(np.abs(T.log_values.real)))
    floor = _EPS * cond * rms / math.sqrt(grid.size)
    unreliable = alias > reliability or floor > reliability * sup
    if unreliable and strict:
        est = kernel_log10_norm(spec)
        raise KernelOverflowError(
            f"grid of {grid.size} cannot resolve the kernel (aliasing {alias:.2e}, "
            f"roundoff floor {floor / sup:.2e} of sup); log10 norm ~ {est:.2f}",
            est,
        )
    P = spec.m_nu
    if support is None:
        big = np.flatnonzero(mag > tail_tol * sup)
        if spec.n > 0:
            lo, hi = -P, int(idx[big[-1]]) if big.size else 0
        else:
            lo, hi = int(idx[big[0]]) if big.size else 0, P
        lo, hi = max(lo, lo_full), min(hi, hi_full)
    else:
        lo, hi = int(support[0]), int(support[1])
        if lo < lo_full or hi > hi_full:
            raise ResolutionError(f"support [{lo}, {hi}] exceeds grid window [{lo_full}, {hi_full}]")
    taps = full.on(lo, hi)
    tsup = float(np.max(np.abs(taps.samples))) if len(taps) else 0.0
    log10 = math.log10(tsup) if tsup > 0 else -math.inf
    return PredictKernel(spec, taps, tsup, log10, bool(unreliable), alias, floor)


# ---------------------------------------------------------------------------
# Gaps and masks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapSpec:
    """Closed chordal arcs of half-width ``delta`` around ``R_{n_total, beta}``."""

    delta: float
    n_total: int
    beta: float = math.pi

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ConfigurationError(f"gap half-width must be positive, got {self.delta}")
        if int(self.n_total) != self.n_total or self.n_total < 1:
            raise ConfigurationError("n_total must be a positive integer")
        _check_beta(self.beta)


def gap_mask(gap: GapSpec, grid: FrequencyGrid) -> np.ndarray:
    """Boolean mask of grid nodes inside the gap arcs."""
    roots = root_set(gap.n_total, gap.beta).as_array()
    d = chordal_distance(grid.nodes[None, :], roots[:, None])
    return np.any(d <= gap.delta, axis=0)


def masked_transfer(spec: KernelSpec, gap: GapSpec, grid: FrequencyGrid) -> SpectrumTrace:
    """``H_n`` on nodes outside the gap arcs and zero inside them.

    The retained region is the complement of the gaps, which is where the
    gap-class test signals carry their spectrum.

    Raises
    ------
    ConfigurationError
        If the gaps cover every node.
    """
    keep = ~gap_mask(gap, grid)
    if not keep.any():
        raise ConfigurationError("gap arcs cover the whole circle; nothing retained")
    logs = log_transfer(spec, grid.nodes)
    logs = np.where(keep, logs, -np.inf + 0j)
    vals, over = _linearize(np.where(keep, logs, 0.0))
    vals = np.where(keep, vals, 0.0)
    over &= keep
    return SpectrumTrace(grid, vals, logs, over)


# ---------------------------------------------------------------------------
# Sparsity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparsityReport:
    on_lattice_energy_fraction: float
    max_off_lattice_ratio: float
    first_nonzero_index: int | None
    all_zero: bool = False


def on_lattice(spec: KernelSpec, k) -> np.ndarray:
    """Whether indices ``k`` lie on ``{(|n| + j) P - |n| : j >= 0}`` (mirrored for ``n < 0``)."""
    k = np.asarray(k)
    n, P = abs(spec.n), spec.m_nu
    kk = k if spec.n > 0 else -k
    return (np.mod(kk + n, P) == 0) & (kk >= n * P - n)


def sparsity_report(kern: PredictKernel, tol: float = 1e-12) -> SparsityReport:
    """Energy on the sparsity lattice and the first significant lattice tap."""
    if kern.taps is None:
        raise KernelOverflowError("kernel has no taps to inspect", kern.log10_sup_norm)
    taps = kern.taps
    mag = np.abs(taps.samples)
    sup = float(mag.max()) if mag.size else 0.0
    if sup == 0.0:
        return SparsityReport(1.0, 0.0, None, True)
    lat = on_lattice(kern.spec, taps.indices)
    energy = float(np.sum(mag**2))
    frac = float(np.sum(mag[lat] ** 2) / energy)
    off = float(mag[~lat].max() / sup) if (~lat).any() else 0.0
    sig = np.flatnonzero(lat & (mag > tol * sup))
    first = None
    if sig.size:
        cand = taps.indices[sig]
        first = int(cand.min()) if kern.spec.n > 0 else int(cand.max())
    return SparsityReport(frac, off, first, False)
