"""Prediction and recovery built on the predicting kernels.

Conventions
-----------
All predictors return a :class:`~specdegen.spectral.Sequence` of estimates
indexed by the time they are *made*: ``E(t)`` approximates ``x(t + n)`` for a
horizon ``n``.  Recovery returns estimates indexed by the target itself.

A class with root angle ``beta`` is reduced to ``beta = pi`` by modulating
with ``exp(i theta t)``, ``theta = (beta - pi)/(m nu)``.  The kernel is then
applied and the result demodulated at the predicted time ``t + n``.

Error budgets follow the truncated-prediction bound.  An ℓ2 perturbation of
the observations of size ``sigma`` moves an estimate by at most
``sigma * (kappa + 1)``, with ``kappa = sup |H_n|``.  The noise,
truncation and roundoff contributions are reported separately so each can
be inspected on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np

from .classes import BraidedSpec
from .errors import ConfigurationError, SpanError
from .kernels import (
    GapSpec,
    KernelSeries,
    KernelSpec,
    kernel_series,
    log_transfer,
    masked_transfer,
    predictor_kernel,
)
from .seqops import decimate, modulate, phase_of, supersequence
from .spectral import FrequencyGrid, Sequence, inv_ztrace, normalize_angle, ztrace

__all__ = [
    "PredictionTask",
    "RobustTask",
    "RobustResult",
    "RecoveryResult",
    "TargetBudget",
    "predict",
    "predict_robust",
    "predict_subsequence",
    "predict_compound",
    "recover_from_subsequence",
    "recover_robust",
    "log10_kappa",
]

Method = Literal["kernel", "series", "masked"]
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class PredictionTask:
    """What to predict and from which observations.

    Parameters
    ----------
    kernel_spec : KernelSpec
        Its ``n`` is the horizon and its ``beta`` sets the modulation.
    targets : (int, int), optional
        Inclusive range of times ``t`` at which ``x(t + n)`` is estimated;
        the observation window by default.
    observation : (int, int), optional
        Inclusive range of usable samples; samples outside are ignored.
    """

    kernel_spec: KernelSpec
    targets: tuple[int, int] | None = None
    observation: tuple[int, int] | None = None

    @property
    def horizon(self) -> int:
        return self.kernel_spec.n

    @property
    def theta(self) -> float:
        return self.kernel_spec.theta


def _convolve_at(taps: Sequence, x: Sequence, lo: int, hi: int) -> Sequence:
    """``sum_s taps(t - s) x(s)`` for ``t`` in ``[lo, hi]``."""
    if len(taps) == 0 or len(x) == 0 or hi < lo:
        return Sequence.zeros(lo, hi)
    full = np.convolve(taps.samples, x.samples)
    return Sequence(taps.start + x.start, full).on(lo, hi)


def predict(
    x: Sequence,
    task: PredictionTask,
    grid: FrequencyGrid,
    method: Method = "kernel",
    delta: float = 0.5,
) -> Sequence:
    """Estimate ``x(t + n)`` for every target ``t``.

    Parameters
    ----------
    method : {"kernel", "series", "masked"}
        ``"kernel"`` convolves with grid-inverted taps (refusing unreliable
        kernels).  ``"series"`` uses the exact lattice taps.  ``"masked"``
        applies the transfer only outside gap arcs of half-width ``delta``
        around the roots, through the grid.  That route stays finite at any
        ``gamma`` but requires ``x`` to fit the grid.

    Raises
    ------
    KernelOverflowError
        When the kernel cannot be represented reliably in double precision.
    """
    spec = task.kernel_spec
    obs = x if task.observation is None else x.on(*task.observation)
    if task.targets is not None:
        lo, hi = task.targets
    elif len(obs):
        lo, hi = obs.start, obs.stop
    else:
        lo, hi = 0, -1
    xm = modulate(obs, spec.theta)
    if method == "kernel":
        taps = predictor_kernel(spec, grid).taps
        est = _convolve_at(taps, xm, lo, hi)
    elif method == "series":
        taps = kernel_series(spec).to_sequence()
        est = _convolve_at(taps, xm, lo, hi)
    elif method == "masked":
        H = masked_transfer(spec, GapSpec(delta, spec.m_nu, math.pi), grid)
        est = inv_ztrace(H * ztrace(xm, grid), (lo, hi))
    else:
        raise ConfigurationError(f"unknown prediction method {method!r}")
    # est(t) approximates exp(i theta (t + n)) x(t + n); demodulate at t + n
    return modulate(est, -spec.theta).scale(np.exp(-1j * spec.theta * spec.n))


def predict_subsequence(
    y: Sequence,
    m: int,
    s: int,
    kernel_spec: KernelSpec,
    grid: FrequencyGrid,
    method: Method = "kernel",
    delta: float = 0.5,
) -> Sequence:
    """Estimate ``y(k + n)`` from a subsequence ``y(k) = x(k m - s)``.

    ``kernel_spec.m * kernel_spec.nu`` is the period of the parent class and
    ``kernel_spec.n`` the horizon in steps of ``y``.  The sequence is
    embedded on the parent lattice and predicted ``n m`` parent steps ahead.
    """
    z = supersequence(y, m, s)
    parent = kernel_spec.with_horizon(kernel_spec.n * m)
    est = predict(z, PredictionTask(parent), grid, method, delta)
    if len(y) == 0:
        return Sequence(0, np.zeros(0))
    ks = y.indices
    return Sequence(y.start, est(ks * m - s))


def predict_compound(
    y: Sequence,
    m: int,
    phase_specs: dict[int, tuple[int, float]],
    grid: FrequencyGrid,
    *,
    n: int = 1,
    gamma: float = 3.0,
    rhat: float = 1.2,
    targets: tuple[int, int] | None = None,
    method: Method = "kernel",
    delta: float = 0.5,
) -> Sequence:
    """Estimate ``y(t + n)`` for a sequence interleaving ``m`` phase streams.

    Parameters
    ----------
    phase_specs : dict
        ``phase_specs[d] = (nu_d, beta_d)`` for ``d = 0 .. m-1``.  Phase
        ``d`` owns the times ``tau`` with ``(tau + d)/m`` integer.
    n : int
        Horizon in samples of ``y``.

    Notes
    -----
    The target ``t + n`` is predicted from the samples of its own phase
    only, using the kernel of period ``m nu_d`` modulated for ``beta_d``.
    The shortest kernel horizon that reaches back to time ``t`` is used.
    """
    if sorted(phase_specs) != list(range(m)):
        raise ConfigurationError(f"phase specs must cover d = 0..{m - 1}")
    if len(y) == 0:
        return Sequence(0, np.zeros(0))
    lo, hi = targets if targets is not None else (y.start, y.stop)
    t = np.arange(lo, hi + 1)
    out = np.zeros(t.size, dtype=np.complex128)
    for d, (nu, beta) in phase_specs.items():
        sel = np.mod(t + n + d, m) == 0
        if not sel.any():
            continue
        P = m * nu
        h = -(-n // P)  # ceil(n / P)
        spec = KernelSpec(h, m, nu, gamma, rhat, beta)
        stream = decimate(y, m, d)
        task = PredictionTask(spec, targets=(lo + n - h, hi + n - h))
        est = predict(stream, task, grid, method, delta)
        # est(u) approximates stream(u + h); the target tau = t + n equals u + h.
        out[sel] = est(t[sel] + n - h)
    return Sequence(lo, out)


# ---------------------------------------------------------------------------
# Robust prediction
# ---------------------------------------------------------------------------


def log10_kappa(spec: KernelSpec, grid: FrequencyGrid) -> float:
    """``log10 sup |H_n|`` over the grid, from the log-domain transfer."""
    return float(np.max(log_transfer(spec, grid.nodes).real)) / math.log(10.0)


def _kappa(lk: float) -> float:
    return 10.0**lk if lk < 308 else math.inf


@dataclass(frozen=True)
class RobustTask:
    """Targets ``[-M, M]`` predicted from observations ``M < |k| <= N`` on ``m Z``.

    ``s`` further excludes ``|k| <= s`` (only relevant when ``s > M``).
    ``noise_radius`` is the ℓ2 radius of additive observation noise assumed
    in the budget; ``energy`` bounds the ℓ2 norm of the unobserved tail (the
    norm of the supplied observations is used when omitted).
    """

    M: int
    N: int
    s: int = 0
    noise_radius: float = 0.0
    m: int = 1
    energy: float | None = None

    def __post_init__(self) -> None:
        if not (self.N > self.M >= 0):
            raise ConfigurationError(f"need N > M >= 0, got M={self.M}, N={self.N}")
        if self.noise_radius < 0:
            raise ConfigurationError("noise radius must be nonnegative")
        if self.m < 1:
            raise ConfigurationError("lattice period must be positive")

    def observed(self, k: np.ndarray) -> np.ndarray:
        a = np.abs(k)
        return (np.mod(k, self.m) == 0) & (a > self.M) & (a > self.s) & (a <= self.N)


@dataclass(frozen=True)
class TargetBudget:
    """Error budget for one target.

    ``noise_bound = noise_radius * sqrt(2 pi) * (kappa + 1)`` scales exactly
    with the noise radius.  ``truncation_bound`` is the Cauchy-Schwarz
    bound of the dropped kernel taps against the tail energy.
    ``roundoff_bound`` is the floating-point floor amplified by the kernel.
    """

    t: int
    horizon: int
    log10_kappa: float
    noise_bound: float
    truncation_bound: float
    roundoff_bound: float
    phase: int = 0
    direction: str = "causal"
    observed: bool = False

    @property
    def kappa(self) -> float:
        return _kappa(self.log10_kappa)

    @property
    def bound(self) -> float:
        return self.noise_bound + self.truncation_bound + self.roundoff_bound

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "phase": self.phase,
            "direction": self.direction,
            "observed": self.observed,
            "horizon": self.horizon,
            "log10_kappa": self.log10_kappa,
            "noise_bound": self.noise_bound,
            "truncation_bound": self.truncation_bound,
            "roundoff_bound": self.roundoff_bound,
            "bound": self.bound,
        }


@dataclass(frozen=True)
class RobustResult:
    estimates: Sequence
    budgets: list[TargetBudget]

    @property
    def max_bound(self) -> float:
        return max((b.bound for b in self.budgets), default=0.0)

    @property
    def noise_bound(self) -> float:
        return max((b.noise_bound for b in self.budgets), default=0.0)


def _series_cache():
    cache: dict[tuple, KernelSeries] = {}

    def get(spec: KernelSpec, precision: str, dps: int) -> KernelSeries:
        key = (spec, precision, dps)
        if key not in cache:
            cache[key] = kernel_series(spec, precision, dps=dps)
        return cache[key]

    return get


def _causal_estimate(
    data: dict[int, complex],
    T: int,
    last_obs: int,
    spec0: KernelSpec,
    get_series,
    precision: str,
    dps: int,
    *,
    first_obs: int | None,
    strict_span: bool,
    tail_tol: float = 1e-12,
):
    """Causal lattice estimate of ``y(T)`` from ``data`` at indices ``<= last_obs``.

    ``spec0`` supplies the period and parameters; the horizon is the
    smallest one whose kernel starts at or before ``last_obs``.  Returns the
    estimate, the horizon and the ℓ2 norm of taps that fell outside the
    available data.
    """
    P = spec0.m_nu
    h = max(1, -(-(T - last_obs) // P))
    spec = spec0.with_horizon(h)
    ser = get_series(spec, precision, dps)
    # the tap at index i pairs with the sample T - h - i
    p = T - h - ser.index
    absval = ser.log_abs
    sig = np.flatnonzero(absval > np.max(absval) + math.log(tail_tol))
    deepest = int(p[sig[-1]]) if sig.size else T
    if first_obs is None or deepest < first_obs:
        if strict_span:
            need = (T - deepest) // P
            raise SpanError(
                f"target {T} needs lattice observations back to {deepest}; "
                f"data start at {first_obs}",
                need,
            )
    avail = np.array([pp in data for pp in p.tolist()])
    if precision == "extended":
        with mpmath.workdps(dps):
            acc = mpmath.mpc(0)
            for j in np.flatnonzero(avail):
                v = data[int(p[j])]
                acc += ser.mp_values[j] * mpmath.mpc(v.real, v.imag)
            est = complex(acc)
            miss = mpmath.sqrt(sum((ser.mp_values[j] ** 2 for j in np.flatnonzero(~avail)), mpmath.mpf(0)))
            missing = float(miss)
    else:
        taps = ser.values()
        vals = np.array([data.get(int(pp), 0.0) for pp in p.tolist()], dtype=np.complex128)
        est = complex(np.dot(taps[avail], vals[avail]))
        missing = float(np.linalg.norm(taps[~avail]))
    return est, h, missing


def predict_robust(
    observations: Sequence,
    task: RobustTask,
    kernel_spec: KernelSpec,
    grid: FrequencyGrid,
    precision: Literal["double", "extended"] = "double",
    dps: int = 50,
) -> RobustResult:
    """Estimate ``x(t)``, ``|t| <= M``, causally from truncated lattice observations.

    Samples outside ``task.observed`` are treated as zero.  Each target uses
    the shortest horizon whose kernel only touches indices ``< -M``.  The
    period, ``gamma``, ``rhat`` and ``beta`` come from ``kernel_spec``.
    """
    get = _series_cache()
    k = observations.indices
    keep = task.observed(k) & (k < 0)
    theta = kernel_spec.theta
    data = {int(i): complex(v) * complex(np.exp(1j * theta * i)) for i, v in zip(k[keep], observations.samples[keep])}
    energy = task.energy if task.energy is not None else observations.norm()
    last = -task.M - 1
    est = np.zeros(2 * task.M + 1, dtype=np.complex128)
    budgets = []
    for i, t in enumerate(range(-task.M, task.M + 1)):
        e, h, missing = _causal_estimate(
            data, t, last, kernel_spec, get, precision, dps, first_obs=None, strict_span=False
        )
        est[i] = e * np.exp(-1j * theta * t)
        lk = log10_kappa(kernel_spec.with_horizon(h), grid)
        budgets.append(_budget(t, h, lk, task.noise_radius, missing, energy, energy, precision, dps))
    return RobustResult(Sequence(-task.M, est), budgets)


def _budget(t, h, lk, noise_radius, missing, energy, obs_norm, precision, dps, **kw) -> TargetBudget:
    factor = _SQRT_2PI * (_kappa(lk) + 1.0)
    unit = _EPS if precision == "double" else 10.0 ** (-dps)
    return TargetBudget(
        t=t,
        horizon=h,
        log10_kappa=lk,
        noise_bound=noise_radius * factor,
        truncation_bound=missing * energy,
        roundoff_bound=unit * obs_norm * factor,
        **kw,
    )


# ---------------------------------------------------------------------------
# Recovery from an m-periodic subsequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecoveryResult:
    """Estimates on ``[-M, M]`` with per-target budgets."""

    estimates: Sequence
    budgets: list[TargetBudget]

    @property
    def max_bound(self) -> float:
        return max((b.bound for b in self.budgets), default=0.0)

    @property
    def noise_bound(self) -> float:
        return max((b.noise_bound for b in self.budgets), default=0.0)

    def to_dict(self, truth: Sequence | None = None) -> dict:
        out = {
            "targets": self.estimates.indices.tolist(),
            "estimates": [[v.real, v.imag] for v in self.estimates.samples.tolist()],
            "budgets": [b.to_dict() for b in self.budgets],
        }
        if truth is not None:
            tv = truth(self.estimates.indices)
            out["truth"] = [[v.real, v.imag] for v in tv.tolist()]
            out["max_abs_error"] = float(np.max(np.abs(tv - self.estimates.samples)))
        return out


def _recover(
    samples: Sequence,
    spec: BraidedSpec,
    M: int,
    s: int,
    grid: FrequencyGrid,
    gamma: float,
    rhat: float,
    precision: str,
    dps: int,
    N: int | None,
    noise_radius: float,
    energy: float | None,
    strict_span: bool,
) -> RecoveryResult:
    m = spec.m
    if M < 0 or s < 0:
        raise ConfigurationError("M and s must be nonnegative")
    k = samples.indices
    keep = (np.mod(k, m) == 0) & (np.abs(k) > s)
    # data scale independent of the truncation radius
    obs_norm = float(np.linalg.norm(samples.samples[keep]))
    if N is not None:
        keep &= np.abs(k) <= N
    if not (keep & (k < 0)).any() or not (keep & (k > 0)).any():
        raise SpanError("observations must exist on both sides of the origin", 1)
    vals = samples.samples
    left = {int(i): complex(v) for i, v in zip(k[keep & (k < 0)], vals[keep & (k < 0)])}
    right = {int(i): complex(v) for i, v in zip(k[keep & (k > 0)], vals[keep & (k > 0)])}
    energy = obs_norm if energy is None else energy
    first_left = min(left)
    last_right = max(right)
    s_left = max(left)  # last observed index on the left, <= -s-1
    s_right = min(right)
    get = _series_cache()
    rev_beta = normalize_angle(-spec.beta)
    if rev_beta <= -math.pi:
        rev_beta = math.pi
    est = np.zeros(2 * M + 1, dtype=np.complex128)
    budgets = []
    for i, t in enumerate(range(-M, M + 1)):
        if t % m == 0 and abs(t) > s and (N is None or abs(t) <= N) and t in (left | right):
            est[i] = (left | right)[t]
            budgets.append(TargetBudget(t, 0, 0.0, 0.0, 0.0, 0.0, phase=0, direction="observed", observed=True))
            continue
        d = phase_of(t, m)
        T = t + d
        nu = spec.nu[d]
        if d > 0 or (d == 0 and t <= 0):
            base = KernelSpec(1, m, nu, gamma, rhat, spec.beta)
            theta = base.theta
            data = {p: v * complex(np.exp(1j * theta * p)) for p, v in left.items()}
            e, h, missing = _causal_estimate(
                data, T, s_left, base, get, precision, dps, first_obs=first_left, strict_span=strict_span
            )
            value = e * complex(np.exp(-1j * theta * T))
            direction = "causal"
        else:
            base = KernelSpec(1, m, nu, gamma, rhat, rev_beta)
            theta = base.theta
            data = {-p: v * complex(np.exp(1j * theta * -p)) for p, v in right.items()}
            e, h, missing = _causal_estimate(
                data, -T, -s_right, base, get, precision, dps, first_obs=-last_right, strict_span=strict_span
            )
            value = e * complex(np.exp(-1j * theta * -T))
            direction = "anticausal"
        est[i] = value
        lk = log10_kappa(base.with_horizon(h), grid)
        budgets.append(
            _budget(t, h, lk, noise_radius, missing, energy, obs_norm, precision, dps, phase=d, direction=direction)
        )
    return RecoveryResult(Sequence(-M, est), budgets)


def recover_from_subsequence(
    samples: Sequence,
    spec: BraidedSpec,
    M: int,
    grid: FrequencyGrid,
    *,
    s: int = 0,
    gamma: float = 3.0,
    rhat: float = 1.2,
    precision: Literal["double", "extended"] = "double",
    dps: int = 50,
) -> RecoveryResult:
    """Recover ``x(t)``, ``|t| <= M``, from its samples on ``{k in m Z : |k| > s}``.

    Samples of ``samples`` off that set are ignored.  Target ``t`` belongs
    to braid phase ``d`` and is read off the phase sequence ``xi_d`` at
    lattice index ``t + d``.  Phases ``d > 0`` agree with the observed
    stream on the left half-line and are predicted causally.  Phases
    ``d < 0`` agree on the right half-line and are predicted anti-causally
    by time reversal.  Unobserved lattice points with ``d = 0`` use the
    closer side.

    Raises
    ------
    SpanError
        When the observations do not reach back over a kernel's support.
    KernelOverflowError
        When a kernel exceeds double range and ``precision="double"``.
    """
    return _recover(samples, spec, M, s, grid, gamma, rhat, precision, dps, None, 0.0, None, True)


def recover_robust(
    samples: Sequence,
    spec: BraidedSpec,
    M: int,
    N: int,
    grid: FrequencyGrid,
    *,
    s: int = 0,
    noise_radius: float = 0.0,
    energy: float | None = None,
    gamma: float = 3.0,
    rhat: float = 1.2,
    precision: Literal["double", "extended"] = "double",
    dps: int = 50,
) -> RecoveryResult:
    """Recovery from noisy observations truncated to ``|k| <= N``.

    Missing history is zero-filled.  The budgets carry a noise term
    proportional to ``noise_radius`` and a truncation term from the dropped
    kernel taps; ``energy`` bounds the ℓ2 norm of the unobserved samples and
    defaults to the norm of the retained observations.
    """
    if N <= M:
        raise ConfigurationError(f"need N > M, got M={M}, N={N}")
    return _recover(samples, spec, M, s, grid, gamma, rhat, precision, dps, N, noise_radius, energy, False)

