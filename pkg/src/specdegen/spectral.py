"""Sequences, frequency grids, Z-transform traces, root sets and weights.

A :class:`Sequence` is a finitely supported complex signal on the integers.
Its Z-transform restricted to the unit circle is sampled on a
:class:`FrequencyGrid` whose nodes are offset by half a step,

.. math:: \\omega_j = -\\pi + \\pi/N + 2\\pi j/N, \\qquad j = 0, \\dots, N-1,

so that for ``beta = pi`` and any ``n`` dividing ``N/2`` the root points
``(2 pi k - beta)/n`` sit exactly midway between two nodes.  Evaluation and
inversion use the FFT; for windows no longer than ``N`` both are exact up to
roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, ResolutionError

__all__ = [
    "Sequence",
    "FrequencyGrid",
    "SpectrumTrace",
    "RootSet",
    "WeightParams",
    "ClassSpec",
    "make_grid",
    "ztrace",
    "ztrace_at",
    "inv_ztrace",
    "root_set",
    "normalize_angle",
    "chordal_distance",
    "weight",
    "log_weight",
    "membership_value",
    "check_membership",
    "DEFAULT_GRID_SIZE",
]

DEFAULT_GRID_SIZE = 2**14

# Chordal distances below this are treated as coincident points; the weight
# there is far beyond double range for any sensible (q, c) anyway.
_COINCIDENT = 1e-14


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Sequence:
    """Finite-window complex sequence ``x(t) = samples[t - offset]``.

    Samples outside the window are zero.  The sample array is copied to
    ``complex128`` and made read-only.

    Parameters
    ----------
    offset : int
        Index of the first stored sample.
    samples : array_like
        Stored samples; may be empty, in which case the sequence is zero.
    """

    offset: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("sequence samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "offset", int(self.offset))

    # -- construction -----------------------------------------------------

    @classmethod
    def zeros(cls, lo: int, hi: int) -> "Sequence":
        """Zero sequence stored on the inclusive window ``[lo, hi]``."""
        return cls(lo, np.zeros(max(hi - lo + 1, 0), dtype=np.complex128))

    @classmethod
    def impulse(cls, t: int = 0, amplitude: complex = 1.0) -> "Sequence":
        """Scaled unit impulse at ``t``."""
        return cls(t, np.array([amplitude], dtype=np.complex128))

    @classmethod
    def from_mapping(cls, values: dict[int, complex]) -> "Sequence":
        """Build a sequence from a sparse ``{t: value}`` mapping."""
        if not values:
            return cls(0, np.zeros(0))
        lo, hi = min(values), max(values)
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        for t, v in values.items():
            out[t - lo] = v
        return cls(lo, out)

    # -- window -----------------------------------------------------------

    def __len__(self) -> int:
        return self.samples.size

    @property
    def start(self) -> int:
        return self.offset

    @property
    def stop(self) -> int:
        """Last stored index (inclusive)."""
        return self.offset + self.samples.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.samples.size)

    @property
    def real(self) -> np.ndarray:
        return self.samples.real

    def __call__(self, t):
        """Evaluate at integer index or array of indices (zero off-window)."""
        t_arr = np.asarray(t)
        pos = t_arr - self.offset
        inside = (pos >= 0) & (pos < self.samples.size)
        out = np.zeros(t_arr.shape, dtype=np.complex128)
        if self.samples.size:
            out[inside] = self.samples[pos[inside]]
        if t_arr.ndim == 0:
            return complex(out)
        return out

    def on(self, lo: int, hi: int) -> "Sequence":
        """Restrict or zero-pad to the inclusive window ``[lo, hi]``."""
        idx = np.arange(lo, hi + 1)
        return Sequence(lo, self(idx))

    def window_union(self, other: "Sequence") -> tuple[int, int]:
        if len(self) == 0:
            return other.start, other.stop
        if len(other) == 0:
            return self.start, self.stop
        return min(self.start, other.start), max(self.stop, other.stop)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "Sequence") -> "Sequence":
        lo, hi = self.window_union(other)
        idx = np.arange(lo, hi + 1)
        return Sequence(lo, self(idx) + other(idx))

    def __sub__(self, other: "Sequence") -> "Sequence":
        lo, hi = self.window_union(other)
        idx = np.arange(lo, hi + 1)
        return Sequence(lo, self(idx) - other(idx))

    def __neg__(self) -> "Sequence":
        return Sequence(self.offset, -self.samples)

    def scale(self, factor: complex) -> "Sequence":
        return Sequence(self.offset, factor * self.samples)

    def __mul__(self, factor: complex) -> "Sequence":
        return self.scale(factor)

    __rmul__ = __mul__

    # -- norms and comparison --------------------------------------------

    def norm(self, p: float = 2) -> float:
        """ℓ_p norm; ``p=np.inf`` gives the sup norm."""
        if self.samples.size == 0:
            return 0.0
        return float(np.linalg.norm(self.samples, ord=p))

    def max_abs_diff(self, other: "Sequence") -> float:
        lo, hi = self.window_union(other)
        if hi < lo:
            return 0.0
        idx = np.arange(lo, hi + 1)
        return float(np.max(np.abs(self(idx) - other(idx))))

    def trimmed(self, tol: float = 0.0) -> "Sequence":
        """Drop leading and trailing samples with ``|x| <= tol``."""
        nz = np.flatnonzero(np.abs(self.samples) > tol)
        if nz.size == 0:
            return Sequence(0, np.zeros(0))
        return Sequence(self.offset + nz[0], self.samples[nz[0] : nz[-1] + 1])

    def __repr__(self) -> str:
        return f"Sequence(window=[{self.start}, {self.stop}], n={len(self)})"


# ---------------------------------------------------------------------------
# Grids and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``size`` nodes on the unit circle.

    Nodes are ``-pi + pi/N + 2 pi j / N``.  Use :func:`make_grid` to build a
    validated instance.
    """

    size: int

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.size

    @property
    def nodes(self) -> np.ndarray:
        n = self.size
        return -math.pi + math.pi / n + 2.0 * math.pi * np.arange(n) / n

    @property
    def capacity(self) -> int:
        """Longest window that transforms without aliasing."""
        return self.size

    @property
    def full_window(self) -> tuple[int, int]:
        """Symmetric default inversion window ``[-N/2, N/2 - 1]``."""
        return -self.size // 2, self.size // 2 - 1


def make_grid(N: int = DEFAULT_GRID_SIZE) -> FrequencyGrid:
    """Validated :class:`FrequencyGrid`.

    Raises
    ------
    ConfigurationError
        If ``N`` is not a power of two or ``N < 8``.
    """
    if isinstance(N, bool) or int(N) != N:
        raise ConfigurationError(f"grid size must be an integer, got {N!r}")
    N = int(N)
    if N < 8 or N & (N - 1):
        raise ConfigurationError(f"grid size must be a power of two >= 8, got {N}")
    return FrequencyGrid(N)


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    """Values of a transfer function or spectrum on grid nodes.

    Parameters
    ----------
    grid : FrequencyGrid
    values : ndarray
        Linear values, one per node.  Where ``overflow`` is set the magnitude
        is clamped and only the phase is meaningful.
    log_values : ndarray, optional
        Complex logarithm ``log|F| + i arg F`` when the trace was produced in
        the log domain.  ``-inf`` real part encodes an exact zero.
    overflow : ndarray of bool, optional
        Per-node flag marking clamped linear values.
    """

    grid: FrequencyGrid
    values: np.ndarray
    log_values: np.ndarray | None = None
    overflow: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.size,):
            raise ConfigurationError(
                f"trace has {vals.size} values for a grid of {self.grid.size}"
            )
        if self.overflow is None:
            object.__setattr__(self, "overflow", np.zeros(self.grid.size, dtype=bool))

    @property
    def omega(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def any_overflow(self) -> bool:
        return bool(np.any(self.overflow))

    def __mul__(self, other: "SpectrumTrace | np.ndarray") -> "SpectrumTrace":
        vals = other.values if isinstance(other, SpectrumTrace) else np.asarray(other)
        return SpectrumTrace(self.grid, self.values * vals)


def _phase_ramp(t: np.ndarray, N: int, sign: float) -> np.ndarray:
    # exp(sign * i * (pi - pi/N) * t) with the argument reduced mod 2 pi
    # exactly: (pi - pi/N) t = pi (N - 1) t / N.
    num = np.mod((N - 1) * t.astype(np.int64), 2 * N)
    return np.exp(sign * 1j * math.pi * num / N)


def ztrace(x: Sequence, grid: FrequencyGrid) -> SpectrumTrace:
    """Z-transform of ``x`` at the grid nodes, ``sum_k x(k) exp(-i w_j k)``.

    Raises
    ------
    ResolutionError
        If the stored window of ``x`` is longer than the grid.
    """
    N = grid.size
    if len(x) > N:
        raise ResolutionError(f"window of length {len(x)} exceeds grid capacity {N}")
    buf = np.zeros(N, dtype=np.complex128)
    if len(x):
        t = x.indices
        np.add.at(buf, np.mod(t, N), x.samples * _phase_ramp(t, N, +1.0))
    return SpectrumTrace(grid, np.fft.fft(buf))


def ztrace_at(x: Sequence, omega) -> np.ndarray:
    """Direct (non-FFT) evaluation of the Z-transform trace at arbitrary frequencies."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if len(x) == 0:
        return np.zeros(w.shape, dtype=np.complex128)
    t = x.indices.astype(float)
    return np.exp(-1j * np.outer(w, t)) @ x.samples


def inv_ztrace(F: SpectrumTrace, window: tuple[int, int] | None = None) -> Sequence:
    """Quadrature inverse ``x(k) = (1/N) sum_j F_j exp(i w_j k)`` on ``window``.

    Parameters
    ----------
    F : SpectrumTrace
    window : (int, int), optional
        Inclusive index range.  Defaults to ``[-N/2, N/2 - 1]``.

    Raises
    ------
    ResolutionError
        If the window is longer than the grid.
    """
    N = F.grid.size
    lo, hi = F.grid.full_window if window is None else (int(window[0]), int(window[1]))
    if hi - lo + 1 > N:
        raise ResolutionError(f"window [{lo}, {hi}] exceeds grid capacity {N}")
    if hi < lo:
        return Sequence(lo, np.zeros(0))
    vals = np.asarray(F.values, dtype=np.complex128)
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError("cannot invert a trace with non-finite values")
    circ = np.fft.ifft(vals)
    t = np.arange(lo, hi + 1)
    return Sequence(lo, circ[np.mod(t, N)] * _phase_ramp(t, N, -1.0))


# ---------------------------------------------------------------------------
# Root sets and weights
# ---------------------------------------------------------------------------


def normalize_angle(w):
    """Map angles into ``(-pi, pi]``."""
    w = np.asarray(w, dtype=float)
    out = math.pi - np.mod(math.pi - w, 2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def chordal_distance(w1, w2):
    """``|exp(i w1) - exp(i w2)|`` computed as ``2 |sin((w1 - w2)/2)|``."""
    out = 2.0 * np.abs(np.sin(0.5 * (np.asarray(w1, float) - np.asarray(w2, float))))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RootSet:
    """Points ``(2 pi k - beta)/n`` in ``(-pi, pi]``, sorted; they solve ``exp(i w n) = exp(-i beta)``."""

    n: int
    beta: float
    points: tuple[float, ...]

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (-math.pi < beta <= math.pi):
        raise ConfigurationError(f"beta must lie in (-pi, pi], got {beta}")
    return beta


def root_set(n: int, beta: float = math.pi) -> RootSet:
    """Root points ``(2 pi k - beta)/n`` normalized into ``(-pi, pi]``.

    Examples
    --------
    >>> [round(w, 6) for w in root_set(2, math.pi)]
    [-1.570796, 1.570796]
    """
    if int(n) != n or n < 1:
        raise ConfigurationError(f"root set order must be a positive integer, got {n}")
    n = int(n)
    beta = _check_beta(beta)
    pts = normalize_angle((2.0 * math.pi * np.arange(n) - beta) / n)
    return RootSet(n, beta, tuple(float(p) for p in np.sort(np.atleast_1d(pts))))


@dataclass(frozen=True)
class WeightParams:
    """Parameters ``(q, c, L)`` of the weight ``rho``."""

    q: float
    c: float
    L: float = 1.0

    def __post_init__(self) -> None:
        if not self.q > 1:
            raise ConfigurationError(f"q must exceed 1, got {self.q}")
        if not self.c > 0:
            raise ConfigurationError(f"c must be positive, got {self.c}")
        if not self.L >= 1:
            raise ConfigurationError(f"L must be at least 1, got {self.L}")


def log_weight(omega, omega_tilde, p: WeightParams):
    """``log rho(w, w~) = max(log L, c / |e^{iw} - e^{iw~}|^q) - log L``.

    Returns ``math.inf`` where the two frequencies coincide modulo 2 pi.
    Accepts scalars or broadcastable arrays.
    """
    d = np.asarray(chordal_distance(omega, omega_tilde), dtype=float)
    logL = math.log(p.L)
    with np.errstate(divide="ignore", over="ignore"):
        peak = p.c / np.power(d, p.q)
    out = np.maximum(peak, logL) - logL
    out = np.where(d < _COINCIDENT, math.inf, out)
    return float(out) if out.ndim == 0 else out


def weight(omega, omega_tilde, p: WeightParams):
    """``rho(w, w~) = (1/L) max(L, exp(c / |e^{iw} - e^{iw~}|^q))``.

    Values beyond double range, including the coincident point, are returned
    as ``math.inf``; never NaN.

    Examples
    --------
    >>> round(weight(0.0, math.pi, WeightParams(q=1.0000001, c=1.0)), 4)
    1.6487
    """
    lw = np.asarray(log_weight(omega, omega_tilde, p))
    with np.errstate(over="ignore"):
        out = np.exp(lw)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClassSpec:
    """Class of sequences whose spectrum decays at the roots ``R_{n_total, beta}``.

    Membership requires ``int |X|^2 rho(w, w_k)^2 dw <= r`` for every root
    ``w_k``.
    """

    n_total: int
    beta: float
    weights: WeightParams
    r: float

    def __post_init__(self) -> None:
        if int(self.n_total) != self.n_total or self.n_total < 1:
            raise ConfigurationError("n_total must be a positive integer")
        _check_beta(self.beta)
        if not self.r > 0:
            raise ConfigurationError("r must be positive")

    @property
    def roots(self) -> RootSet:
        return root_set(self.n_total, self.beta)


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    finite_m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.log(np.sum(np.exp(a - finite_m), axis=axis, keepdims=True)) + finite_m
    s = np.where(np.isposinf(m), math.inf, s)
    return np.squeeze(s, axis=axis)


def membership_log_integrals(
    x: Sequence | SpectrumTrace,
    spec: ClassSpec,
    grid: FrequencyGrid,
    floor: float = 1e-12,
) -> np.ndarray:
    """Log of ``(2 pi / N) sum_j |X_j|^2 rho(w_j, w_k)^2`` for every root ``w_k``.

    Spectral samples with ``|X_j| <= floor * max|X|`` are treated as exact
    zeros; they are transform roundoff of a spectrum that vanishes there.
    """
    X = x if isinstance(x, SpectrumTrace) else ztrace(x, grid)
    mag = np.abs(np.asarray(X.values))
    roots = spec.roots.as_array()
    peak = float(mag.max()) if mag.size else 0.0
    if peak == 0.0:
        return np.full(roots.size, -math.inf)
    keep = mag > floor * peak
    w = X.grid.nodes[keep]
    log_mag2 = 2.0 * np.log(mag[keep])
    lw = np.asarray(log_weight(w[None, :], roots[:, None], spec.weights))
    terms = log_mag2[None, :] + 2.0 * lw
    return _logsumexp(terms, axis=1) + math.log(X.grid.spacing)


def membership_value(
    x: Sequence | SpectrumTrace,
    spec: ClassSpec,
    grid: FrequencyGrid,
    floor: float = 1e-12,
) -> float:
    """Maximum over roots of the weighted spectral energy.

    Returns ``math.inf`` when the integral diverges or exceeds double range.

    Parameters
    ----------
    x : Sequence or SpectrumTrace
        Sequence (transformed on ``grid``) or a precomputed trace.
    spec : ClassSpec
    grid : FrequencyGrid
    floor : float
        Relative magnitude below which spectral samples count as zero.
    """
    logs = membership_log_integrals(x, spec, grid, floor)
    top = float(np.max(logs))
    if top == -math.inf:
        return 0.0
    if top > math.log(np.finfo(float).max):
        return math.inf
    return math.exp(top)


def check_membership(
    x: Sequence | SpectrumTrace, spec: ClassSpec, grid: FrequencyGrid, floor: float = 1e-12
) -> bool:
    """``membership_value(x) <= spec.r``."""
    return membership_value(x, spec, grid, floor) <= spec.r


def iter_pairs(items: Iterable) -> Iterable[tuple]:
    items = list(items)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            yield items[i], items[j]
