"""Index rearrangements: decimation, subsequences, modulation, insertion, braids.

All operators compute exact output windows, so identities such as
``supersequence(subsequence(x, m, s), m, s) == decimate(x, m, s)`` hold
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BraidConsistencyError, ConfigurationError
from .spectral import Sequence

__all__ = [
    "PhaseIndex",
    "decimate",
    "subsequence",
    "supersequence",
    "modulate",
    "shift",
    "reverse",
    "insert_map",
    "phase_of",
    "braid_assemble",
    "braid_split",
]


def _check_m(m: int) -> int:
    if int(m) != m or m < 1:
        raise ConfigurationError(f"period m must be a positive integer, got {m}")
    return int(m)


@dataclass(frozen=True)
class PhaseIndex:
    """Lattice bookkeeping: period ``m``, lattice offset ``s`` and braid phase ``d``."""

    m: int
    s: int = 0
    d: int = 0

    def __post_init__(self) -> None:
        _check_m(self.m)
        if abs(self.d) > self.m - 1:
            raise ConfigurationError(f"braid phase {self.d} outside [-{self.m - 1}, {self.m - 1}]")


def decimate(x: Sequence, m: int, s: int = 0) -> Sequence:
    """Keep ``x(t)`` where ``(t + s) / m`` is an integer, zero elsewhere; same window."""
    m = _check_m(m)
    keep = np.mod(x.indices + s, m) == 0
    return Sequence(x.offset, np.where(keep, x.samples, 0.0))


def subsequence(x: Sequence, m: int, s: int = 0) -> Sequence:
    """``y(k) = x(k m - s)``."""
    m = _check_m(m)
    if len(x) == 0:
        return Sequence(0, np.zeros(0))
    k_lo = -((-(x.start + s)) // m)  # ceil((start + s) / m)
    k_hi = (x.stop + s) // m
    ks = np.arange(k_lo, k_hi + 1)
    return Sequence(k_lo, x(ks * m - s))


def supersequence(y: Sequence, m: int, s: int = 0) -> Sequence:
    """``x(t) = y((t + s)/m)`` on the lattice ``(t + s)/m`` integer, zero elsewhere."""
    m = _check_m(m)
    if len(y) == 0:
        return Sequence(0, np.zeros(0))
    lo = y.start * m - s
    out = np.zeros((len(y) - 1) * m + 1, dtype=np.complex128)
    out[::m] = y.samples
    return Sequence(lo, out)


def modulate(x: Sequence, theta: float) -> Sequence:
    """``y(t) = exp(i theta t) x(t)``, which shifts the spectrum by ``theta``."""
    if theta == 0:
        return x
    return Sequence(x.offset, np.exp(1j * theta * x.indices) * x.samples)


def shift(x: Sequence, s: int) -> Sequence:
    """``y(t) = x(t + s)``."""
    return Sequence(x.offset - int(s), x.samples)


def reverse(x: Sequence) -> Sequence:
    """``y(t) = x(-t)``."""
    if len(x) == 0:
        return x
    return Sequence(-x.stop, x.samples[::-1])


def insert_map(x: Sequence, d: int) -> Sequence:
    """Insert ``|d|`` copies of ``x(0)`` at the origin.

    For ``d > 0`` the right half-line moves right by ``d``:
    ``x_d(k) = x(k)`` for ``k < 0``, ``x(0)`` for ``0 <= k <= d`` and
    ``x(k - d)`` for ``k > d``.  For ``d < 0`` the left half-line moves
    left by ``|d|`` symmetrically.

    Examples
    --------
    >>> x = Sequence(-1, [1, 2, 3])
    >>> insert_map(x, 1).samples.real.tolist(), insert_map(x, 1).start
    ([1.0, 2.0, 2.0, 3.0], -1)
    """
    d = int(d)
    if d == 0:
        return x
    a = min(x.start, 0) if len(x) else 0
    b = max(x.stop, 0) if len(x) else 0
    x0 = x(0)
    if d > 0:
        k = np.arange(a, b + d + 1)
        vals = np.where(k < 0, x(k), np.where(k <= d, x0, x(k - d)))
    else:
        k = np.arange(a + d, b + 1)
        vals = np.where(k > 0, x(k), np.where(k >= d, x0, x(k - d)))
    return Sequence(int(k[0]), vals)


def phase_of(k, m: int):
    """Braid phase owning index ``k``.

    Index ``k >= 0`` belongs to ``d`` in ``[0, m-1]`` with ``(k + d)/m``
    integer; ``k < 0`` to ``d`` in ``[-(m-1), 0]`` with the same property.
    The origin belongs to ``d = 0``.
    """
    k = np.asarray(k)
    d = np.where(k >= 0, np.mod(-k, m), -np.mod(k, m))
    return int(d) if d.ndim == 0 else d


def braid_assemble(
    xi: dict[int, Sequence], m: int, *, check: bool = False, tol: float = 1e-10
) -> Sequence:
    """Interleave phase sequences: ``x(k) = xi_d(k + d)`` with ``d = phase_of(k)``.

    Parameters
    ----------
    xi : dict
        Map from phase ``d`` to its sequence; missing phases are zero.
    m : int
    check : bool
        Verify the half-line agreements ``xi_d(k) = xi_0(k)`` (``k <= 0``,
        ``d > 0``) and ``xi_d(k) = xi_0(k)`` (``k >= 0``, ``d < 0``) on the
        lattice, which make the two one-sided assembly formulas coincide.

    Raises
    ------
    BraidConsistencyError
        With ``check=True``, when the agreements fail beyond ``tol``.
    """
    m = _check_m(m)
    bad = [d for d in xi if abs(d) > m - 1]
    if bad:
        raise ConfigurationError(f"braid phases {bad} outside [-{m - 1}, {m - 1}]")
    lo, hi = 0, 0
    for d, seq in xi.items():
        if len(seq) == 0:
            continue
        if d >= 0:
            hi = max(hi, seq.stop - d)
        if d <= 0:
            lo = min(lo, seq.start - d)
    k = np.arange(lo, hi + 1)
    ph = phase_of(k, m)
    out = np.zeros(k.size, dtype=np.complex128)
    for d, seq in xi.items():
        sel = ph == d
        out[sel] = seq(k[sel] + d)
    if check:
        _check_braid(xi, m, tol)
    return Sequence(lo, out)


def _check_braid(xi: dict[int, Sequence], m: int, tol: float) -> None:
    base = xi.get(0, Sequence(0, np.zeros(0)))
    for d, seq in xi.items():
        if d == 0 or (len(seq) == 0 and len(base) == 0):
            continue
        lo = min(seq.start if len(seq) else 0, base.start if len(base) else 0)
        hi = max(seq.stop if len(seq) else 0, base.stop if len(base) else 0)
        k = np.arange(lo, hi + 1)
        half = (k <= 0) if d > 0 else (k >= 0)
        k = k[half & (np.mod(k, m) == 0)]
        diff = np.abs(seq(k) - base(k))
        scale = max(1.0, float(np.max(np.abs(base(k)))) if k.size else 1.0)
        if k.size and diff.max() > tol * scale:
            raise BraidConsistencyError(
                f"phase {d} departs from phase 0 by {diff.max():.3e} on its shared half-line"
            )


def braid_split(x: Sequence, m: int) -> dict[int, Sequence]:
    """Phase sequences with ``xi_d(k + d) = x(k)`` on the indices owned by ``d``.

    Each ``xi_d`` is supported on the lattice ``m Z``.  The result
    round-trips through :func:`braid_assemble`.
    """
    m = _check_m(m)
    out: dict[int, Sequence] = {}
    if len(x) == 0:
        return {d: Sequence(0, np.zeros(0)) for d in range(-m + 1, m)}
    k = x.indices
    ph = phase_of(k, m)
    for d in range(-m + 1, m):
        sel = ph == d
        if not sel.any():
            out[d] = Sequence(0, np.zeros(0))
            continue
        pos = k[sel] + d
        vals = dict(zip(pos.tolist(), x.samples[sel].tolist()))
        out[d] = Sequence.from_mapping(vals)
    return out


def lattice_points(lo: int, hi: int, m: int, s: int = 0) -> np.ndarray:
    """Indices ``t`` in ``[lo, hi]`` with ``(t + s)/m`` integer."""
    first = lo + (-(lo + s)) % m
    return np.arange(first, hi + 1, m)


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)

