"""Independent reference computations used by the test-suite.

Nothing here calls into the FFT or series code paths of the package; the
oracles use direct summation, mpmath Taylor expansion or closed forms.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

from specdegen.spectral import Sequence


def direct_ztrace(t: np.ndarray, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``sum_k x(k) exp(-i omega k)`` by explicit summation."""
    out = np.zeros(len(omega), dtype=complex)
    for k, v in zip(t, x):
        out += v * np.exp(-1j * omega * k)
    return out


def shifted_nodes(N: int) -> np.ndarray:
    """Grid nodes built from the half-sample convention directly."""
    j = np.arange(N)
    return 2 * math.pi * (j - N / 2) / N + math.pi / N


def alias_sum(t: np.ndarray, x: np.ndarray, omega: np.ndarray, m: int) -> np.ndarray:
    """``(1/m) sum_k X(e^{i(omega + 2 pi k/m)})`` for the decimation identity."""
    acc = np.zeros(len(omega), dtype=complex)
    for k in range(1, m + 1):
        acc += direct_ztrace(t, x, omega + 2 * math.pi * k / m)
    return acc / m


def lattice_taps(n: int, m_nu: int, gamma: float, rhat: float, count: int, dps: int = 40) -> dict[int, float]:
    """Taps of ``z^n V(z^P)^n`` from the Taylor series of ``V(1/u)`` at ``u = 0``.

    With ``u = 1/z`` the transform is ``u^{-n} F(u^P)^n``, ``F(u) = V(1/u)``;
    the coefficient of ``u^j`` in ``F^n`` is the tap at ``k = j P - n``.
    """
    with mp.workdps(dps):
        g = mp.mpf(gamma)
        a = 1 - g ** (-mp.mpf(rhat))
        f = mp.taylor(lambda u: 1 - mp.exp(-g * u / (1 + a * u)), 0, count)
        powr = [mp.mpf(1)] + [mp.mpf(0)] * count
        for _ in range(n):
            nxt = [mp.mpf(0)] * (count + 1)
            for i, pi in enumerate(powr):
                for j in range(count + 1 - i):
                    nxt[i + j] += pi * f[j]
            powr = nxt
        return {j * m_nu - n: float(powr[j]) for j in range(count + 1)}


def membership_oracle(x: np.ndarray, t: np.ndarray, roots: np.ndarray, q: float, c: float, L: float, N: int) -> float:
    """Rectangle-rule membership integral at ``N`` nodes by direct summation."""
    w = shifted_nodes(N)
    X2 = np.abs(direct_ztrace(t, x, w)) ** 2
    best = 0.0
    for r in roots:
        d = 2 * np.abs(np.sin((w - r) / 2))
        lrho = np.maximum(c / d**q, math.log(L)) - math.log(L)
        best = max(best, float(np.sum(X2 * np.exp(2 * lrho)) * 2 * math.pi / N))
    return best


def ar1_stationary_variance(phi: float) -> float:
    return 1.0 / (1.0 - phi**2)


def random_sequence(rng, length: int, start: int = 0, real: bool = False) -> Sequence:
    v = rng.standard_normal(length)
    if not real:
        v = v + 1j * rng.standard_normal(length)
    return Sequence(start, v)
