"""Members of degenerate-spectrum classes and the braided approximant.

The braided construction takes any finitely supported ``x`` and a period
``m``.  It returns ``x_hat`` close to ``x`` whose phase sequences each have
spectra decaying at their own root set ``R_{m nu_d, beta}``.  Because those
root sets are disjoint, the spectral surgery for one phase can be undone by
the others.  Per phase ``d`` and node ``w``,

* ``b_d(w) = prod_k rho(w, w_{d,k})^{-1}`` damps phase ``d`` near its roots,
* ``A(w) = prod_d b_d(w)`` and ``a_d(w) = 1 - b_d(w)``,
* ``X_hat_0 = X_0 A + sum_{p != 0} (X_0 - X_p) a_p`` and
  ``X_hat_d = X_hat_0 + X_d - X_0``,

so ``X_hat_d = b_d X_d`` wherever the other phases carry no weight.  In the
time domain the phases are ``xi_hat_d = xi_hat_0 + (x_d - x_0)`` with
``x_d`` the insertion maps of ``x``, which keeps the braid agreements exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .kernels import GapSpec, gap_mask
from .seqops import braid_assemble, insert_map, supersequence
from .spectral import (
    ClassSpec,
    FrequencyGrid,
    Sequence,
    SpectrumTrace,
    WeightParams,
    _check_beta,
    chordal_distance,
    inv_ztrace,
    log_weight,
    membership_value,
    root_set,
    ztrace,
)

__all__ = [
    "BraidedSpec",
    "BraidCertificate",
    "bandstop_project",
    "nu_scheme",
    "disjointness_check",
    "root_separation",
    "braid_L",
    "braided_approximant",
    "detect_degeneracy",
]


def bandstop_project(
    x: Sequence, gap: GapSpec, grid: FrequencyGrid, window: tuple[int, int] | None = None
) -> Sequence:
    """Zero the spectrum of ``x`` on the gap arcs and transform back.

    Parameters
    ----------
    window : (int, int), optional
        Output window; the full grid window by default.

    Raises
    ------
    ConfigurationError
        If the gaps cover every grid node.
    """
    mask = gap_mask(gap, grid)
    if mask.all():
        raise ConfigurationError("gap arcs cover the whole circle")
    X = ztrace(x, grid)
    return inv_ztrace(X * np.where(mask, 0.0, 1.0), window)


def nu_scheme(m: int) -> dict[int, int]:
    """Powers of two with disjoint root sets: ``2^d`` for ``d >= 0`` and ``2^(2m+d-1)`` for ``d < 0``."""
    if int(m) != m or m < 1:
        raise ConfigurationError(f"m must be a positive integer, got {m}")
    return {d: 2**d if d >= 0 else 2 ** (2 * m + d - 1) for d in range(-m + 1, m)}


def _all_roots(m: int, nu: dict[int, int], beta: float) -> dict[int, np.ndarray]:
    return {d: root_set(m * nu[d], beta).as_array() for d in sorted(nu)}


def disjointness_check(m: int, nu: dict[int, int], beta: float = math.pi, tol: float = 1e-9) -> bool:
    """Whether the root sets ``R_{m nu_d, beta}`` are pairwise disjoint across phases."""
    roots = _all_roots(m, nu, beta)
    ds = sorted(roots)
    for i, d1 in enumerate(ds):
        for d2 in ds[i + 1 :]:
            if np.min(chordal_distance(roots[d1][:, None], roots[d2][None, :])) <= tol:
                return False
    return True


def root_separation(m: int, nu: dict[int, int], beta: float = math.pi) -> float:
    """Smallest chordal distance between distinct root points of all phases."""
    pts = np.concatenate(list(_all_roots(m, nu, beta).values()))
    d = chordal_distance(pts[:, None], pts[None, :])
    d = d[d > 1e-9]
    return float(d.min()) if d.size else 2.0


def braid_L(m: int, nu: dict[int, int], beta: float, q: float, c_ref: float = 1.0) -> float:
    """Floor ``L = exp(c_ref / delta'^q)`` with ``delta'`` half the root separation.

    For ``c <= c_ref`` every weight then equals one outside the chordal
    ``delta'``-neighbourhoods of the roots, and the neighbourhoods are
    disjoint.
    """
    dprime = 0.5 * root_separation(m, nu, beta)
    return math.exp(c_ref / dprime**q)


@dataclass(frozen=True)
class BraidedSpec:
    """Parameters of a braided-degeneracy class.

    Parameters
    ----------
    m : int
    nu : dict
        ``nu[d]`` for ``d`` in ``[-(m-1), m-1]``; :func:`nu_scheme` by default.
    beta : float
    weights : WeightParams
        Class weight used for the membership certificates.
    r : float
        Membership bound.
    c_build : float, optional
        Strength used to shape the approximant; defaults to ``weights.c``.
        Taking ``c_build <= weights.c`` only makes certificates easier.
    """

    m: int
    nu: dict[int, int] = field(default_factory=dict)
    beta: float = math.pi
    weights: WeightParams = field(default_factory=lambda: WeightParams(1.1, 0.01))
    r: float = 1.0
    c_build: float | None = None

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError("m must be a positive integer")
        _check_beta(self.beta)
        if not self.nu:
            object.__setattr__(self, "nu", nu_scheme(self.m))
        if sorted(self.nu) != list(range(-self.m + 1, self.m)):
            raise ConfigurationError(f"nu must define every phase in [-{self.m - 1}, {self.m - 1}]")
        if not self.r > 0:
            raise ConfigurationError("r must be positive")
        if self.c_build is not None and not self.c_build > 0:
            raise ConfigurationError("c_build must be positive")

    @classmethod
    def with_default_L(
        cls, m: int, c: float, q: float = 1.1, r: float = 1.0, beta: float = math.pi,
        c_ref: float = 1.0, nu: dict[int, int] | None = None,
    ) -> "BraidedSpec":
        """Spec whose ``L`` is fixed by :func:`braid_L` independently of ``c``."""
        nu = nu or nu_scheme(m)
        L = braid_L(m, nu, beta, q, c_ref)
        return cls(m, nu, beta, WeightParams(q, c, L), r)

    @property
    def build_weights(self) -> WeightParams:
        c = self.weights.c if self.c_build is None else self.c_build
        return WeightParams(self.weights.q, c, self.weights.L)

    def phase_class(self, d: int) -> ClassSpec:
        return ClassSpec(self.m * self.nu[d], self.beta, self.weights, self.r)


@dataclass(frozen=True)
class BraidCertificate:
    """Evidence that the approximant lies in the braided class.

    Attributes
    ----------
    membership : dict
        Per-phase membership value of ``xi_hat_d``.
    r : float
    distance, relative_distance : float
        ``||x - x_hat||_2`` and the same divided by ``||x||_2``.
    arho_max : float
        ``max |(a_d - 1) rho_{d,k}|`` over nodes, phases and roots; at most
        one by construction.
    """

    membership: dict[int, float]
    r: float
    distance: float
    relative_distance: float
    arho_max: float

    @property
    def failed_phases(self) -> list[int]:
        return [d for d, v in sorted(self.membership.items()) if not v <= self.r]

    @property
    def passed(self) -> bool:
        return not self.failed_phases

    def to_dict(self) -> dict:
        return {
            "membership": {str(d): v for d, v in sorted(self.membership.items())},
            "r": self.r,
            "distance": self.distance,
            "relative_distance": self.relative_distance,
            "arho_max": self.arho_max,
            "passed": self.passed,
            "failed_phases": self.failed_phases,
        }


def braided_approximant(
    x: Sequence, spec: BraidedSpec, grid: FrequencyGrid
) -> tuple[Sequence, BraidCertificate, dict[int, Sequence]]:
    """Approximate ``x`` by a member of the braided class.

    Returns
    -------
    x_hat : Sequence
        The assembled approximant.
    certificate : BraidCertificate
        Per-phase membership values and the approximation distance.  A phase
        above ``r`` is reported through ``certificate.failed_phases``.
    phases : dict
        The phase sequences ``xi_hat_d``.

    Raises
    ------
    ConfigurationError
        If the phase root sets intersect, or the input does not fit the grid
        once the insertion maps have widened it.
    """
    m = spec.m
    if not disjointness_check(m, spec.nu, spec.beta):
        raise ConfigurationError("phase root sets intersect; braided construction impossible")
    phases = range(-m + 1, m)
    xd = {d: insert_map(x, d) for d in phases}
    X = {d: ztrace(xd[d], grid).values for d in phases}
    w = grid.nodes
    bw = spec.build_weights
    roots = _all_roots(m, spec.nu, spec.beta)
    # log rho for every phase and root, shape (roots, nodes)
    lrho = {d: np.asarray(log_weight(w[None, :], roots[d][:, None], bw)) for d in phases}
    log_b = {d: -np.sum(lrho[d], axis=0) for d in phases}
    with np.errstate(under="ignore"):
        A = np.exp(sum(log_b.values()))
        a = {d: -np.expm1(log_b[d]) for d in phases}
        arho = max(float(np.max(np.exp(log_b[d][None, :] + lrho[d]))) for d in phases)
    Xh0 = X[0] * A
    for p in phases:
        if p != 0:
            Xh0 = Xh0 + (X[0] - X[p]) * a[p]
    lo, hi = grid.full_window
    xi0 = inv_ztrace(SpectrumTrace(grid, Xh0), (lo, hi))
    xi = {d: xi0 + (xd[d] - xd[0]) if d else xi0 for d in phases}
    x_hat = braid_assemble(xi, m)
    member = {d: membership_value(xi[d], spec.phase_class(d), grid) for d in phases}
    dist = (x - x_hat).norm()
    xn = x.norm()
    cert = BraidCertificate(member, spec.r, dist, dist / xn if xn else 0.0, arho)
    return x_hat, cert, xi


def detect_degeneracy(
    y: Sequence,
    m: int,
    s: int,
    candidates,
    weights: WeightParams,
    r: float,
    grid: FrequencyGrid,
    beta: float = math.pi,
) -> int | None:
    """Smallest ``nu`` such that ``supersequence(y, m, s)`` lies in ``X_{m nu, beta}``."""
    z = supersequence(y, m, s)
    for nu in sorted(candidates):
        spec = ClassSpec(m * nu, beta, weights, r)
        if membership_value(z, spec, grid) <= r:
            return nu
    return None
