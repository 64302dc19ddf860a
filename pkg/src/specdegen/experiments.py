"""Reproducible numerical experiments: γ tables, distance curves, paths, recovery demo.

Every CSV written here starts with a ``# config_hash=...`` line that
identifies the configuration which produced it.  The CSV bodies are
deterministic for a fixed configuration.  Timings go to a separate JSON
file so they never perturb the tables.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .classes import BraidedSpec, bandstop_project, braided_approximant
from .errors import KernelOverflowError, SpanError
from .kernels import (
    GapSpec,
    KernelSpec,
    distance_curve,
    gap_mask,
    kernel_log10_norm,
    masked_transfer,
)
from .pipeline import recover_from_subsequence
from .spectral import (
    ClassSpec,
    FrequencyGrid,
    Sequence,
    SpectrumTrace,
    WeightParams,
    inv_ztrace,
    make_grid,
    membership_value,
)
from .svg import line_plot

__all__ = [
    "ExperimentConfig",
    "ErrorRecord",
    "gen_gaussian_path",
    "test_signal",
    "masked_two_step",
    "run_gamma_table",
    "summarize",
    "write_gamma_table",
    "emit_curves",
    "emit_paths",
    "run_recovery_demo",
    "write_sequence_csv",
    "read_sequence_csv",
]

Window = Literal["grid", "T", "past"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of the numerical experiments.

    ``window`` selects the observation lattice for the two-step prediction:
    ``"grid"`` uses every even index in the grid window, ``"T"`` the even
    indices in ``[-T, T]`` and ``"past"`` those in ``[-T, 0]``.
    """

    T: int = 250
    n: int = 2
    m_nu: int = 4
    beta: float = math.pi
    delta: float = 0.5
    rhat: float = 1.2
    gammas: tuple[float, ...] = (3.0, 10.0, 20.0)
    grid: int = 2**14
    seed: int = 1
    seeds: int = 1
    process: Literal["ar1", "white"] = "ar1"
    phi: float = 0.5
    lattice: int = 2
    window: Window = "grid"
    precision: Literal["double", "extended"] = "double"
    out: str = "out"

    def hash(self) -> str:
        """Short digest of every field except the output directory."""
        d = dataclasses.asdict(self)
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def seed_list(self) -> list[int]:
        return [self.seed + i for i in range(self.seeds)]


@dataclass
class ErrorRecord:
    """One row of the γ table."""

    gamma: float
    seed: int
    E: float
    log10_sup_norm: float
    runtime_ms: float = field(default=0.0, compare=False)
    flag: str = ""

    @property
    def abs_E(self) -> float:
        return abs(self.E)


def _fmt(v: float) -> str:
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return f"{v:.12g}"


def gen_gaussian_path(
    T: int, seed: int, process: Literal["ar1", "white"] = "ar1", phi: float = 0.5
) -> Sequence:
    """Real Gaussian path on ``[-T, T]``.

    ``"ar1"`` is ``g(t) = phi g(t-1) + e(t)`` with unit-variance
    innovations, started from its stationary law.  ``"white"`` is i.i.d.
    standard normal.
    """
    if T < 8:
        raise ValueError(f"T must be at least 8, got {T}")
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(2 * T + 1)
    if process == "white":
        return Sequence(-T, e)
    if process != "ar1":
        raise ValueError(f"unknown process {process!r}")
    g = np.empty_like(e)
    g[0] = e[0] / math.sqrt(1.0 - phi * phi)
    for i in range(1, g.size):
        g[i] = phi * g[i - 1] + e[i]
    return Sequence(-T, g)


def test_signal(g: Sequence, cfg: ExperimentConfig, grid: FrequencyGrid) -> Sequence:
    """Band-stop projection of ``g`` with gaps of half-width ``delta`` at ``R_{m nu, beta}``."""
    return bandstop_project(g, GapSpec(cfg.delta, cfg.m_nu, cfg.beta), grid)


def _masked_taps(spec: KernelSpec, cfg: ExperimentConfig, grid: FrequencyGrid) -> tuple[np.ndarray, bool]:
    H = masked_transfer(spec, GapSpec(cfg.delta, cfg.m_nu, cfg.beta), grid)
    taps = inv_ztrace(H, grid.full_window)
    return taps.samples, H.any_overflow


def _observation_mask(t: np.ndarray, cfg: ExperimentConfig) -> np.ndarray:
    lat = np.mod(t, cfg.lattice) == 0
    if cfg.window == "grid":
        return lat
    if cfg.window == "T":
        return lat & (t >= -cfg.T) & (t <= cfg.T)
    if cfg.window == "past":
        return lat & (t >= -cfg.T) & (t <= 0)
    raise ValueError(f"unknown observation window {cfg.window!r}")


def masked_two_step(x: Sequence, taps: np.ndarray, cfg: ExperimentConfig, grid: FrequencyGrid) -> float:
    """Estimate ``x(n)`` as ``sum_k h~(-k) x(k)`` over the observation lattice.

    ``taps`` holds the masked kernel on the grid window ``[-N/2, N/2-1]``;
    it is periodic with period ``N``, so indices wrap.
    """
    N = grid.size
    t = x.indices
    sel = _observation_mask(t, cfg)
    idx = np.mod(-t[sel] + N // 2, N)
    return float(np.real(np.dot(taps[idx], x.samples[sel])))


def run_gamma_table(cfg: ExperimentConfig) -> list[ErrorRecord]:
    """Relative two-step errors ``E = (x_hat(0) - x(n)) / RMS`` for every γ and seed.

    The RMS is taken over ``x(t)``, ``-T <= t <= 0``.  A zero path gives an
    undefined ``E``, recorded as NaN with flag ``zero-signal``.
    """
    grid = make_grid(cfg.grid)
    signals = []
    for seed in cfg.seed_list:
        g = gen_gaussian_path(cfg.T, seed, cfg.process, cfg.phi)
        x = test_signal(g, cfg, grid)
        x = Sequence(x.offset, x.samples.real)
        past = x(np.arange(-cfg.T, 1)).real
        rms = math.sqrt(float(np.mean(past**2)))
        signals.append((seed, x, rms))
    records = []
    for gamma in cfg.gammas:
        t0 = time.perf_counter()
        spec = KernelSpec(cfg.n, 1, cfg.m_nu, gamma, cfg.rhat, cfg.beta)
        taps, over = _masked_taps(spec, cfg, grid)
        log10 = kernel_log10_norm(spec, cfg.precision)
        setup = (time.perf_counter() - t0) * 1e3
        for seed, x, rms in signals:
            t1 = time.perf_counter()
            flag = "overflow" if over else ""
            if rms == 0.0:
                E, flag = math.nan, "zero-signal"
            else:
                est = masked_two_step(x, taps, cfg, grid)
                E = (est - x(cfg.n).real) / rms
            ms = setup / len(signals) + (time.perf_counter() - t1) * 1e3
            records.append(ErrorRecord(float(gamma), seed, float(E), log10, ms, flag))
    return records


def summarize(records: Iterable[ErrorRecord]) -> list[dict]:
    """Median ``|E|`` and median signed ``E`` per γ."""
    by: dict[float, list[ErrorRecord]] = {}
    for r in records:
        by.setdefault(r.gamma, []).append(r)
    out = []
    for gamma, rs in by.items():
        E = np.array([r.E for r in rs if math.isfinite(r.E)])
        out.append(
            {
                "gamma": gamma,
                "median_abs_E": float(np.median(np.abs(E))) if E.size else math.nan,
                "median_E": float(np.median(E)) if E.size else math.nan,
                "log10_sup_norm": rs[0].log10_sup_norm,
                "count": len(rs),
            }
        )
    return out


def write_gamma_table(cfg: ExperimentConfig, records: list[ErrorRecord], out: Path) -> tuple[Path, Path]:
    """Write ``gamma_table.csv`` (rows), ``gamma_summary.csv`` and ``gamma_timing.json``."""
    out.mkdir(parents=True, exist_ok=True)
    head = f"# config_hash={cfg.hash()}\n"
    rows = [head + "gamma,seed,E,abs_E,log10_sup_norm,flag"]
    for r in records:
        rows.append(",".join([_fmt(r.gamma), str(r.seed), _fmt(r.E), _fmt(r.abs_E), _fmt(r.log10_sup_norm), r.flag]))
    table = out / "gamma_table.csv"
    _atomic_write(table, "\n".join(rows) + "\n")
    summ = [head + "gamma,median_abs_E,median_E,log10_sup_norm,count"]
    for s in summarize(records):
        summ.append(",".join([_fmt(s["gamma"]), _fmt(s["median_abs_E"]), _fmt(s["median_E"]), _fmt(s["log10_sup_norm"]), str(s["count"])]))
    summary = out / "gamma_summary.csv"
    _atomic_write(summary, "\n".join(summ) + "\n")
    timing = {"config_hash": cfg.hash(), "runtime_ms": [[r.gamma, r.seed, r.runtime_ms] for r in records]}
    _atomic_write(out / "gamma_timing.json", json.dumps(timing, indent=1) + "\n")
    return table, summary


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def write_sequence_csv(path: Path, x: Sequence, config_hash: str | None = None) -> Path:
    lines = [f"# config_hash={config_hash}"] if config_hash else []
    lines.append("t,re,im")
    lines += [f"{t},{_fmt(v.real)},{_fmt(v.imag)}" for t, v in zip(x.indices.tolist(), x.samples.tolist())]
    _atomic_write(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def read_sequence_csv(path: Path) -> Sequence:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if rows[0].strip() != "t,re,im":
        raise ValueError(f"{path}: expected header t,re,im")
    data = {}
    for ln in rows[1:]:
        t, re, im = ln.split(",")
        data[int(t)] = complex(float(re), float(im))
    return Sequence.from_mapping(data)


def write_trace_csv(path: Path, F: SpectrumTrace, config_hash: str | None = None) -> Path:
    lines = [f"# config_hash={config_hash}"] if config_hash else []
    lines.append("omega,re,im")
    vals = np.asarray(F.values, dtype=np.complex128)
    lines += [f"{_fmt(w)},{_fmt(v.real)},{_fmt(v.imag)}" for w, v in zip(F.omega.tolist(), vals.tolist())]
    _atomic_write(Path(path), "\n".join(lines) + "\n")
    return Path(path)


def _write_curve(path: Path, omega, dist, flags, config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}", "omega,distance,overflow_flag"]
    lines += [f"{_fmt(w)},{_fmt(d)},{int(f)}" for w, d, f in zip(omega.tolist(), dist.tolist(), flags.tolist())]
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Curves, paths and recovery
# ---------------------------------------------------------------------------


def masked_distance(spec: KernelSpec, gap: GapSpec, grid: FrequencyGrid) -> SpectrumTrace:
    """``|H~_n - e^{inw} I|``: the unmasked distance on retained nodes, zero elsewhere."""
    d = distance_curve(spec, grid)
    keep = ~gap_mask(gap, grid)
    return SpectrumTrace(grid, np.where(keep, d.values, 0.0), None, d.overflow & keep)


def interior_interval(cfg: ExperimentConfig, grid: FrequencyGrid) -> np.ndarray:
    """Mask of the retained arc around ``w = 0`` (between the first two roots)."""
    keep = ~gap_mask(GapSpec(cfg.delta, cfg.m_nu, cfg.beta), grid)
    w = grid.nodes
    return keep & (np.abs(w) < math.pi / cfg.m_nu)


def emit_curves(cfg: ExperimentConfig) -> dict:
    """Distance curves over the circle and the interior arc, unmasked and masked.

    Writes ``curve_*.csv`` and companion SVG files; returns summary maxima.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.grid)
    gap = GapSpec(cfg.delta, cfg.m_nu, cfg.beta)
    inner = interior_interval(cfg, grid)
    w = grid.nodes
    h = cfg.hash()
    summary = {}
    full_series, inner_series, masked_series = [], [], []
    for gamma in cfg.gammas:
        spec = KernelSpec(cfg.n, 1, cfg.m_nu, gamma, cfg.rhat)
        d = distance_curve(spec, grid)
        md = masked_distance(spec, gap, grid)
        tag = f"{gamma:g}"
        _write_curve(out / f"curve_full_gamma{tag}.csv", w, d.values, d.overflow, h)
        _write_curve(out / f"curve_interior_gamma{tag}.csv", w[inner], d.values[inner], d.overflow[inner], h)
        _write_curve(out / f"curve_masked_gamma{tag}.csv", w, md.values, md.overflow, h)
        with np.errstate(divide="ignore"):
            full_series.append((f"gamma={tag}", w, np.log10(d.values)))
            masked_series.append((f"gamma={tag}", w, np.log10(md.values)))
        inner_series.append((f"gamma={tag}", w[inner], d.values[inner]))
        summary[tag] = {
            "max_full": float(np.max(d.values)),
            "max_interior": float(np.max(d.values[inner])),
            "max_masked": float(np.max(md.values)),
            "overflow_nodes": int(d.overflow.sum()),
        }
    line_plot(out / "curve_full.svg", full_series, title="log10 |H_n - e^{inw}| on (-pi, pi]", xlabel="omega", ylabel="log10 distance")
    line_plot(out / "curve_interior.svg", inner_series, title="|H_n - e^{inw}| on the interior arc", xlabel="omega", ylabel="distance")
    line_plot(out / "curve_masked.svg", masked_series, title="log10 |H~_n - e^{inw} I|", xlabel="omega", ylabel="log10 distance")
    return summary


def emit_paths(cfg: ExperimentConfig, q: float = 2.0, c: float = 0.05) -> dict:
    """Write the Gaussian path ``g`` and its band-stop projection ``x`` on ``[-T, T]``.

    Also reports the membership value of ``x`` for the class with roots
    ``R_{m nu, beta}`` and weight ``(q, c)``.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.grid)
    g = gen_gaussian_path(cfg.T, cfg.seed, cfg.process, cfg.phi)
    x_full = test_signal(g, cfg, grid)
    x = x_full.on(-cfg.T, cfg.T)
    h = cfg.hash()
    write_sequence_csv(out / "path_g.csv", g, h)
    write_sequence_csv(out / "path_x.csv", Sequence(x.offset, x.samples.real), h)
    t = g.indices
    line_plot(out / "paths.svg", [("g", t, g.samples.real), ("x", t, x.samples.real)], title="Gaussian path and band-stop projection", xlabel="t")
    value = membership_value(x_full, ClassSpec(cfg.m_nu, cfg.beta, WeightParams(q, c), 1.0), grid)
    report = {
        "config_hash": h,
        "norm_g": g.norm(),
        "norm_x": x_full.norm(),
        "membership_value": value,
        "membership_weights": {"q": q, "c": c, "L": 1.0},
    }
    _atomic_write(out / "paths.json", json.dumps(report, indent=1) + "\n")
    return report


def run_recovery_demo(
    cfg: ExperimentConfig,
    *,
    m: int = 2,
    M: int = 8,
    s: int = 2,
    length: int = 64,
    c_ladder: tuple[float, ...] = (0.1, 0.01, 0.001),
    q: float = 1.1,
    grid_size: int | None = None,
) -> dict:
    """Braided approximants of a random ``x`` and recovery from their subsequence.

    The approximant built at the last rung of ``c_ladder`` is recovered for
    every γ.  Kernel overflow in double precision is recorded per γ rather
    than raised.
    """
    grid = make_grid(grid_size or cfg.grid)
    rng = np.random.default_rng(cfg.seed)
    x = Sequence(-(length // 2), rng.standard_normal(length))
    r = 4.0 * math.pi * x.norm() ** 2
    ladder = []
    member = spec = None
    for c in c_ladder:
        spec = BraidedSpec.with_default_L(m, c, q=q, r=r, beta=cfg.beta)
        x_hat, cert, _ = braided_approximant(x, spec, grid)
        ladder.append({"c_build": c, **cert.to_dict()})
        member = x_hat
    recovery = []
    sup = float(np.max(np.abs(member.samples)))
    for gamma in cfg.gammas:
        row: dict = {"gamma": gamma}
        try:
            res = recover_from_subsequence(
                member, spec, M, grid, s=s, gamma=gamma, rhat=cfg.rhat, precision=cfg.precision
            )
            err = np.abs(res.estimates.samples - member(res.estimates.indices))
            row.update(
                max_abs_error=float(err.max()),
                relative_error=float(err.max() / sup),
                max_budget=res.max_bound,
                status="ok",
            )
        except KernelOverflowError as exc:
            row.update(status="overflow", log10_norm=exc.log10_norm, message=str(exc))
        except SpanError as exc:
            row.update(status="span", required=exc.required, message=str(exc))
        recovery.append(row)
    report = {
        "config_hash": cfg.hash(),
        "m": m,
        "M": M,
        "s": s,
        "r": r,
        "density_ladder": ladder,
        "member_sup": sup,
        "recovery": recovery,
    }
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "recovery.json", json.dumps(report, indent=1, default=_json_default) + "\n")
    return report


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))
