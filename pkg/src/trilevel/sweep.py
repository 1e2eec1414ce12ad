"""Parameter-grid sweeps over the coupling plane with CSV emission.

A run is described by a JSON document (or an equivalent dict): atomic
configuration, level information (detunings or explicit frequencies), fixed
couplings, up to two swept coupling axes, and a mode selecting which of the
semiclassical / exact / projected quantities are computed per grid point.
Rows are evaluated independently (optionally by a worker pool) and written in
row-major grid order, so runs are reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import projected as proj
from . import quantum, semiclassical
from .errors import (
    CapSaturatedError,
    ConfigError,
    InvalidDetuningError,
    LatticeBoundaryError,
)
from .model import AtomConfig, Detunings, ModelParams, omegas_from_detuning

MODES = (
    "semiclassical",
    "quantum",
    "projected",
    "compare",
    "separatrix",
    "distribution",
    "transition-order",
)

_SC_COLS = ("e_c", "rho2_c", "rho3_c", "r_c", "m_c", "q_m", "margin")
_Q_COLS = ("e_q", "m_q", "n_q_mean", "n_q_var")
_PROJ_COLS = ("m_dis", "n_proj_mean", "n_proj_var")


@dataclass(frozen=True)
class GridAxis:
    """One swept coupling axis, inclusive of both ends."""

    name: str
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(max(count, 1))]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    fieldname: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.fieldname}: {self.message}"


@dataclass
class RunConfig:
    """Validated description of one sweep run."""

    config: AtomConfig
    mode: str
    Na: int = 1
    Omega: float = 1.0
    omega1: float = 0.0
    detunings: Detunings | None = None
    omegas: tuple[float, float] | None = None  # explicit (omega2, omega3)
    mu: dict[str, float] = field(default_factory=dict)
    grid: list[GridAxis] = field(default_factory=list)
    lattice: semiclassical.LatticeSearch = field(
        default_factory=semiclassical.LatticeSearch
    )
    m_cap: int | None = None
    m_max: int | None = None
    threads: int = 1
    out: str | None = None


def load_config(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document (no semantic validation)."""
    known = {
        "config", "mode", "Na", "Omega", "omega1", "detunings", "omegas", "mu",
        "grid", "lattice", "m_cap", "m_max", "threads", "out",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        config = AtomConfig.from_kind(doc["config"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"config: expected one of xi/lambda/v ({exc})") from exc
    mode = doc.get("mode", "")
    detunings = None
    if "detunings" in doc and doc["detunings"] is not None:
        d = doc["detunings"]
        keys = config.detuning_keys
        bad = set(d) - set(keys)
        if bad:
            raise ConfigError(
                f"detunings: keys {sorted(bad)} invalid for {config.kind.value} "
                f"(expected {list(keys)})"
            )
        detunings = Detunings((float(d.get(keys[0], 0.0)), float(d.get(keys[1], 0.0))))
    omegas = None
    if "omegas" in doc and doc["omegas"] is not None:
        o = doc["omegas"]
        try:
            omegas = (float(o["omega2"]), float(o["omega3"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError("omegas: expected {omega2: .., omega3: ..}") from exc
    grid = []
    for name, spec in (doc.get("grid") or {}).items():
        try:
            grid.append(
                GridAxis(name, float(spec["min"]), float(spec["max"]), float(spec["step"]))
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"grid.{name}: expected {{min, max, step}}") from exc
    lattice_kw = doc.get("lattice") or {}
    try:
        lattice = semiclassical.LatticeSearch(**lattice_kw)
    except TypeError as exc:
        raise ConfigError(f"lattice: {exc}") from exc
    return RunConfig(
        config=config,
        mode=mode,
        Na=int(doc.get("Na", 1)),
        Omega=float(doc.get("Omega", 1.0)),
        omega1=float(doc.get("omega1", 0.0)),
        detunings=detunings,
        omegas=omegas,
        mu={k: float(v) for k, v in (doc.get("mu") or {}).items()},
        grid=grid,
        lattice=lattice,
        m_cap=None if doc.get("m_cap") is None else int(doc["m_cap"]),
        m_max=None if doc.get("m_max") is None else int(doc["m_max"]),
        threads=int(doc.get("threads", 1)),
        out=doc.get("out"),
    )


def load_config_file(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return load_config(doc)


def validate(rc: RunConfig) -> list[Diagnostic]:
    """All semantic violations and warnings of a run configuration, without running."""
    diags: list[Diagnostic] = []
    err = lambda f, m: diags.append(Diagnostic("error", f, m))
    warn = lambda f, m: diags.append(Diagnostic("warning", f, m))

    if rc.mode not in MODES:
        err("mode", f"expected one of {MODES}, got {rc.mode!r}")
    if rc.Na < 1:
        err("Na", f"must be a positive integer, got {rc.Na}")
    if rc.Omega <= 0:
        err("Omega", f"must be positive, got {rc.Omega}")
    if (rc.detunings is None) == (rc.omegas is None):
        err("detunings/omegas", "exactly one of detunings or explicit omegas is required")
    omega23 = None
    if rc.omegas is not None:
        o2, o3 = rc.omegas
        if not (rc.omega1 <= o2 <= o3):
            err("omegas", f"levels ({rc.omega1}, {o2}, {o3}) violate omega1 <= omega2 <= omega3")
        else:
            omega23 = rc.omegas
    elif rc.detunings is not None:
        try:
            omega23 = omegas_from_detuning(rc.config, rc.detunings, rc.Omega, rc.omega1)
        except InvalidDetuningError as exc:
            err("detunings", str(exc))
        for name, val in zip(rc.config.detuning_keys, rc.detunings.values):
            if abs(val) >= rc.Omega:
                warn("detunings", f"|{name}| = {abs(val)} >= Omega: rotating-wave regime violated")

    active = rc.config.active_couplings
    forbidden = rc.config.forbidden_coupling
    for name, val in rc.mu.items():
        if name not in ("mu12", "mu13", "mu23"):
            err("mu", f"unknown coupling {name!r}")
        elif name == forbidden and val != 0.0:
            err(
                "mu",
                f"{rc.config.kind.value} configuration requires {forbidden} = 0 "
                f"(transition forbidden), got {val}",
            )
    axis_names = [ax.name for ax in rc.grid]
    for ax in rc.grid:
        if ax.name not in active:
            err("grid", f"axis {ax.name!r} is not an active coupling of "
                        f"{rc.config.kind.value} (active: {list(active)})")
        if ax.step <= 0:
            err("grid", f"axis {ax.name}: step must be positive, got {ax.step}")
        if ax.start > ax.stop:
            err("grid", f"axis {ax.name}: min {ax.start} exceeds max {ax.stop}")
        if ax.start < 0:
            err("grid", f"axis {ax.name}: couplings are nonnegative, got min {ax.start}")
        if ax.name in rc.mu:
            err("grid", f"axis {ax.name} also given as a fixed coupling")
    if len(set(axis_names)) != len(axis_names):
        err("grid", "duplicate grid axes")
    if rc.mode in ("separatrix", "transition-order"):
        if len(rc.grid) != 2:
            err("grid", f"{rc.mode} mode needs two axes: the sampled coupling and "
                        "the root-bracketing range")
    elif rc.mode == "distribution":
        if rc.grid:
            err("grid", "distribution mode evaluates a single point; drop the grid")
    elif len(rc.grid) > 2:
        err("grid", "at most 2 swept axes")
    if rc.threads < 1:
        err("threads", f"must be >= 1, got {rc.threads}")
    margin_modes = ("semiclassical", "projected", "compare", "separatrix", "transition-order")
    if rc.mode in margin_modes and rc.config.kind.value == "v" and omega23 is not None:
        o2, o3 = omega23
        if o2 - rc.omega1 <= 0 or o3 - rc.omega1 <= 0:
            err("detunings", "V separatrix needs positive Bohr frequencies omega21, omega31")
    return diags


def _params(rc: RunConfig, point: dict[str, float]) -> ModelParams:
    if rc.omegas is not None:
        omega2, omega3 = rc.omegas
    else:
        omega2, omega3 = omegas_from_detuning(rc.config, rc.detunings, rc.Omega, rc.omega1)
    mus = {name: 0.0 for name in ("mu12", "mu13", "mu23")}
    mus.update(rc.mu)
    mus.update(point)
    return ModelParams(
        Omega=rc.Omega, omega1=rc.omega1, omega2=omega2, omega3=omega3, Na=rc.Na, **mus
    )


def columns_for(rc: RunConfig) -> list[str]:
    """Fixed CSV column set of a mode (active couplings lead)."""
    act = list(rc.config.active_couplings)
    if rc.mode == "semiclassical":
        return act + list(_SC_COLS) + ["error"]
    if rc.mode == "quantum":
        return act + list(_Q_COLS) + ["error"]
    if rc.mode == "projected":
        return act + list(_SC_COLS) + list(_PROJ_COLS) + ["error"]
    if rc.mode == "compare":
        return act + list(_SC_COLS) + list(_Q_COLS) + list(_PROJ_COLS) + ["delta_n", "error"]
    if rc.mode == "separatrix":
        return act + ["margin"]
    if rc.mode == "transition-order":
        return act + ["order", "derivative_jump"]
    if rc.mode == "distribution":
        return ["m", "p_m", "m_mean"]
    raise ConfigError(f"unknown mode {rc.mode!r}")


def _semiclassical_fields(rc: RunConfig, params: ModelParams, row: dict) -> semiclassical.CriticalPoint:
    cp = semiclassical.minimize_lattice(params, rc.lattice)
    exc = semiclassical.coherent_expectations(cp, params, rc.config)
    row.update(
        e_c=cp.energy_per_particle,
        rho2_c=cp.coords.rho2,
        rho3_c=cp.coords.rho3,
        r_c=cp.coords.r,
        m_c=exc.M_mean / params.Na,
        q_m=exc.Q_M,
        margin=semiclassical.separatrix_margin(params, rc.config),
    )
    row["_M_mean"] = exc.M_mean
    return cp


def _quantum_fields(rc: RunConfig, params: ModelParams, row: dict, M_mean: float) -> quantum.GroundResult:
    cap = rc.m_cap
    if cap is None:
        cap = quantum.default_m_cap(params, rc.config, M_mean)
    gr = quantum.global_ground(params, rc.config, cap)
    row.update(e_q=gr.energy, m_q=gr.M, n_q_mean=gr.n_mean, n_q_var=gr.n_var)
    if gr.degenerate_Ms:
        row["_degenerate"] = gr.degenerate_Ms
    return gr


def _projected_fields(rc: RunConfig, params: ModelParams, row: dict, cp, M_mean: float) -> float:
    M_dis = proj.m_dis(M_mean)
    if M_dis == 0:
        n_mean = n2_mean = 0.0
    else:
        n_mean, n2_mean = proj.projected_photon_moments(cp, params.Na, rc.config, M_dis)
    row.update(m_dis=M_dis, n_proj_mean=n_mean, n_proj_var=n2_mean - n_mean * n_mean)
    return n_mean


def compute_row(rc: RunConfig, point: dict[str, float]) -> dict:
    """One grid point's record; errors land in the 'error' field."""
    params = _params(rc, point)
    row: dict = {name: params.mu(name) for name in rc.config.active_couplings}
    try:
        if rc.mode in ("semiclassical", "projected", "compare"):
            cp = _semiclassical_fields(rc, params, row)
        if rc.mode in ("quantum", "compare"):
            M_mean = row.get("_M_mean")
            if M_mean is None:
                cp0 = semiclassical.minimize_lattice(params, rc.lattice)
                M_mean = semiclassical.coherent_expectations(cp0, params, rc.config).M_mean
            gr = _quantum_fields(rc, params, row, M_mean)
        if rc.mode in ("projected", "compare"):
            n_proj = _projected_fields(rc, params, row, cp, row["_M_mean"])
        if rc.mode == "compare":
            row["delta_n"] = proj.delta_n(n_proj, gr.n_mean, params.Na)
    except LatticeBoundaryError:
        row["error"] = "lattice_boundary"
    except CapSaturatedError:
        row["error"] = "cap_saturated"
    return row


# Module-level state for pool workers (populated by the fork initializer).
_WORKER_RC: RunConfig | None = None


def _init_worker(rc: RunConfig) -> None:
    global _WORKER_RC
    _WORKER_RC = rc


def _worker(point: dict[str, float]) -> dict:
    return compute_row(_WORKER_RC, point)


def _grid_points(rc: RunConfig) -> list[dict[str, float]]:
    if not rc.grid:
        return [{}]
    if len(rc.grid) == 1:
        return [{rc.grid[0].name: v} for v in rc.grid[0].values()]
    a, b = rc.grid
    return [{a.name: va, b.name: vb} for va in a.values() for vb in b.values()]


def _bracket_root(fn, lo: float, hi: float, step: float) -> float | None:
    """First sign change of fn on [lo, hi] scanned with `step`, bisected to 1e-10."""
    prev_x, prev_f = lo, fn(lo)
    if prev_f == 0.0:
        return lo
    x = lo
    while x < hi - 1e-12:
        x = min(x + step, hi)
        f = fn(x)
        if f == 0.0:
            return x
        if np.sign(f) != np.sign(prev_f):
            a, fa, b = prev_x, prev_f, x
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = fn(mid)
                if fm == 0.0 or (b - a) < 1e-10:
                    return mid
                if np.sign(fm) == np.sign(fa):
                    a, fa = mid, fm
                else:
                    b = mid
            return 0.5 * (a + b)
        prev_x, prev_f = x, f
    return None


@dataclass
class RunResult:
    columns: list[str]
    rows: list[dict]
    summary: str
    exit_code: int


def run(rc: RunConfig) -> RunResult:
    """Execute a validated run configuration and collect rows in grid order."""
    problems = [d for d in validate(rc) if d.severity == "error"]
    if problems:
        raise ConfigError("; ".join(str(d) for d in problems))
    cols = columns_for(rc)
    if rc.mode == "distribution":
        rows = _run_distribution(rc)
    elif rc.mode in ("separatrix", "transition-order"):
        rows = _run_rootfind(rc)
    else:
        points = _grid_points(rc)
        if rc.threads > 1 and len(points) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(rc.threads, initializer=_init_worker, initargs=(rc,)) as pool:
                rows = pool.map(_worker, points, chunksize=max(1, len(points) // (8 * rc.threads)))
        else:
            rows = [compute_row(rc, pt) for pt in points]
    return _finalize(rc, cols, rows)


def _run_distribution(rc: RunConfig) -> list[dict]:
    params = _params(rc, {})
    cp = semiclassical.minimize_lattice(params, rc.lattice)
    exc = semiclassical.coherent_expectations(cp, params, rc.config)
    m_max = rc.m_max
    if m_max is None:
        m_max = int(math.ceil(exc.M_mean + 10.0 * math.sqrt(max(exc.M_var, 0.0)) + 20))
    dist = semiclassical.m_distribution(cp, params.Na, rc.config, m_max)
    return [
        {"m": M, "p_m": float(p), "m_mean": exc.M_mean}
        for M, p in enumerate(dist.probs)
    ]


def _run_rootfind(rc: RunConfig) -> list[dict]:
    sampled, bracket = rc.grid
    rows = []
    for a in sampled.values():
        fn = lambda b: semiclassical.separatrix_margin(
            _params(rc, {sampled.name: a, bracket.name: b}), rc.config
        )
        root = _bracket_root(fn, bracket.start, bracket.stop, bracket.step)
        row: dict = {sampled.name: a}
        if root is None:
            rows.append(row)
            continue
        row[bracket.name] = root
        if rc.mode == "separatrix":
            row["margin"] = fn(root)
        else:
            params = _params(rc, {sampled.name: a, bracket.name: root})
            report = semiclassical.classify_transition(
                params, rc.config, {bracket.name: 1.0}, rc.lattice
            )
            row["order"] = report.order
            row["derivative_jump"] = report.derivative_jump
        rows.append(row)
    return rows


def _finalize(rc: RunConfig, cols: list[str], rows: list[dict]) -> RunResult:
    n_err = sum(1 for r in rows if r.get("error"))
    n_degen = sum(1 for r in rows if r.get("_degenerate"))
    lines = [
        f"mode={rc.mode} config={rc.config.kind.value} Na={rc.Na} rows={len(rows)}",
    ]
    if n_err:
        lines.append(f"rows with errors: {n_err}")
    if n_degen:
        flagged = [r for r in rows if r.get("_degenerate")]
        locs = ", ".join(
            "(" + ", ".join(f"{k}={r[k]:g}" for k in rc.config.active_couplings if k in r) + ")"
            for r in flagged[:5]
        )
        lines.append(f"degenerate block minima at {n_degen} point(s): {locs}")
    def _extreme(key, fn, label):
        vals = [(r[key], r) for r in rows if isinstance(r.get(key), (int, float))]
        if vals:
            v, r = fn(vals, key=lambda t: t[0])
            at = ", ".join(f"{k}={r[k]:g}" for k in rc.config.active_couplings if k in r)
            lines.append(f"{label} = {v:.6g} at ({at})")
    if rc.mode in ("semiclassical", "projected", "compare"):
        _extreme("e_c", min, "min E^c")
        _extreme("m_c", max, "max M^c")
    if rc.mode in ("quantum", "compare"):
        _extreme("e_q", min, "min E^q")
    if rc.mode == "compare":
        _extreme("delta_n", max, "max delta_n")
    return RunResult(
        columns=cols,
        rows=rows,
        summary="\n".join(lines),
        exit_code=2 if n_err else 0,
    )


def format_value(v) -> str:
    """CSV cell formatting: 17 significant digits for floats, empty for missing."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(result: RunResult, fh) -> None:
    fh.write(",".join(result.columns) + "\n")
    for row in result.rows:
        fh.write(",".join(format_value(row.get(c)) for c in result.columns) + "\n")
