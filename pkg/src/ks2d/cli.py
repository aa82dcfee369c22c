"""Command-line surface: classify, simulate, sweep, and self-check.

Configuration is a flat ``section.key = value`` text format with no nesting;
unknown keys are rejected with their line number so typos fail loudly.  All
artifacts (CSV, JSON, snapshots, figures) are written atomically via a
temporary file and rename.  Sweeps distribute points over a process pool but
gather results through a single writer in grid order, so output bytes do not
depend on the worker count.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import diagnostics as dg
from .hls import check_bounded_below, check_minimizer_exists, find_admissible_params
from .kernel import Field, KernelProfile, build_kernel_table, chemo_field, gradient_bound_constant
from .model import (
    MassPair,
    Parameters,
    RegionLabel,
    classify,
    moment_rate,
    parabola_value,
    predict_blowup_deadline,
)
from .solver import (
    DEFAULT_EPSILON,
    GaussianBump,
    InitialData,
    SolverConfig,
    TerminationReason,
    run,
    save_snapshot,
)

log = logging.getLogger("ks2d.cli")

EIGHT_PI = 8.0 * math.pi

SWEEP_COLUMNS = ("theta1", "theta2", "label", "parabola_value", "moment_rate", "probe")


class ConfigError(ValueError):
    """Malformed configuration; message carries file and line context."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# Exact-match config keys and their parsers.  Gaussian components use the
# indexed pattern handled separately below.
_SCHEMA: dict[str, Callable[[str], Any]] = {
    "parameters.mu": float,
    "parameters.chi1": float,
    "parameters.chi2": float,
    "masses.theta1": float,
    "masses.theta2": float,
    "model.tolerance": float,
    "grid.nx": int,
    "grid.ny": int,
    "grid.L": float,
    "solver.epsilon": float,
    "solver.cfl_diffusion": float,
    "solver.cfl_advection": float,
    "solver.dt_floor": float,
    "solver.blowup_density_cap": float,
    "solver.horizon": float,
    "init.snapshot": str,
    "output.cadence": int,
    "sweep.theta1_min": float,
    "sweep.theta1_max": float,
    "sweep.theta1_count": int,
    "sweep.theta2_min": float,
    "sweep.theta2_max": float,
    "sweep.theta2_count": int,
    "sweep.probe": _parse_bool,
    "sweep.probe_horizon": float,
    "sweep.probe_nx": int,
    "sweep.probe_L": float,
    "sweep.probe_width": float,
    "sweep.workers": int,
}

_BUMP_KEY = re.compile(r"init\.species([12])\.(\d+)\.(mass|center_x|center_y|width)$")


def parse_config(path: str | Path) -> dict[str, Any]:
    """Read a flat dotted-key config file into a typed dictionary."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
        parser = _SCHEMA.get(key)
        if parser is None and _BUMP_KEY.match(key):
            parser = float
        if parser is None:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def _require(cfg: dict[str, Any], key: str) -> Any:
    if key not in cfg:
        raise ConfigError(f"missing required config key {key!r}")
    return cfg[key]


def _parameters_from(cfg: dict[str, Any]) -> Parameters:
    try:
        return Parameters(
            mu=cfg.get("parameters.mu", 1.0),
            chi1=cfg.get("parameters.chi1", 1.0),
            chi2=cfg.get("parameters.chi2", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _bumps_from(cfg: dict[str, Any], species: int) -> tuple[GaussianBump, ...]:
    indexed: dict[int, dict[str, float]] = {}
    for key, value in cfg.items():
        match = _BUMP_KEY.match(key)
        if match and int(match.group(1)) == species:
            indexed.setdefault(int(match.group(2)), {})[match.group(3)] = value
    bumps = []
    for idx in sorted(indexed):
        fields = indexed[idx]
        if "mass" not in fields:
            raise ConfigError(f"init.species{species}.{idx} is missing its mass")
        try:
            bumps.append(
                GaussianBump(
                    mass=fields["mass"],
                    center=(fields.get("center_x", 0.0), fields.get("center_y", 0.0)),
                    width=fields.get("width", 1.0),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"init.species{species}.{idx}: {exc}") from exc
    return tuple(bumps)


def _initial_from(cfg: dict[str, Any]) -> InitialData:
    nx = _require(cfg, "grid.nx")
    ny = cfg.get("grid.ny", nx)
    L = _require(cfg, "grid.L")
    snapshot = cfg.get("init.snapshot")
    try:
        return InitialData(
            nx=nx,
            ny=ny,
            L=L,
            species1=_bumps_from(cfg, 1),
            species2=_bumps_from(cfg, 2),
            snapshot=Path(snapshot) if snapshot is not None else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _solver_from(cfg: dict[str, Any]) -> SolverConfig:
    try:
        return SolverConfig(
            horizon=_require(cfg, "solver.horizon"),
            epsilon=cfg.get("solver.epsilon", DEFAULT_EPSILON),
            cfl_diffusion=cfg.get("solver.cfl_diffusion", 0.4),
            cfl_advection=cfg.get("solver.cfl_advection", 0.12),
            dt_floor=cfg.get("solver.dt_floor", 1e-12),
            blowup_density_cap=cfg.get("solver.blowup_density_cap"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _atomic_write_text(path: Path, content: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_savefig(fig: Any, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=110)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pyplot() -> Any:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _timeseries_figure(records: Sequence[dg.DiagnosticsRecord], path: Path) -> None:
    plt = _pyplot()
    t = [r.t for r in records]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), constrained_layout=True)

    ax = axes[0][0]
    ax.plot(t, [r.mass1 for r in records], label="mass 1")
    ax.plot(t, [r.mass2 for r in records], label="mass 2")
    ax.set_xlabel("t")
    ax.set_title("masses")
    ax.legend()

    ax = axes[0][1]
    ax.plot(t, [r.weighted_moment for r in records], label="weighted")
    ax.plot(t, [r.total_moment for r in records], label="total")
    ax.set_xlabel("t")
    ax.set_title("second moments")
    ax.legend()

    ax = axes[1][0]
    ax.plot(t, [r.entropy1 for r in records], label="entropy 1")
    ax.plot(t, [r.entropy2 for r in records], label="entropy 2")
    ax.plot(t, [r.free_energy for r in records], label="free energy")
    ax.set_xlabel("t")
    ax.set_title("entropies and free energy")
    ax.legend()

    ax = axes[1][1]
    ax.plot(t, [r.dissipation for r in records], label="dissipation")
    ax.plot(t, [r.max_u1 for r in records], label="max u1")
    ax.plot(t, [r.max_u2 for r in records], label="max u2")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_title("dissipation and peaks (log scale)")
    ax.legend()

    _atomic_savefig(fig, path)
    plt.close(fig)


def _density_figure(u1: Field, u2: Field, v: Field, path: Path) -> None:
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), constrained_layout=True)
    extent = (-u1.L, u1.L, -u1.L, u1.L)
    for ax, field, title in ((axes[0], u1, "u1"), (axes[1], u2, "u2"), (axes[2], v, "v")):
        image = ax.imshow(field.values.T, origin="lower", extent=extent, cmap="viridis")
        ax.set_title(title)
        fig.colorbar(image, ax=ax, shrink=0.8)
    _atomic_savefig(fig, path)
    plt.close(fig)


def _region_figure(rows: Sequence[tuple[Any, ...]], p: Parameters, path: Path) -> None:
    plt = _pyplot()
    colors = {
        "GlobalExistence": "tab:green",
        "BlowupRadial": "tab:orange",
        "BlowupGeneral": "tab:red",
        "Boundary": "tab:blue",
    }
    fig, ax = plt.subplots(figsize=(6.5, 5.5), constrained_layout=True)
    th1 = np.array([row[0] for row in rows])
    th2 = np.array([row[1] for row in rows])
    labels = [row[2] for row in rows]
    plotted = False
    for label, color in colors.items():
        mask = np.array([item == label for item in labels])
        if np.any(mask):
            ax.scatter(th1[mask], th2[mask], s=12, c=color, label=label)
            plotted = True
    # Threshold geometry: parabola contour plus the two critical lines.
    hi1 = float(th1.max()) if th1.size and th1.max() > th1.min() else float(th1.min() + 1.0)
    hi2 = float(th2.max()) if th2.size and th2.max() > th2.min() else float(th2.min() + 1.0)
    t1 = np.linspace(max(float(th1.min()), 0.0), hi1, 200)
    t2 = np.linspace(max(float(th2.min()), 0.0), hi2, 200)
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    P = EIGHT_PI * (p.mu * T1 / p.chi1 + T2 / p.chi2) - (T1 + T2) ** 2
    ax.contour(T1, T2, P, levels=[0.0], colors="black", linewidths=1.0)
    ax.axvline(EIGHT_PI * p.mu / p.chi1, color="black", linestyle="--", linewidth=0.8)
    ax.axhline(EIGHT_PI / p.chi2, color="black", linestyle="--", linewidth=0.8)
    ax.set_xlabel("theta1")
    ax.set_ylabel("theta2")
    ax.set_title("mass-plane regions")
    if plotted:
        ax.legend(loc="upper right", fontsize=8)
    _atomic_savefig(fig, path)
    plt.close(fig)


def _classify_report(cfg: dict[str, Any]) -> dict[str, Any]:
    p = _parameters_from(cfg)
    try:
        m = MassPair(_require(cfg, "masses.theta1"), _require(cfg, "masses.theta2"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tol = cfg.get("model.tolerance", 0.0)
    label = classify(m, p, tol=tol)
    rate = moment_rate(m, p)

    # Deadline needs an initial weighted moment, which only exists when the
    # config describes initial data; Gaussians admit the closed form
    # mass * (2 width^2 + |center|^2) per component.
    moment0 = None
    bumps1, bumps2 = _bumps_from(cfg, 1), _bumps_from(cfg, 2)
    if bumps1 or bumps2:
        m1 = sum(b.mass * (2.0 * b.width**2 + b.center[0] ** 2 + b.center[1] ** 2) for b in bumps1)
        m2 = sum(b.mass * (2.0 * b.width**2 + b.center[0] ** 2 + b.center[1] ** 2) for b in bumps2)
        moment0 = (p.mu / p.chi1) * m1 + (1.0 / p.chi2) * m2
    deadline = predict_blowup_deadline(moment0, rate) if moment0 is not None else None

    admissible = None
    if m.theta1 + m.theta2 > 0.0:
        found = find_admissible_params(m, p)
        if found is not None:
            admissible = {"a": found.a, "b": found.b}

    return {
        "label": label.value,
        "parabola_value": parabola_value(m, p),
        "line1_margin": EIGHT_PI * p.mu / p.chi1 - m.theta1,
        "line2_margin": EIGHT_PI / p.chi2 - m.theta2,
        "moment_rate": rate,
        "initial_weighted_moment": moment0,
        "blowup_deadline": deadline,
        "admissible_params": admissible,
    }


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    report = _classify_report(cfg)
    payload = json.dumps(report, indent=2)
    print(payload)
    if args.out is not None:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(outdir / "classify.json", payload + "\n")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    p = _parameters_from(cfg)
    init = _initial_from(cfg)
    solver_cfg = _solver_from(cfg)
    cadence = args.cadence if args.cadence is not None else cfg.get("output.cadence", 1)
    if cadence < 1:
        raise ConfigError(f"cadence must be positive, got {cadence}")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    records: list[dg.DiagnosticsRecord] = []

    def sink(state: Any, cf: Any, dt: float) -> None:
        records.append(dg.make_record(state, cf, p, dt))

    log.info("simulate: grid %sx%s, horizon %s", init.nx, init.ny, solver_cfg.horizon)
    try:
        outcome = run(init, solver_cfg, p, sink=sink, cadence=cadence)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    buffer = io.StringIO()
    csv_sink = dg.CsvSink(buffer)
    for record in records:
        dg.emit(record, csv_sink)
    _atomic_write_text(outdir / "timeseries.csv", buffer.getvalue())

    save_snapshot(outcome.final_state, outdir / "final.ks2d")

    final = records[-1] if records else None
    summary = {
        "reason": outcome.reason,
        "blowup_time": outcome.blowup_time,
        "steps_taken": outcome.steps_taken,
        "min_density": outcome.min_density,
        "max_step_mass_drift": outcome.max_step_mass_drift,
        "samples": len(records),
        "final": dict(zip(dg.CSV_COLUMNS, final.as_row())) if final else None,
    }
    _atomic_write_text(outdir / "summary.json", json.dumps(summary, indent=2) + "\n")

    if records:
        _timeseries_figure(records, outdir / "timeseries.png")
    state = outcome.final_state
    profile = KernelProfile(solver_cfg.epsilon)
    table = build_kernel_table(profile, (state.u1.nx, state.u1.ny, state.u1.L))
    cf = chemo_field(table, state.u1, state.u2)
    _density_figure(state.u1, state.u2, cf.v, outdir / "density.png")
    log.info("simulate: %s after %d steps", outcome.reason, outcome.steps_taken)
    return 0


@dataclass(frozen=True)
class _SweepTask:
    theta1: float
    theta2: float
    mu: float
    chi1: float
    chi2: float
    tolerance: float
    probe: bool
    probe_horizon: float
    probe_nx: int
    probe_L: float
    probe_width: float
    epsilon: float


def _sweep_row(task: _SweepTask) -> str:
    try:
        p = Parameters(task.mu, task.chi1, task.chi2)
        m = MassPair(task.theta1, task.theta2)
        label = classify(m, p, tol=task.tolerance)
        pv = parabola_value(m, p)
        rate = moment_rate(m, p)
        probe = ""
        if task.probe:
            probe = _probe_outcome(task, m, p)
        cells = (repr(task.theta1), repr(task.theta2), label.value, repr(pv), repr(rate), probe)
    except Exception as exc:  # per-point failures stay in-row
        cells = (repr(task.theta1), repr(task.theta2), "error", "", "", f"error: {exc}")
    return ",".join(cells)


def _probe_outcome(task: _SweepTask, m: MassPair, p: Parameters) -> str:
    species1 = (GaussianBump(mass=m.theta1, width=task.probe_width),) if m.theta1 > 0 else ()
    species2 = (GaussianBump(mass=m.theta2, width=task.probe_width),) if m.theta2 > 0 else ()
    init = InitialData(task.probe_nx, task.probe_nx, task.probe_L, species1, species2)
    cfg = SolverConfig(horizon=task.probe_horizon, epsilon=task.epsilon)
    outcome = run(init, cfg, p)
    if outcome.reason == TerminationReason.BLOWUP:
        return f"BlowupDetected@{outcome.blowup_time!r}"
    return outcome.reason


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    p = _parameters_from(cfg)
    theta1 = np.linspace(
        _require(cfg, "sweep.theta1_min"),
        _require(cfg, "sweep.theta1_max"),
        _require(cfg, "sweep.theta1_count"),
    )
    theta2 = np.linspace(
        _require(cfg, "sweep.theta2_min"),
        _require(cfg, "sweep.theta2_max"),
        _require(cfg, "sweep.theta2_count"),
    )
    if np.any(theta1 < 0.0) or np.any(theta2 < 0.0):
        raise ConfigError("sweep mass bounds must be nonnegative")
    workers = args.workers if args.workers is not None else cfg.get("sweep.workers", 1)
    if workers < 1:
        raise ConfigError(f"worker count must be positive, got {workers}")

    tasks = [
        _SweepTask(
            theta1=float(t1),
            theta2=float(t2),
            mu=p.mu,
            chi1=p.chi1,
            chi2=p.chi2,
            tolerance=cfg.get("model.tolerance", 0.0),
            probe=cfg.get("sweep.probe", False),
            probe_horizon=cfg.get("sweep.probe_horizon", 0.1),
            probe_nx=cfg.get("sweep.probe_nx", 64),
            probe_L=cfg.get("sweep.probe_L", 4.0),
            probe_width=cfg.get("sweep.probe_width", 0.5),
            epsilon=cfg.get("solver.epsilon", DEFAULT_EPSILON),
        )
        for t1 in theta1
        for t2 in theta2
    ]
    log.info("sweep: %d points, %d workers", len(tasks), workers)

    if workers == 1:
        rows = [_sweep_row(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    content = ",".join(SWEEP_COLUMNS) + "\n" + "".join(row + "\n" for row in rows)
    _atomic_write_text(outdir / "region_map.csv", content)

    parsed = [row.split(",") for row in rows]
    _region_figure([(float(row[0]), float(row[1]), row[2]) for row in parsed], p, outdir / "region_map.png")
    return 0


def read_sweep_csv(path: str | Path) -> list[dict[str, str]]:
    """Parse a sweep CSV back into one dictionary per grid point."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != SWEEP_COLUMNS:
        raise ConfigError(f"{path}: missing or mismatched sweep header")
    out = []
    for line in lines[1:]:
        parts = line.split(",", len(SWEEP_COLUMNS) - 1)
        if len(parts) != len(SWEEP_COLUMNS):
            raise ConfigError(f"{path}: malformed sweep row {line!r}")
        out.append(dict(zip(SWEEP_COLUMNS, parts)))
    return out


def _check_kernel() -> list[dict[str, Any]]:
    results = []
    profile = KernelProfile(DEFAULT_EPSILON)
    eps = profile.epsilon
    nx, L = 256, 8.0
    table = build_kernel_table(profile, (nx, nx, L))
    h = 2.0 * L / nx

    r = np.linspace(4.0 * eps, 2.0 * L, 4001)
    tail_err = float(np.max(np.abs(profile.radial_values(r) + np.log(r) / (2.0 * math.pi))))
    results.append({"name": "exact_log_tail", "ok": tail_err <= 1e-12, "margin": tail_err})

    core = np.linspace(0.0, eps, 1001)
    core_err = float(np.max(np.abs(profile.radial_values(core))))
    results.append({"name": "zero_core", "ok": core_err == 0.0, "margin": core_err})

    blend = np.linspace(eps, 4.0 * eps, 4001)
    quotients = np.diff(profile.radial_values(blend))
    monotone = bool(np.all(quotients <= 0.0) or np.all(quotients >= 0.0))
    results.append(
        {"name": "monotone_blend", "ok": monotone, "margin": float(np.min(np.abs(quotients)))}
    )

    cg = gradient_bound_constant(table)
    results.append({"name": "gradient_bound", "ok": cg <= 1.1, "margin": 1.1 - cg, "C_g": cg})

    sampled = np.linspace(eps, 2.0 * L, 8001)
    excess = float(np.max(profile.radial_values(sampled) + np.log(sampled) / (2.0 * math.pi)))
    results.append({"name": "pointwise_log_bound", "ok": excess <= 1e-12, "margin": -excess})

    lap = (
        np.roll(table.values, 1, axis=0)
        + np.roll(table.values, -1, axis=0)
        + np.roll(table.values, 1, axis=1)
        + np.roll(table.values, -1, axis=1)
        - 4.0 * table.values
    ) / (h * h)
    ox = np.arange(2 * nx)
    ox = np.where(ox <= nx, ox, ox - 2 * nx) * h
    R = np.hypot(ox[:, None], ox[None, :])
    # np.roll wraps across the table edge; exclude the outermost ring along
    # with the near-core region the bound does not cover.
    interior = (R > eps + 2.0 * h) & (np.abs(ox[:, None]) < L - 2 * h) & (np.abs(ox[None, :]) < L - 2 * h)
    defect = profile.superharmonic_defect(h)
    worst = float(np.min(-lap[interior]))
    results.append(
        {"name": "discrete_superharmonicity", "ok": worst >= -defect, "margin": worst + defect}
    )

    anti_x = float(np.max(np.abs(table.grad_x + np.flip(np.roll(table.grad_x, -1, axis=(0, 1)), axis=(0, 1)))))
    results.append({"name": "gradient_antisymmetry", "ok": anti_x == 0.0, "margin": anti_x})

    sigma, mass, vel_nx, vel_L = 9.0, 2.0 * math.pi, 208, 26.0
    vp = build_kernel_table(profile, (vel_nx, vel_nx, vel_L))
    template = Field.zeros(vel_nx, vel_nx, vel_L)
    u1 = Field.like(template, GaussianBump(mass=mass, width=sigma).sample(template))
    cf = chemo_field(vp, u1, Field.zeros(vel_nx, vel_nx, vel_L))
    x, y = u1.cell_centers()
    X, Y = x[:, None], y[None, :]
    R = np.hypot(X, Y)
    radial = (cf.grad_x.values * X + cf.grad_y.values * Y) / np.where(R > 0, R, 1.0)
    exact = -mass * (1.0 - np.exp(-(R**2) / (2.0 * sigma**2))) / (2.0 * math.pi * np.where(R > 0, R, 1.0))
    window = (R > 4.0 * eps) & (R < vel_L / 2.0)
    vel_err = float(np.max(np.abs(radial - exact)[window] / np.abs(exact)[window]))
    results.append({"name": "gaussian_velocity", "ok": vel_err <= 0.01, "margin": 0.01 - vel_err})

    doubled = chemo_field(vp, Field.like(u1, 2.0 * u1.values), Field.zeros(vel_nx, vel_nx, vel_L))
    lin_err = float(np.max(np.abs(doubled.v.values - 2.0 * cf.v.values)))
    results.append({"name": "convolution_linearity", "ok": lin_err <= 1e-10, "margin": lin_err})
    return results


def _check_hls() -> list[dict[str, Any]]:
    results = []
    eight_pi = EIGHT_PI

    single = check_bounded_below(np.array([[1.0]]), np.array([eight_pi]))
    single_min = check_minimizer_exists(np.array([[1.0]]), np.array([eight_pi]))
    results.append({"name": "single_critical_mass", "ok": single and single_min, "margin": 0.0})

    cross = np.array([[0.0, 1.0], [1.0, 0.0]])
    pair = np.array([eight_pi, eight_pi])
    results.append(
        {
            "name": "cross_coupled_pair",
            "ok": check_bounded_below(cross, pair) and check_minimizer_exists(cross, pair),
            "margin": 0.0,
        }
    )

    diag = np.array([[1.0, 0.0], [0.0, 1.0]])
    results.append(
        {
            "name": "decoupled_pair_no_minimizer",
            "ok": check_bounded_below(diag, pair) and not check_minimizer_exists(diag, pair),
            "margin": 0.0,
        }
    )

    rng = np.random.default_rng(1789)
    violations = 0
    for _ in range(2000):
        n = int(rng.integers(1, 5))
        A = rng.uniform(0.0, 3.0, (n, n))
        A = 0.5 * (A + A.T)
        M = rng.uniform(0.1, 30.0, n)
        quad = float(M @ A @ M)
        if quad > 0.0:
            M = M * (eight_pi * float(M.sum()) / quad)
        if check_minimizer_exists(A, M) and not check_bounded_below(A, M):
            violations += 1
    results.append({"name": "minimizer_implies_bounded", "ok": violations == 0, "margin": float(violations)})

    mismatches = 0
    for _ in range(200):
        m = MassPair(float(rng.uniform(0.0, 40.0)), float(rng.uniform(0.0, 40.0)))
        if m.theta1 + m.theta2 == 0.0:
            continue
        p = Parameters(*(float(v) for v in rng.uniform(0.2, 4.0, 3)))
        found = find_admissible_params(m, p)
        label = classify(m, p)
        if (found is not None) != (label == RegionLabel.GLOBAL_EXISTENCE):
            mismatches += 1
        if found is not None and not (found.a > p.chi1 and found.b > p.chi2):
            mismatches += 1
    results.append({"name": "admissible_iff_global", "ok": mismatches == 0, "margin": float(mismatches)})
    return results


def _check_conservation() -> list[dict[str, Any]]:
    p = Parameters(1.0, 1.0, 1.0)
    init = InitialData(
        64,
        64,
        4.0,
        species1=(GaussianBump(mass=2.0 * math.pi, width=0.6),),
        species2=(GaussianBump(mass=math.pi, width=0.8, center=(0.5, -0.3)),),
    )
    cfg = SolverConfig(horizon=0.05, epsilon=0.5)
    outcome = run(init, cfg, p)
    results = [
        {
            "name": "per_step_mass_drift",
            "ok": outcome.max_step_mass_drift <= 1e-13,
            "margin": 1e-13 - outcome.max_step_mass_drift,
            "steps": outcome.steps_taken,
        },
        {
            "name": "positivity",
            "ok": outcome.min_density >= 0.0,
            "margin": outcome.min_density,
        },
        {
            "name": "completed",
            "ok": outcome.reason == TerminationReason.COMPLETED,
            "margin": 0.0,
        },
    ]
    return results


def _jsonable(value: Any) -> Any:
    """Collapse numpy scalars, which the suites leak, to plain Python."""
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def cmd_check(args: argparse.Namespace) -> int:
    suites = {
        "kernel": _check_kernel,
        "hls": _check_hls,
        "conservation": _check_conservation,
    }
    results = [{k: _jsonable(v) for k, v in item.items()} for item in suites[args.kind]()]
    failures = 0
    for item in results:
        line = dict(item)
        line["suite"] = args.kind
        print(json.dumps(line))
        if not item["ok"]:
            failures += 1
    if args.out is not None:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(
            outdir / f"check_{args.kind}.json", json.dumps(results, indent=2) + "\n"
        )
    return 1 if failures else 0


def _setup_logging() -> None:
    level_name = os.environ.get("KS2_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING, "quiet": logging.ERROR}
    logging.basicConfig(
        level=levels.get(level_name, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,  # each invocation rebinds to the current stderr
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ks2d",
        description="Numerical laboratory for a two-species chemotaxis system on the plane.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cls = sub.add_parser("classify", help="classify a mass pair against the threshold geometry")
    cls.add_argument("--config", required=True, help="flat key=value config file")
    cls.add_argument("--out", default=None, help="directory for the JSON report")
    cls.set_defaults(func=cmd_classify)

    sim = sub.add_parser("simulate", help="integrate one configuration and emit artifacts")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default=".", help="artifact directory")
    sim.add_argument("--cadence", type=int, default=None, help="steps between diagnostics records")
    sim.set_defaults(func=cmd_simulate)

    swp = sub.add_parser("sweep", help="map a mass-plane grid, optionally probing each point")
    swp.add_argument("--config", required=True)
    swp.add_argument("--out", default=".")
    swp.add_argument("--workers", type=int, default=None, help="process pool width")
    swp.set_defaults(func=cmd_sweep)

    chk = sub.add_parser("check", help="run a built-in property suite")
    chk.add_argument("kind", choices=("kernel", "hls", "conservation"))
    chk.add_argument("--out", default=None)
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
