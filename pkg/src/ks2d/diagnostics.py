"""Integral diagnostics and bound monitors for the two-species system.

Everything the analysis tracks is computed here as a plain reduction over a
frozen state: masses, both second-moment weightings, entropies, the mixed
entropy, the free energy with its kernel-regularized interaction term, and
the dissipation.  Records serialize to CSV/JSONL with a fixed column order
so artifacts are byte-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .hls import AuxiliaryParams, entropy_coefficients
from .kernel import ChemoField, Field
from .model import MassPair, Parameters, moment_rate
from .solver import State, boundary_mass_fraction

#: Below this density a cell contributes zero entropy (0 log 0 convention).
ENTROPY_FLOOR = 1e-300

#: Cells below this fraction of the species maximum are excluded from the
#: log-gradient dissipation integrand, which is singular in vacuum.
DISSIPATION_RELATIVE_FLOOR = 1e-14

CSV_COLUMNS = (
    "t",
    "mass1",
    "mass2",
    "weighted_moment",
    "total_moment",
    "entropy1",
    "entropy2",
    "mixed_entropy",
    "free_energy",
    "dissipation",
    "max_u1",
    "max_u2",
    "boundary_mass_fraction",
    "dt",
)


class DiagnosticsError(ValueError):
    """Raised on non-finite records or malformed diagnostic inputs."""


def total_mass(u: Field) -> float:
    """Discrete mass: sum of cell values times cell area, fixed order."""
    return float(np.sum(u.values)) * u.cell_area


def entropy(u: Field) -> float:
    """Discrete entropy integral of u log u with 0 log 0 = 0."""
    return _entropy_integral(u.values) * u.cell_area


def _entropy_integral(values: np.ndarray) -> float:
    mask = values > ENTROPY_FLOOR
    safe = np.where(mask, values, 1.0)
    return float(np.sum(np.where(mask, safe * np.log(safe), 0.0)))


def weighted_moment(state: State, p: Parameters) -> float:
    """Second moment of (mu/chi1) u1 + (1/chi2) u2 — the weighting whose
    time derivative is the exact constant rate."""
    rsq = state.u1.radius_squared()
    n = (p.mu / p.chi1) * state.u1.values + (1.0 / p.chi2) * state.u2.values
    return float(np.sum(n * rsq)) * state.u1.cell_area


def total_moment(state: State, p: Parameters) -> float:
    """Second moment in the pi/chi_i weighting (no rate claim attached)."""
    rsq = state.u1.radius_squared()
    area = state.u1.cell_area
    m1 = float(np.sum(state.u1.values * rsq)) * area
    m2 = float(np.sum(state.u2.values * rsq)) * area
    return math.pi * (m1 / p.chi1 + m2 / p.chi2)


def mixed_entropy(state: State, p: Parameters) -> float:
    """Entropy of the combined density u1/chi1 + u2/chi2."""
    w = state.u1.values / p.chi1 + state.u2.values / p.chi2
    return _entropy_integral(w) * state.u1.cell_area


def free_energy(state: State, v: Field, p: Parameters) -> float:
    """Lyapunov functional: weighted entropies minus half the interaction.

    ``v`` must be the chemoattractant computed from this same state; the
    interaction term then uses the regularized kernel, making this the
    quantity that is exactly non-increasing for the discretized system's
    continuum limit.
    """
    interaction = float(np.sum((state.u1.values + state.u2.values) * v.values)) * v.cell_area
    return (
        (p.mu / p.chi1) * entropy(state.u1)
        + (1.0 / p.chi2) * entropy(state.u2)
        - 0.5 * interaction
    )


@dataclass(frozen=True)
class DissipationDetail:
    value: float
    excluded_mass_fraction: float


def dissipation_detail(state: State, v: Field, p: Parameters) -> DissipationDetail:
    """Entropy-production integral and the mass fraction it had to skip.

    Uses the log-gradient form with centered differences on interior cells;
    a cell enters the sum only when it and its four neighbors sit above the
    relative positivity floor, since log gradients are meaningless in
    vacuum.  The skipped mass fraction quantifies how much of the density
    was excluded that way.
    """
    hx, hy = state.u1.hx, state.u1.hy
    vx = (v.values[2:, 1:-1] - v.values[:-2, 1:-1]) / (2.0 * hx)
    vy = (v.values[1:-1, 2:] - v.values[1:-1, :-2]) / (2.0 * hy)

    total = 0.0
    included = 0.0
    grand_total = 0.0
    for u, diffusivity, chi in (
        (state.u1.values, p.mu, p.chi1),
        (state.u2.values, 1.0, p.chi2),
    ):
        grand_total += float(np.sum(u))
        floor = DISSIPATION_RELATIVE_FLOOR * float(np.max(u))
        if floor <= 0.0:
            continue
        above = u > floor
        mask = (
            above[1:-1, 1:-1]
            & above[2:, 1:-1]
            & above[:-2, 1:-1]
            & above[1:-1, 2:]
            & above[1:-1, :-2]
        )
        logu = np.log(np.where(above, u, 1.0))
        dlx = (logu[2:, 1:-1] - logu[:-2, 1:-1]) / (2.0 * hx)
        dly = (logu[1:-1, 2:] - logu[1:-1, :-2]) / (2.0 * hy)
        core = u[1:-1, 1:-1]
        sq = (diffusivity * dlx - chi * vx) ** 2 + (diffusivity * dly - chi * vy) ** 2
        total += float(np.sum(np.where(mask, core * sq, 0.0))) / chi
        included += float(np.sum(np.where(mask, core, 0.0)))

    excluded = 0.0 if grand_total <= 0.0 else 1.0 - included / grand_total
    return DissipationDetail(total * state.u1.cell_area, excluded)


def dissipation(state: State, v: Field, p: Parameters) -> float:
    """Nonnegative entropy production rate (see :func:`dissipation_detail`)."""
    return dissipation_detail(state, v, p).value


def entropy_lower_bound(t: float, p: Parameters, m: MassPair) -> float:
    """Heat-comparison lower bound M log M − M log(pi (1+t)), up to an
    uncomputable additive constant; only its trend is meaningful."""
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t!r}")
    scale = (p.mu / p.chi1) * m.theta1 + (1.0 / p.chi2) * m.theta2
    if scale == 0.0:
        return 0.0
    return scale * math.log(scale) - scale * math.log(math.pi * (1.0 + t))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sampling instant of every tracked integral quantity."""

    t: float
    mass1: float
    mass2: float
    weighted_moment: float
    total_moment: float
    entropy1: float
    entropy2: float
    mixed_entropy: float
    free_energy: float
    dissipation: float
    max_u1: float
    max_u2: float
    boundary_mass_fraction: float
    dt: float

    def as_row(self) -> tuple[float, ...]:
        data = asdict(self)
        return tuple(data[name] for name in CSV_COLUMNS)


def make_record(state: State, cf: ChemoField, p: Parameters, dt: float) -> DiagnosticsRecord:
    """Assemble the full record from a state and its chemoattractant field."""
    return DiagnosticsRecord(
        t=state.t,
        mass1=total_mass(state.u1),
        mass2=total_mass(state.u2),
        weighted_moment=weighted_moment(state, p),
        total_moment=total_moment(state, p),
        entropy1=entropy(state.u1),
        entropy2=entropy(state.u2),
        mixed_entropy=mixed_entropy(state, p),
        free_energy=free_energy(state, cf.v, p),
        dissipation=dissipation(state, cf.v, p),
        max_u1=float(np.max(state.u1.values)),
        max_u2=float(np.max(state.u2.values)),
        boundary_mass_fraction=boundary_mass_fraction(state),
        dt=dt,
    )


class CsvSink:
    """Appends records as CSV rows; writes the header before the first row."""

    def __init__(self, target: str | Path | IO[str]) -> None:
        if isinstance(target, (str, Path)):
            self._stream: IO[str] = open(target, "w", encoding="utf-8", newline="")
            self._owns = True
        else:
            self._stream = target
            self._owns = False
        self._wrote_header = False

    def write(self, record: DiagnosticsRecord) -> None:
        if not self._wrote_header:
            self._stream.write(",".join(CSV_COLUMNS) + "\n")
            self._wrote_header = True
        self._stream.write(",".join(repr(value) for value in record.as_row()) + "\n")

    def close(self) -> None:
        if self._owns:
            self._stream.close()

    def __enter__(self) -> CsvSink:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


class JsonlSink:
    """Appends records as one JSON object per line, keys in column order."""

    def __init__(self, target: str | Path | IO[str]) -> None:
        if isinstance(target, (str, Path)):
            self._stream: IO[str] = open(target, "w", encoding="utf-8")
            self._owns = True
        else:
            self._stream = target
            self._owns = False

    def write(self, record: DiagnosticsRecord) -> None:
        row = record.as_row()
        self._stream.write(json.dumps(dict(zip(CSV_COLUMNS, row))) + "\n")

    def close(self) -> None:
        if self._owns:
            self._stream.close()

    def __enter__(self) -> JsonlSink:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def emit(record: DiagnosticsRecord, sink: CsvSink | JsonlSink) -> None:
    """Validate finiteness and append the record to the sink."""
    for name in CSV_COLUMNS:
        value = getattr(record, name)
        if not math.isfinite(value):
            raise DiagnosticsError(f"record field {name!r} is not finite: {value!r}")
    sink.write(record)


def read_csv(path: str | Path) -> list[DiagnosticsRecord]:
    """Parse a CSV written by :class:`CsvSink` back into records."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise DiagnosticsError(f"{path}: missing or mismatched diagnostics header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise DiagnosticsError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
        records.append(DiagnosticsRecord(**{k: float(v) for k, v in zip(CSV_COLUMNS, parts)}))
    return records


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking the analytic bounds along one trajectory.

    Monitors are trend checks: every bound carries an uncomputable additive
    constant, so flags fire on shape violations (margins), never on absolute
    levels.  ``margins`` holds the raw numbers behind each flag.
    """

    mass_scale: float
    te_coefficients: tuple[float, float] | None
    moment_intercept: float
    moment_rate: float
    fitted_moment_slope: float
    flags: dict[str, bool]
    margins: dict[str, float]

    def entropy_lower(self, t: float) -> float:
        if self.mass_scale == 0.0:
            return 0.0
        return self.mass_scale * (math.log(self.mass_scale) - math.log(math.pi * (1.0 + t)))

    def moment_prediction(self, t: float) -> float:
        return self.moment_intercept + self.moment_rate * t

    @property
    def ok(self) -> bool:
        return all(self.flags.values())


def evaluate_bounds(
    records: Sequence[DiagnosticsRecord],
    p: Parameters,
    m: MassPair,
    aux: AuxiliaryParams | None = None,
    slope_tolerance: float = 0.03,
) -> BoundReport:
    """Check mass constancy, moment linearity, energy monotonicity, and the
    entropy trend against a sampled trajectory."""
    if not records:
        raise DiagnosticsError("cannot evaluate bounds on an empty trajectory")

    t = np.array([r.t for r in records])
    rate = moment_rate(m, p)
    scale = (p.mu / p.chi1) * m.theta1 + (1.0 / p.chi2) * m.theta2
    flags: dict[str, bool] = {}
    margins: dict[str, float] = {}

    for name, reference in (("mass1", m.theta1), ("mass2", m.theta2)):
        series = np.array([getattr(r, name) for r in records])
        denom = abs(reference) if reference != 0.0 else 1.0
        margins[name + "_drift"] = float(np.max(np.abs(series - series[0]))) / denom
        flags[name + "_constant"] = margins[name + "_drift"] <= 1e-8

    wm = np.array([r.weighted_moment for r in records])
    if len(records) >= 2 and t[-1] > t[0]:
        slope = float(np.polyfit(t, wm, 1)[0])
    else:
        slope = rate
    denom = abs(rate) if rate != 0.0 else 1.0
    margins["moment_slope_error"] = abs(slope - rate) / denom
    flags["moment_linear"] = margins["moment_slope_error"] <= slope_tolerance

    energy = np.array([r.free_energy for r in records])
    if len(records) >= 2:
        rises = np.diff(energy) - 1e-6 * (1.0 + np.abs(energy[:-1]))
        margins["energy_rise"] = float(np.max(rises))
    else:
        margins["energy_rise"] = -math.inf
    flags["energy_monotone"] = margins["energy_rise"] <= 0.0

    for name in ("entropy1", "entropy2"):
        series = np.array([getattr(r, name) for r in records])
        gap = series - np.array([entropy_lower_bound(tk, p, m) for tk in t])
        allowance = 1e-3 * abs(gap[0])
        margins[name + "_trend"] = float(np.min(gap) - (gap[0] - allowance))
        flags[name + "_above_lower_bound"] = margins[name + "_trend"] >= 0.0

    return BoundReport(
        mass_scale=scale,
        te_coefficients=entropy_coefficients(aux, p) if aux is not None else None,
        moment_intercept=float(wm[0]),
        moment_rate=rate,
        fitted_moment_slope=slope,
        flags=flags,
        margins=margins,
    )
