"""Time integration of the regularized two-species aggregation system.

Explicit conservative finite-volume scheme on the truncated square domain:
five-point fluxes for diffusion, first-order upwinding on face velocities
interpolated from the kernel-convolved gradient, and no-flux outer walls.
Under the CFL rule implemented by :func:`stable_dt` the update is positivity
preserving and conserves each species' discrete mass to round-off, which the
blow-up detectors and the diagnostics suite rely on.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .kernel import ChemoField, Field, GeometryError, KernelProfile, KernelTable, build_kernel_table, chemo_field
from .model import Parameters

SNAPSHOT_MAGIC = b"KS2D"
SNAPSHOT_VERSION = 1

#: Truncation radius used when a configuration does not pin one explicitly.
DEFAULT_EPSILON = 0.5


class BlowupDetected(RuntimeError):
    """Numerical blow-up: density reached the cap or the stable step collapsed.

    Attributes carry the detection time, the step count, the offending
    density maximum and which detector fired.
    """

    def __init__(self, t: float, step_count: int, max_density: float, trigger: str) -> None:
        super().__init__(
            f"blow-up detected at t={t:.6g} (step {step_count}): "
            f"max density {max_density:.6g}, trigger: {trigger}"
        )
        self.t = t
        self.step_count = step_count
        self.max_density = max_density
        self.trigger = trigger


class BoundaryLeak(RuntimeError):
    """Too much mass reached the outer frame for the truncation to be valid."""

    def __init__(self, t: float, step_count: int, fraction: float) -> None:
        super().__init__(
            f"boundary frame holds {fraction:.3%} of the mass at t={t:.6g} "
            f"(step {step_count}); the domain is too small for this run"
        )
        self.t = t
        self.step_count = step_count
        self.fraction = fraction


@dataclass(frozen=True)
class State:
    """Solution snapshot: both densities, current time, and step counter."""

    u1: Field
    u2: Field
    t: float
    step_count: int = 0

    def __post_init__(self) -> None:
        if not self.u1.same_geometry(self.u2):
            raise GeometryError("species densities must share one grid")
        if self.t < 0.0 or not math.isfinite(self.t):
            raise ValueError(f"time must be finite and nonnegative, got {self.t!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Step-size safety factors, detection thresholds, and the time horizon.

    ``blowup_density_cap=None`` selects the grid-aware default 1e6/(hx*hy)
    so refinement studies keep a comparable trigger.
    """

    horizon: float
    epsilon: float = DEFAULT_EPSILON
    cfl_diffusion: float = 0.4
    cfl_advection: float = 0.12
    dt_floor: float = 1e-12
    blowup_density_cap: float | None = None

    def __post_init__(self) -> None:
        if not (self.horizon >= 0.0) or not math.isfinite(self.horizon):
            raise ValueError(f"horizon must be finite and nonnegative, got {self.horizon!r}")
        if not (self.epsilon > 0.0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        for name in ("cfl_diffusion", "cfl_advection"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
        if not (self.dt_floor > 0.0):
            raise ValueError(f"dt_floor must be positive, got {self.dt_floor!r}")
        if self.blowup_density_cap is not None and not (self.blowup_density_cap > 0.0):
            raise ValueError(f"blowup_density_cap must be positive, got {self.blowup_density_cap!r}")

    def density_cap(self, cell_area: float) -> float:
        if self.blowup_density_cap is not None:
            return self.blowup_density_cap
        return 1.0e6 / cell_area


@dataclass(frozen=True)
class GaussianBump:
    """One Gaussian component: total mass, center, and width (std dev)."""

    mass: float
    center: tuple[float, float] = (0.0, 0.0)
    width: float = 1.0

    def __post_init__(self) -> None:
        if not (self.mass >= 0.0) or not math.isfinite(self.mass):
            raise ValueError(f"mass must be finite and nonnegative, got {self.mass!r}")
        if not (self.width > 0.0) or not math.isfinite(self.width):
            raise ValueError(f"width must be finite and positive, got {self.width!r}")

    def sample(self, f: Field) -> np.ndarray:
        x, y = f.cell_centers()
        cx, cy = self.center
        amp = self.mass / (2.0 * math.pi * self.width**2)
        rsq = (x[:, None] - cx) ** 2 + (y[None, :] - cy) ** 2
        return amp * np.exp(-rsq / (2.0 * self.width**2))


@dataclass(frozen=True)
class InitialData:
    """Gaussian-mixture initial densities, or a snapshot to resume from.

    When ``snapshot`` is set the analytic descriptors are ignored and the
    state is loaded from disk.  Realized data is checked for the standing
    assumptions of the analysis: finite mass, finite second moment, and
    finite entropy on the grid.
    """

    nx: int
    ny: int
    L: float
    species1: tuple[GaussianBump, ...] = ()
    species2: tuple[GaussianBump, ...] = ()
    snapshot: Path | None = None

    def realize(self) -> State:
        if self.snapshot is not None:
            state = load_snapshot(self.snapshot)
        else:
            template = Field.zeros(self.nx, self.ny, self.L)
            u1 = np.zeros((self.nx, self.ny))
            u2 = np.zeros((self.nx, self.ny))
            for bump in self.species1:
                u1 += bump.sample(template)
            for bump in self.species2:
                u2 += bump.sample(template)
            state = State(Field.like(template, u1), Field.like(template, u2), t=0.0)
        _check_standing_assumptions(state)
        return state


def _check_standing_assumptions(state: State) -> None:
    rsq = state.u1.radius_squared()
    area = state.u1.cell_area
    for name, u in (("u1", state.u1), ("u2", state.u2)):
        values = u.values
        if not np.all(np.isfinite(values)):
            raise ValueError(f"initial {name} contains non-finite values")
        if np.any(values < 0.0):
            raise ValueError(f"initial {name} contains negative densities")
        moment = float(np.sum(values * (1.0 + rsq))) * area
        positive = values[values > 0.0]
        ent = float(np.sum(np.abs(positive * np.log(positive)))) * area if positive.size else 0.0
        if not (math.isfinite(moment) and math.isfinite(ent)):
            raise ValueError(f"initial {name} violates the finite moment/entropy assumptions")


def stable_dt(state: State, gradv: tuple[Field, Field], cfg: SolverConfig, p: Parameters) -> float:
    """Largest explicit step honoring both CFL budgets.

    dt = min(cfl_diffusion * h^2 / (4 max(mu, 1)),
             cfl_advection * h / max |chi_i grad v|)
    with h the smaller cell dimension.  The advection bound is inactive for
    a quiescent field.  Flooring is the caller's responsibility: the value
    is returned as-is so the step routine can signal collapse.
    """
    h = min(state.u1.hx, state.u1.hy)
    dt = cfg.cfl_diffusion * h * h / (4.0 * max(p.mu, 1.0))
    gx, gy = gradv
    speed = max(float(np.max(np.abs(gx.values))), float(np.max(np.abs(gy.values))))
    speed *= max(p.chi1, p.chi2)
    if speed > 0.0:
        dt = min(dt, cfg.cfl_advection * h / speed)
    return dt


def _advance_species(
    u: np.ndarray,
    diffusivity: float,
    chi: float,
    gx: np.ndarray,
    gy: np.ndarray,
    hx: float,
    hy: float,
    dt: float,
) -> np.ndarray:
    """One explicit conservative step for a single species.

    Interior-face fluxes only (no-flux walls).  Advective face velocities
    are arithmetic means of the adjacent cell-centered gradient samples;
    upwinding takes the donor cell, which keeps the update positivity
    preserving under the CFL budget.
    """
    new = u.copy()

    # x-direction faces between rows i and i+1.
    w = 0.5 * chi * (gx[:-1, :] + gx[1:, :])
    flux = np.where(w > 0.0, w * u[:-1, :], w * u[1:, :])
    flux -= diffusivity * (u[1:, :] - u[:-1, :]) / hx
    scaled = flux * (dt / hx)
    new[:-1, :] -= scaled
    new[1:, :] += scaled

    # y-direction faces between columns j and j+1.
    w = 0.5 * chi * (gy[:, :-1] + gy[:, 1:])
    flux = np.where(w > 0.0, w * u[:, :-1], w * u[:, 1:])
    flux -= diffusivity * (u[:, 1:] - u[:, :-1]) / hy
    scaled = flux * (dt / hy)
    new[:, :-1] -= scaled
    new[:, 1:] += scaled

    return new


def boundary_mass_fraction(state: State, frame: int = 4) -> float:
    """Fraction of the total mass within ``frame`` cells of the outer walls."""
    rho = state.u1.values + state.u2.values
    total = float(np.sum(rho))
    if total <= 0.0:
        return 0.0
    interior = float(np.sum(rho[frame:-frame, frame:-frame])) if min(rho.shape) > 2 * frame else 0.0
    return (total - interior) / total


def _advance(
    state: State,
    cf: ChemoField,
    cfg: SolverConfig,
    p: Parameters,
    max_dt: float | None,
) -> State:
    dt = stable_dt(state, (cf.grad_x, cf.grad_y), cfg, p)
    if dt < cfg.dt_floor:
        u_max = max(float(np.max(state.u1.values)), float(np.max(state.u2.values)))
        raise BlowupDetected(state.t, state.step_count, u_max, "stable step collapsed below dt_floor")
    if max_dt is not None:
        dt = min(dt, max_dt)

    hx, hy = state.u1.hx, state.u1.hy
    u1 = _advance_species(state.u1.values, p.mu, p.chi1, cf.grad_x.values, cf.grad_y.values, hx, hy, dt)
    u2 = _advance_species(state.u2.values, 1.0, p.chi2, cf.grad_x.values, cf.grad_y.values, hx, hy, dt)
    new = State(
        Field.like(state.u1, u1),
        Field.like(state.u2, u2),
        t=state.t + dt,
        step_count=state.step_count + 1,
    )

    u_max = max(float(np.max(u1)), float(np.max(u2)))
    if u_max >= cfg.density_cap(state.u1.cell_area):
        raise BlowupDetected(new.t, new.step_count, u_max, "density reached the blow-up cap")
    leak = boundary_mass_fraction(new)
    if leak > 0.01:
        raise BoundaryLeak(new.t, new.step_count, leak)
    return new


def step(
    state: State,
    cfg: SolverConfig,
    table: KernelTable,
    p: Parameters,
    max_dt: float | None = None,
) -> State:
    """Advance one explicit step, choosing dt by the stability rule.

    Raises :class:`BlowupDetected` or :class:`BoundaryLeak` when a detector
    fires; the raised object carries the structured detection data.
    """
    cf = chemo_field(table, state.u1, state.u2)
    return _advance(state, cf, cfg, p, max_dt)


class TerminationReason:
    """Why a run stopped (plain strings so outcomes serialize trivially)."""

    COMPLETED = "Completed"
    BLOWUP = "BlowupDetected"
    BOUNDARY_LEAK = "BoundaryLeak"


@dataclass(frozen=True)
class RunOutcome:
    """Final state plus run-level health data gathered while stepping."""

    final_state: State
    reason: str
    blowup_time: float | None
    steps_taken: int
    min_density: float
    max_step_mass_drift: float


# A sink receives (state, chemo field, upcoming dt) at every cadence hit and
# at termination; diagnostics builds records from exactly this triple.
Sink = Callable[[State, ChemoField, float], None]


def run(
    init: InitialData | State,
    cfg: SolverConfig,
    p: Parameters,
    sink: Sink | None = None,
    cadence: int = 1,
) -> RunOutcome:
    """Integrate to the horizon or until a detector fires.

    Detector signals become structured outcomes, not exceptions.  The sink
    is invoked on the initial state, every ``cadence``-th step thereafter,
    and on the final state.
    """
    if cadence < 1:
        raise ValueError(f"cadence must be a positive integer, got {cadence!r}")
    state = init.realize() if isinstance(init, InitialData) else init
    table = build_kernel_table(KernelProfile(cfg.epsilon), (state.u1.nx, state.u1.ny, state.u1.L))

    mass1 = float(np.sum(state.u1.values))
    mass2 = float(np.sum(state.u2.values))
    min_density = min(float(np.min(state.u1.values)), float(np.min(state.u2.values)))
    max_drift = 0.0
    reason = TerminationReason.COMPLETED
    blowup_time: float | None = None
    start_step = state.step_count
    emitted_step = -1

    def notify(current: State, cf: ChemoField, dt: float) -> None:
        nonlocal emitted_step
        if sink is not None and current.step_count != emitted_step:
            sink(current, cf, dt)
            emitted_step = current.step_count

    while True:
        cf = chemo_field(table, state.u1, state.u2)
        remaining = cfg.horizon - state.t
        dt = min(stable_dt(state, (cf.grad_x, cf.grad_y), cfg, p), max(remaining, 0.0))
        if (state.step_count - start_step) % cadence == 0:
            notify(state, cf, dt)
        if remaining <= cfg.horizon * 1e-15 or remaining <= 0.0:
            notify(state, cf, 0.0)
            break
        try:
            new = _advance(state, cf, cfg, p, max_dt=remaining)
        except BlowupDetected as exc:
            reason = TerminationReason.BLOWUP
            blowup_time = exc.t
            break
        except BoundaryLeak:
            # The leaking state was discarded by the raising step; the last
            # valid state becomes the outcome.
            reason = TerminationReason.BOUNDARY_LEAK
            blowup_time = None
            break
        new_mass1 = float(np.sum(new.u1.values))
        new_mass2 = float(np.sum(new.u2.values))
        drift1 = abs(new_mass1 - mass1) / mass1 if mass1 > 0.0 else abs(new_mass1 - mass1)
        drift2 = abs(new_mass2 - mass2) / mass2 if mass2 > 0.0 else abs(new_mass2 - mass2)
        max_drift = max(max_drift, drift1, drift2)
        mass1, mass2 = new_mass1, new_mass2
        min_density = min(
            min_density,
            float(np.min(new.u1.values)),
            float(np.min(new.u2.values)),
        )
        state = new

    if reason != TerminationReason.COMPLETED and sink is not None:
        cf = chemo_field(table, state.u1, state.u2)
        notify(state, cf, 0.0)

    return RunOutcome(
        final_state=state,
        reason=reason,
        blowup_time=blowup_time,
        steps_taken=state.step_count - start_step,
        min_density=min_density,
        max_step_mass_drift=max_drift,
    )


def save_snapshot(state: State, path: str | Path) -> None:
    """Write the binary snapshot format atomically (temp file + rename)."""
    path = Path(path)
    u1, u2 = state.u1, state.u2
    header = SNAPSHOT_MAGIC + struct.pack("<I", SNAPSHOT_VERSION)
    header += struct.pack("<QQ", u1.nx, u1.ny)
    header += struct.pack("<dd", u1.L, state.t)
    payload = u1.values.astype("<f8").tobytes(order="C") + u2.values.astype("<f8").tobytes(order="C")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SnapshotFormatError(ValueError):
    """Raised when a snapshot file is truncated or not in the expected format."""


def load_snapshot(path: str | Path) -> State:
    """Read a snapshot written by :func:`save_snapshot`; step counter starts at 0."""
    raw = Path(path).read_bytes()
    head_len = 4 + 4 + 8 + 8 + 8 + 8
    if len(raw) < head_len or raw[:4] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: not a KS2D snapshot")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"{path}: unsupported snapshot version {version}")
    nx, ny = struct.unpack_from("<QQ", raw, 8)
    L, t = struct.unpack_from("<dd", raw, 24)
    count = nx * ny
    expected = head_len + 2 * count * 8
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: payload size {len(raw)} does not match header ({expected} expected)"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=head_len)
    u1 = data[:count].reshape(nx, ny).astype(float)
    u2 = data[count:].reshape(nx, ny).astype(float)
    return State(Field(int(nx), int(ny), float(L), u1), Field(int(nx), int(ny), float(L), u2), t=float(t))
