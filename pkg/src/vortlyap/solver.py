"""Integrating-factor RK4 time stepping for the 3-D vorticity equation.

The viscous term is integrated exactly through ``exp(-nu |k|^2 t)``; the
nonlinear term is evaluated in conservative form, dealiased, and the stage
values are re-projected onto divergence-free fields.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .spectral import SpectralField, dft_inverse, project_divfree
from .vorticity import biot_savart, nonlinear_term

__all__ = [
    "SolverConfig",
    "SolverState",
    "Snapshot",
    "Trajectory",
    "NumericalAbort",
    "initial_state",
    "step",
    "run",
    "taylor_green_vorticity",
]

log = logging.getLogger(__name__)

DT_FLOOR = 1e-12
CFL_REFRESH = 10


class NumericalAbort(RuntimeError):
    """Raised when a step produces non-finite values or the step size collapses."""

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class SolverConfig:
    nu: float
    t_end: float
    dt: float | None = None  # None means CFL-controlled
    cfl: float = 0.4
    record_every: int = 1

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive or auto, got {self.dt}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True, eq=False)
class SolverState:
    t: float
    omega_hat: SpectralField
    step_index: int
    config: SolverConfig
    dt: float | None = None  # current CFL step, refreshed every CFL_REFRESH steps


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    step_index: int
    omega_hat: SpectralField


@dataclass(eq=False)
class Trajectory:
    config: SolverConfig
    snapshots: list[Snapshot] = field(default_factory=list)
    aborted: str = ""
    abort_diagnostic: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _rhs(wh: np.ndarray, grid) -> np.ndarray:
    w = SpectralField(grid, wh)
    u = biot_savart(w, check=False)
    f = nonlinear_term(u, w, form="conservative", check=False)
    return -project_divfree(f).data


def _cfl_dt(state: SolverState) -> float:
    cfg = state.config
    grid = state.omega_hat.grid
    u = dft_inverse(biot_savart(state.omega_hat, check=False))
    umax = float(np.max(u.magnitude()))
    remaining = max(cfg.t_end - state.t, 0.0)
    if umax == 0.0:
        return remaining if remaining > 0 else 1.0
    return cfg.cfl * grid.dx / umax


def initial_state(omega0: SpectralField, config: SolverConfig) -> SolverState:
    return SolverState(t=0.0, omega_hat=omega0, step_index=0, config=config)


def step(state: SolverState, dt: float | None = None) -> SolverState:
    """Advance one integrating-factor RK4 step.

    ``dt`` defaults to the configured step, or to the CFL step
    ``cfl * dx / max|u|`` (refreshed every ten steps) when the config is auto.
    """
    cfg = state.config
    grid = state.omega_hat.grid
    cfl_dt = state.dt
    if dt is None:
        if cfg.dt is not None:
            dt = cfg.dt
        else:
            if cfl_dt is None or state.step_index % CFL_REFRESH == 0:
                cfl_dt = _cfl_dt(state)
            dt = cfl_dt
    if not dt >= DT_FLOOR:
        raise NumericalAbort(f"time step {dt:.3e} below floor", {"t": state.t, "step": state.step_index})
    lin = -cfg.nu * grid.k2
    e_half = np.exp(lin * dt / 2)
    e_full = e_half * e_half
    w = state.omega_hat.data
    # overflow inside a blowing-up step is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        a = dt * _rhs(w, grid)
        b = dt * _rhs(e_half * (w + a / 2), grid)
        c = dt * _rhs(e_half * w + b / 2, grid)
        d = dt * _rhs(e_full * w + e_half * c, grid)
        new = e_full * w + (e_full * a + 2 * e_half * (b + c) + d) / 6
    if not np.all(np.isfinite(new)):
        raise NumericalAbort(
            "non-finite vorticity after step",
            {"t": state.t, "step": state.step_index, "dt": dt},
        )
    wh = project_divfree(SpectralField(grid, new))
    mean = wh.data.copy()
    mean[(slice(None),) + (0,) * grid.dim] = 0.0
    return SolverState(
        t=state.t + dt,
        omega_hat=SpectralField(grid, mean),
        step_index=state.step_index + 1,
        config=cfg,
        dt=cfl_dt,
    )


def run(
    omega0: SpectralField,
    config: SolverConfig,
    callbacks: Iterable[Callable[[Snapshot], None]] = (),
) -> Trajectory:
    """Integrate to ``config.t_end``, recording every ``record_every`` steps.

    The initial and final states are always recorded. A numerical abort stops
    the run; the trajectory keeps every record made so far and carries the
    diagnostic in ``aborted``/``abort_diagnostic``.
    """
    callbacks = list(callbacks)
    traj = Trajectory(config=config)

    def record(st: SolverState) -> None:
        snap = Snapshot(t=st.t, step_index=st.step_index, omega_hat=st.omega_hat)
        traj.snapshots.append(snap)
        for cb in callbacks:
            cb(snap)

    state = initial_state(omega0, config)
    record(state)
    tol = 1e-12 * max(config.t_end, 1.0)
    while state.t < config.t_end - tol:
        remaining = config.t_end - state.t
        try:
            if config.dt is not None:
                h = min(config.dt, remaining)
                state = step(state, dt=h)
            else:
                if state.dt is None or state.step_index % CFL_REFRESH == 0:
                    state = replace(state, dt=_cfl_dt(state))
                state = step(state, dt=min(state.dt, remaining))
        except NumericalAbort as exc:
            log.error("run aborted at t=%g: %s", state.t, exc)
            traj.aborted = str(exc)
            traj.abort_diagnostic = exc.diagnostic
            return traj
        if state.step_index % config.record_every == 0 or state.t >= config.t_end - tol:
            record(state)
    return traj


def taylor_green_vorticity(grid, amplitude: float = 1.0) -> SpectralField:
    """Vorticity of ``u = A (sin x cos y cos z, -cos x sin y cos z, 0)``."""
    from .spectral import PhysicalField, curl, dft_forward

    x, y, z = grid.coords
    u = amplitude * np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)])
    return curl(dft_forward(PhysicalField(grid, u)))
