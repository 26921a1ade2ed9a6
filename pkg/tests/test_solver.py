import math

import numpy as np
import pytest

from vortlyap.functionals import q_p
from vortlyap.spectral import SpectralField, dft_inverse, divergence, make_grid, shell_field
from vortlyap.solver import (
    NumericalAbort,
    SolverConfig,
    SolverState,
    run,
    step,
    taylor_green_vorticity,
)
from vortlyap.vorticity import biot_savart, stretching_part

from _util import random_vort

NU = 0.1


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"nu": 0.0, "t_end": 1.0},
            {"nu": 0.1, "t_end": -1.0},
            {"nu": 0.1, "t_end": 1.0, "cfl": 0.0},
            {"nu": 0.1, "t_end": 1.0, "cfl": 1.5},
            {"nu": 0.1, "t_end": 1.0, "dt": -0.1},
            {"nu": 0.1, "t_end": 1.0, "record_every": 0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


def test_zero_stays_zero(grid16):
    traj = run(SpectralField.zeros(grid16), SolverConfig(nu=NU, t_end=0.1, dt=0.05))
    assert all(s.omega_hat.l2_norm() == 0 for s in traj.snapshots)


def test_t_end_zero_records_initial_only(grid16):
    traj = run(random_vort(grid16, 1, peak=1), SolverConfig(nu=NU, t_end=0.0, dt=0.1))
    assert len(traj) == 1 and traj.snapshots[0].t == 0


def test_records_and_last_step_clipped(grid16):
    traj = run(random_vort(grid16, 1, peak=1), SolverConfig(nu=NU, t_end=0.25, dt=0.1, record_every=2))
    assert [s.step_index for s in traj.snapshots] == [0, 2, 3]
    assert traj.snapshots[-1].t == pytest.approx(0.25, abs=1e-15)
    assert np.all(np.diff(traj.times) > 0)


def test_callbacks_see_every_record(grid16):
    seen = []
    traj = run(random_vort(grid16, 1, peak=1), SolverConfig(nu=NU, t_end=0.2, dt=0.05), callbacks=[seen.append])
    assert [s.t for s in seen] == list(traj.times)


def test_deterministic(grid16):
    cfg = SolverConfig(nu=NU, t_end=0.2, dt=0.05)
    a = run(random_vort(grid16, 3, peak=1), cfg)
    b = run(random_vort(grid16, 3, peak=1), cfg)
    assert all(np.array_equal(x.omega_hat.data, y.omega_hat.data) for x, y in zip(a.snapshots, b.snapshots))


def test_linear_decay_single_shell(grid):
    k0 = 2.0
    w0 = shell_field(grid, k0, seed=1, amplitude=1e-6)
    t_end = 0.5
    traj = run(w0, SolverConfig(nu=NU, t_end=t_end, dt=0.05))
    expect = math.exp(-NU * k0**2 * t_end) * w0.l2_norm()
    assert abs(traj.snapshots[-1].omega_hat.l2_norm() / expect - 1) <= 1e-4


def test_invariants_along_run(grid16):
    traj = run(random_vort(grid16, 2, amplitude=2.0, peak=1), SolverConfig(nu=NU, t_end=0.3, dt=0.05))
    for s in traj.snapshots:
        w = s.omega_hat
        assert np.max(np.abs(divergence(w).data)) <= 1e-10 * np.max(np.abs(w.data))
        assert np.max(np.abs(w.mean())) == 0


def test_step_halving_small_grid(grid16):
    w0 = taylor_green_vorticity(grid16)
    finals = [run(w0, SolverConfig(nu=NU, t_end=0.5, dt=dt)).snapshots[-1].omega_hat for dt in (0.05, 0.025)]
    assert (finals[0] - finals[1]).l2_norm() <= 1e-6 * finals[1].l2_norm()


def test_strictly_decreasing_small_data(grid16):
    traj = run(random_vort(grid16, 5, amplitude=0.1, peak=1), SolverConfig(nu=0.5, t_end=0.5, dt=0.05))
    norms = [s.omega_hat.l2_norm() for s in traj.snapshots]
    assert np.all(np.diff(norms) < 0)


def test_cfl_step(grid16):
    w0 = random_vort(grid16, 1, amplitude=50.0, peak=1)
    cfg = SolverConfig(nu=NU, t_end=1.0, cfl=0.4)
    s1 = step(SolverState(0.0, w0, 0, cfg))
    umax = float(np.max(dft_inverse(biot_savart(w0)).magnitude()))
    assert s1.t == pytest.approx(0.4 * grid16.dx / umax)


def test_enstrophy_budget(grid):
    # d/dt (1/2)||w||^2 = -nu ||grad w||^2 + <(w.grad)u, w>, integrated by Simpson over one step
    w0 = random_vort(grid, 6, amplitude=3.0, peak=1)
    cfg = SolverConfig(nu=NU, t_end=1.0)
    h = 0.01
    mid = step(SolverState(0.0, w0, 0, cfg), dt=h / 2)
    end = step(mid, dt=h / 2)

    def rate(w):
        stretch = dft_inverse(stretching_part(biot_savart(w, check=False), w)).data
        return -NU * q_p(w, 2) + float(np.sum(stretch * dft_inverse(w).data) * grid.cell_volume)

    lhs = 0.5 * (end.omega_hat.l2_norm() ** 2 - w0.l2_norm() ** 2)
    rhs = h / 6 * (rate(w0) + 4 * rate(mid.omega_hat) + rate(end.omega_hat))
    scale = h * NU * q_p(w0, 2)
    assert abs(lhs - rhs) <= 1e-6 * scale


def test_abort_returns_partial_trajectory(grid16):
    w0 = random_vort(grid16, 1, amplitude=1e8, peak=1)
    traj = run(w0, SolverConfig(nu=0.01, t_end=50.0, dt=1.0))
    assert traj.aborted
    assert traj.abort_diagnostic["step"] >= 0
    assert len(traj) >= 1


def test_step_raises_on_blowup(grid16):
    w0 = random_vort(grid16, 1, amplitude=1e8, peak=1)
    state = SolverState(0.0, w0, 0, SolverConfig(nu=0.01, t_end=50.0, dt=1.0))
    with pytest.raises(NumericalAbort):
        for _ in range(50):
            state = step(state)


def test_dt_floor(grid16):
    with pytest.raises(NumericalAbort):
        step(SolverState(0.0, random_vort(grid16, 1, peak=1), 0, SolverConfig(nu=NU, t_end=1.0)), dt=1e-14)


def test_taylor_green_shape():
    g = make_grid(3, 16)
    w = taylor_green_vorticity(g)
    assert np.max(np.abs(divergence(w).data)) < 1e-14
    assert w.hermitian_defect() < 1e-14
