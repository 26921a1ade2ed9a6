"""Functionals tracked along solver trajectories and the Lyapunov monitors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as spfft
from scipy.optimize import nnls

from .functionals import BesovParams, band_lp_norms, besov_norm, lp_norm, q_p
from .littlewood_paley import DyadicPartition
from .spectral import SpectralField
from .vorticity import biot_savart, nonlinear_term

__all__ = [
    "MonitorRecord",
    "compute_record",
    "time_derivative",
    "LpMonitorReport",
    "BesovMonitorReport",
    "monitor_lp",
    "monitor_besov",
    "write_rows_csv",
]


@dataclass
class MonitorRecord:
    t: float
    step_index: int
    lp_norms: dict[float, float]
    u_m_norm: float
    q_p: dict[float, float]
    besov: dict[str, float]
    band_norms: dict[float, dict[int, float]]
    eps1: float
    eps2: float
    eps1_lowpass: float
    derived: dict = field(default_factory=dict)


def _phys(fh: SpectralField, mult=1.0) -> np.ndarray:
    return spfft.ifftn(fh.data * mult, axes=tuple(range(1, fh.grid.dim + 1)), norm="forward").real


def _sup_norm(a: np.ndarray) -> float:
    return float(np.max(np.sqrt(np.sum(a**2, axis=0))))


def eps_values(wh: SpectralField, uh: SpectralField, part: DyadicPartition) -> tuple[float, float, float]:
    """``(eps1, eps2, max_j 2^{-j} ||S_j u||_inf)``.

    ``eps1 = sup_j 2^{-j} ||Delta_j u||_inf`` and ``eps2 = sup_j 2^{-2j} ||Delta_j w||_inf``.
    By the triangle inequality the third value never exceeds ``eps1``.
    """
    eps1 = max(2.0**-j * _sup_norm(_phys(uh, part.psi[j])) for j in part.j_range)
    eps2 = max(4.0**-j * _sup_norm(_phys(wh, part.psi[j])) for j in part.j_range)
    low = max(2.0**-j * _sup_norm(_phys(uh, part.low_pass(j))) for j in part.j_range)
    return eps1, eps2, low


def compute_record(
    t: float,
    step_index: int,
    wh: SpectralField,
    part: DyadicPartition,
    p_list: Sequence[float] = (2.0,),
    m: int = 3,
    besov_list: Sequence[BesovParams] = (),
) -> MonitorRecord:
    uh = biot_savart(wh, check=False)
    band_ps = sorted({b.p for b in besov_list})
    bands = {p: band_lp_norms(wh, p, part) for p in band_ps}
    besov = {b.label(): besov_norm(wh, b, part, band_norms=bands[b.p]) for b in besov_list}
    eps1, eps2, low = eps_values(wh, uh, part)
    return MonitorRecord(
        t=t,
        step_index=step_index,
        lp_norms={p: lp_norm(wh, p) for p in p_list},
        u_m_norm=lp_norm(uh, m),
        q_p={p: q_p(wh, p) for p in p_list},
        besov=besov,
        band_norms=bands,
        eps1=eps1,
        eps2=eps2,
        eps1_lowpass=low,
    )


def time_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Centered differences (one-sided second order at the ends)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        return np.zeros_like(y)
    if y.size == 2:
        d = (y[1] - y[0]) / (t[1] - t[0])
        return np.array([d, d])
    return np.gradient(y, t, edge_order=2)


def _monotone(y: np.ndarray) -> tuple[bool, bool]:
    d = np.diff(y)
    return bool(np.all(d <= 0)), bool(d.size > 0 and np.all(d < 0))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows_csv(rows: list[dict], columns: list[str], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


@dataclass
class LpMonitorReport:
    p: float
    m: int
    nu: float
    rows: list[dict]
    summary: dict

    columns = ["t", "step", "norm_p", "norm_p_pow_p", "ddt_norm_p_pow_p", "q_p", "u_m", "margin", "fit_bound"]


def monitor_lp(snapshots, p: float, m: int, nu: float, records: list[MonitorRecord] | None = None) -> LpMonitorReport:
    """Track ``||w||_p`` along a trajectory and fit the L^p Lyapunov inequality.

    The rate ``y = -d/dt ||w||_p^p`` is fitted by nonnegative least squares as
    ``y ~ a Q_p - b ||u||_m Q_p``; with ``a = C nu`` and ``b = C K`` this gives
    the constants of ``d/dt ||w||_p^p <= -C (nu - K ||u||_m) Q_p``.
    """
    if p < 2 or m < 3:
        raise ValueError("monitor_lp needs p >= 2 and m >= 3")
    snapshots = list(snapshots)
    if not snapshots:
        raise ValueError("empty trajectory")
    if records is None:
        records = []
        for s in snapshots:
            uh = biot_savart(s.omega_hat, check=False)
            records.append(
                MonitorRecord(
                    t=s.t, step_index=s.step_index,
                    lp_norms={p: lp_norm(s.omega_hat, p)}, u_m_norm=lp_norm(uh, m),
                    q_p={p: q_p(s.omega_hat, p)}, besov={}, band_norms={},
                    eps1=math.nan, eps2=math.nan, eps1_lowpass=math.nan,
                )
            )
    t = np.array([r.t for r in records])
    norm = np.array([r.lp_norms[p] for r in records])
    powp = norm**p
    qp = np.array([r.q_p[p] for r in records])
    um = np.array([r.u_m_norm for r in records])
    ddt = time_derivative(t, powp)
    y = -ddt
    X = np.column_stack([qp, -um * qp])
    if np.any(X != 0) and np.any(y != 0):
        coef, resid = nnls(X, y)
        a, b = float(coef[0]), float(coef[1])
        rel_resid = float(resid / np.linalg.norm(y))
    else:
        a = b = 0.0
        rel_resid = 0.0
    C = a / nu
    K = b * nu / a if a > 0 else 0.0
    fit = C * (nu - K * um) * qp
    rows = []
    for i, r in enumerate(records):
        rows.append({
            "t": r.t, "step": r.step_index, "norm_p": norm[i], "norm_p_pow_p": powp[i],
            "ddt_norm_p_pow_p": ddt[i], "q_p": qp[i], "u_m": um[i],
            "margin": (y[i] / qp[i]) if qp[i] > 0 else 0.0, "fit_bound": fit[i],
        })
    nonincr, strict = _monotone(norm)
    summary = {
        "p": p,
        "m": m,
        "nu": nu,
        "records": len(records),
        "initial_norm": float(norm[0]),
        "final_norm": float(norm[-1]),
        "nonincreasing": nonincr,
        "strictly_decreasing": strict,
        "fit_C": C,
        "fit_K": K,
        "fit_relative_residual": rel_resid,
        "max_u_m": float(np.max(um)),
        "max_K_u_m": float(K * np.max(um)),
        "K_u_m_below_half_nu": bool(K * np.max(um) < nu / 2),
    }
    return LpMonitorReport(p=p, m=m, nu=nu, rows=rows, summary=summary)


@dataclass
class BesovMonitorReport:
    params: BesovParams
    nu: float
    rows: list[dict]
    band_rows: list[dict]
    summary: dict

    band_columns = ["t", "step", "j", "f_j", "band_norm_pow_p", "rate", "dissipation", "source", "dissipation_ratio", "source_ratio"]

    @property
    def columns(self) -> list[str]:
        bands = sorted({r["j"] for r in self.band_rows})
        return ["t", "step", "besov", "eps1", "eps2", "eps1_lowpass"] + [f"f_{j}" for j in bands]


def monitor_besov(snapshots, params: BesovParams, part: DyadicPartition, nu: float) -> BesovMonitorReport:
    """Track the Besov norm, its band profile and ``eps1``/``eps2`` along a run.

    Per band the balance ``d/dt ||D_j w||_p^p + nu p 4^j ||D_j w||_p^p`` is
    reported against the source ``p int |D_j w|^{p-1} |D_j F(u, w)|`` as two
    ratios: ``dissipation_ratio = -rate / dissipation`` and
    ``source_ratio = source / dissipation``.
    """
    from .config import check_besov_hypotheses

    check_besov_hypotheses(params)
    snapshots = list(snapshots)
    if not snapshots:
        raise ValueError("empty trajectory")
    p, s = params.p, params.s
    g = snapshots[0].omega_hat.grid
    rows, per_band = [], []
    for snap in snapshots:
        wh = snap.omega_hat
        uh = biot_savart(wh, check=False)
        bn = band_lp_norms(wh, p, part)
        eps1, eps2, low = eps_values(wh, uh, part)
        row = {"t": snap.t, "step": snap.step_index, "besov": besov_norm(wh, params, part, band_norms=bn),
               "eps1": eps1, "eps2": eps2, "eps1_lowpass": low}
        fh = nonlinear_term(uh, wh, form="conservative", check=False)
        src = {}
        for j in part.j_range:
            row[f"f_{j}"] = 2.0 ** (j * s) * bn[j]
            wj = _phys(wh, part.psi[j])
            fj = _phys(fh, part.psi[j])
            mag_w = np.sqrt(np.sum(wj**2, axis=0))
            mag_f = np.sqrt(np.sum(fj**2, axis=0))
            src[j] = float(p * np.sum(mag_w ** (p - 1) * mag_f) * g.cell_volume)
        rows.append(row)
        per_band.append((bn, src))
    t = np.array([r["t"] for r in rows])
    band_rows = []
    for j in part.j_range:
        powp = np.array([bn[j] ** p for bn, _ in per_band])
        rate = time_derivative(t, powp)
        for i, r in enumerate(rows):
            diss = nu * p * 4.0**j * powp[i]
            source = per_band[i][1][j]
            band_rows.append({
                "t": r["t"], "step": r["step"], "j": j, "f_j": r[f"f_{j}"], "band_norm_pow_p": powp[i],
                "rate": rate[i], "dissipation": diss, "source": source,
                "dissipation_ratio": -rate[i] / diss if diss > 0 else 0.0,
                "source_ratio": source / diss if diss > 0 else 0.0,
            })
    besov = np.array([r["besov"] for r in rows])
    nonincr, strict = _monotone(besov)
    eps1 = np.array([r["eps1"] for r in rows])
    eps2 = np.array([r["eps2"] for r in rows])
    low = np.array([r["eps1_lowpass"] for r in rows])
    summary = {
        "s": s, "p": p, "q": params.q, "nu": nu, "records": len(rows),
        "initial_besov": float(besov[0]), "final_besov": float(besov[-1]),
        "nonincreasing": nonincr, "strictly_decreasing": strict,
        "sup_eps1": float(np.max(eps1)), "sup_eps2": float(np.max(eps2)),
        "eps1_dominates_lowpass": bool(np.all(low <= eps1 * (1 + 1e-12))),
        "j_range": [part.j_min, part.j_top],
    }
    band_rows.sort(key=lambda r: (r["step"], r["j"]))
    return BesovMonitorReport(params=params, nu=nu, rows=rows, band_rows=band_rows, summary=summary)
