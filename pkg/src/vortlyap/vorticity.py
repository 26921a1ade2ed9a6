"""Operators of the 3-D vorticity equation.

``A(u, w) = nu Lap w - (u . grad) w + (w . grad) u`` with ``u`` the
Biot-Savart velocity of ``w``, realized spectrally as ``(-Lap)^{-1} curl w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft as spfft

from .functionals import FunctionalReport, duality_map, lp_norm, q_p
from .spectral import (
    PhysicalField,
    SpectralField,
    curl,
    dft_inverse,
    divergence,
    gradient,
    laplacian,
    project_divfree,
)

__all__ = [
    "OperatorEval",
    "biot_savart",
    "check_cz_bound",
    "check_lp_velocity_bound",
    "nonlinear_term",
    "vorticity_operator",
    "dissipativity_pairing",
    "pairing_terms",
    "pairing_report",
    "scale_pairing_report",
    "PAIRING_COLUMNS",
]

DIV_TOL = 1e-10
MEAN_TOL = 1e-12

PAIRING_COLUMNS = [
    "degenerate",
    "qp_diff",
    "u_m",
    "v_m",
    "omega_m",
    "omega_t_m",
    "diff_l1",
    "qp_diff_pow_1_over_pprime",
    "viscous",
    "advection",
    "stretching",
]


def _scale(fh: SpectralField) -> float:
    return float(np.max(np.abs(fh.data))) if fh.data.size else 0.0


def _check_divfree(fh: SpectralField, what: str) -> None:
    s = _scale(fh)
    if s == 0:
        return
    g = fh.grid
    kmag = g.kmag
    div = np.max(np.abs(divergence(fh).data))
    kmax = float(np.max(kmag))
    if div > DIV_TOL * s * kmax:
        raise ValueError(f"{what} is not divergence-free (|div| = {div:.3e})")


def _check_mean_free(fh: SpectralField, what: str) -> None:
    s = _scale(fh)
    if s > 0 and float(np.max(np.abs(fh.mean()))) > MEAN_TOL * s:
        raise ValueError(f"{what} has a nonzero mean")


def biot_savart(wh: SpectralField, check: bool = True) -> SpectralField:
    """Velocity ``u = (-Lap)^{-1} curl w``; ``k = 0`` is annihilated."""
    if check:
        _check_divfree(wh, "vorticity")
        _check_mean_free(wh, "vorticity")
    g = wh.grid
    k2 = np.where(g.k2 == 0, 1.0, g.k2)
    c = curl(wh).data / k2
    c[(slice(None),) + (0,) * g.dim] = 0.0
    return SpectralField(g, c)


def _grad_norm(uh: SpectralField, p: float) -> float:
    g = uh.grid
    grad = spfft.ifftn(gradient(uh), axes=tuple(range(2, g.dim + 2)), norm="forward").real
    flat = grad.reshape((-1,) + g.shape)
    return lp_norm(PhysicalField(g, flat), p)


def check_cz_bound(wh: SpectralField, p: float) -> FunctionalReport:
    """Ratio ``||grad u||_p / ||w||_p`` (Frobenius magnitude for ``grad u``)."""
    if not 1 < p < np.inf:
        raise ValueError(f"needs 1 < p < inf, got {p}")
    if _scale(wh) == 0:
        raise ValueError("zero vorticity")
    uh = biot_savart(wh)
    return FunctionalReport("cz_bound", _grad_norm(uh, p), lp_norm(wh, p), context={"p": p})


def check_lp_velocity_bound(wh: SpectralField, p: float, m: int = 3) -> FunctionalReport:
    """Ratio ``||u||_p / (||w||_1 + ||w||_p)``."""
    if not p > m / (m - 1):
        raise ValueError(f"needs p > m/(m-1) = {m / (m - 1):g}, got {p}")
    uh = biot_savart(wh)
    rhs = lp_norm(wh, 1) + lp_norm(wh, p)
    return FunctionalReport("lp_velocity_bound", lp_norm(uh, p), rhs, context={"p": p, "m": m})


def _phys_components(fh: SpectralField) -> np.ndarray:
    return spfft.ifftn(fh.data, axes=tuple(range(1, fh.grid.dim + 1)), norm="forward").real


def _phys_gradient(fh: SpectralField) -> np.ndarray:
    # grad[i, a] = d_a f_i
    g = fh.grid
    return spfft.ifftn(gradient(fh), axes=tuple(range(2, g.dim + 2)), norm="forward").real


def _fwd(a: np.ndarray, grid) -> np.ndarray:
    return spfft.fftn(a, axes=tuple(range(a.ndim - grid.dim, a.ndim)), norm="forward") * grid.dealias_mask


def advection_part(uh: SpectralField, wh: SpectralField) -> SpectralField:
    """``(u . grad) w`` via physical-space products, dealiased."""
    u = _phys_components(uh)
    gw = _phys_gradient(wh)
    return SpectralField(uh.grid, _fwd(np.einsum("a...,ia...->i...", u, gw), uh.grid))


def stretching_part(uh: SpectralField, wh: SpectralField) -> SpectralField:
    """``(w . grad) u`` via physical-space products, dealiased."""
    w = _phys_components(wh)
    gu = _phys_gradient(uh)
    return SpectralField(uh.grid, _fwd(np.einsum("a...,ia...->i...", w, gu), uh.grid))


def nonlinear_term(
    uh: SpectralField,
    wh: SpectralField,
    form: Literal["advective", "conservative"] = "conservative",
    check: bool = True,
) -> SpectralField:
    """``F(u, w) = (u . grad) w - (w . grad) u``.

    The conservative form evaluates ``div(u (x) w) - div(w (x) u)``: the tensor
    products are formed pointwise, dealiased, then differentiated.
    """
    if check:
        _check_divfree(uh, "velocity")
        _check_divfree(wh, "vorticity")
    g = uh.grid
    if form == "advective":
        return advection_part(uh, wh) - stretching_part(uh, wh)
    if form != "conservative":
        raise ValueError(f"unknown form {form!r}")
    u = _phys_components(uh)
    w = _phys_components(wh)
    # T[a, i] = u_a w_i - w_a u_i ; F_i = d_a T[a, i]
    t = np.einsum("a...,i...->ai...", u, w)
    t = t - np.swapaxes(t, 0, 1)
    th = _fwd(t, g)
    k = g.k_odd
    out = sum(1j * k[a] * th[a] for a in range(g.dim))
    return SpectralField(g, out)


@dataclass(frozen=True, eq=False)
class OperatorEval:
    a_field: SpectralField
    velocity: SpectralField
    diagnostics: dict = field(default_factory=dict)


def vorticity_operator(wh: SpectralField, nu: float, with_diagnostics: bool = True) -> OperatorEval:
    """Evaluate ``A(u, w)`` with ``u`` from Biot-Savart, projected divergence-free."""
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    uh = biot_savart(wh)
    visc = laplacian(wh) * nu
    adv = advection_part(uh, wh)
    stretch = stretching_part(uh, wh)
    a = project_divfree(visc - adv + stretch)
    diag = {}
    if with_diagnostics:
        diag = {
            "viscous_l2": visc.l2_norm(),
            "advection_l2": adv.l2_norm(),
            "stretching_l2": stretch.l2_norm(),
        }
    return OperatorEval(a_field=a, velocity=uh, diagnostics=diag)


def pairing_terms(wh: SpectralField, wth: SpectralField, nu: float) -> dict:
    """Physical-space pieces of ``A(u, w) - A(v, w~)`` shared by every ``p``."""
    diff = wh - wth
    uh = biot_savart(wh)
    vh = biot_savart(wth)
    visc = laplacian(diff) * nu
    adv = advection_part(uh, wh) - advection_part(vh, wth)
    stretch = stretching_part(uh, wh) - stretching_part(vh, wth)
    return {
        "diff": diff,
        "diff_phys": dft_inverse(diff),
        "u": uh,
        "v": vh,
        "omega": wh,
        "omega_t": wth,
        "nu": nu,
        "norms": {},
        "viscous": dft_inverse(visc).data,
        "advection": dft_inverse(adv).data,
        "stretching": dft_inverse(stretch).data,
    }


def _degenerate(p: float, m: int) -> FunctionalReport:
    extra = {c: 0.0 for c in PAIRING_COLUMNS}
    extra["degenerate"] = 1
    return FunctionalReport("dissipativity", 0.0, 0.0, satisfied=True, context={"p": p, "m": m}, extra=extra, flag="degenerate")


def pairing_report(terms: dict, p: float, m: int = 3) -> FunctionalReport:
    """Evaluate the dissipativity pairing for one ``p`` from :func:`pairing_terms`."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    diff = terms["diff"]
    gmap, degenerate = duality_map(terms["diff_phys"], p)
    ctx = {"p": p, "m": m, "nu": terms["nu"]}
    if degenerate:
        return _degenerate(p, m)
    dv = diff.grid.cell_volume
    visc_pair = float(np.sum(terms["viscous"] * gmap.data) * dv)
    adv_pair = -float(np.sum(terms["advection"] * gmap.data) * dv)
    stretch_pair = float(np.sum(terms["stretching"] * gmap.data) * dv)
    lhs = visc_pair + adv_pair + stretch_pair
    qpd = q_p(diff, p)
    pprime = p / (p - 1)
    norms = terms["norms"].get(m)
    if norms is None:
        norms = terms["norms"][m] = {
            "u_m": lp_norm(terms["u"], m),
            "v_m": lp_norm(terms["v"], m),
            "omega_m": lp_norm(terms["omega"], m),
            "omega_t_m": lp_norm(terms["omega_t"], m),
            "diff_l1": lp_norm(terms["diff_phys"], 1),
        }
    extra = {
        "degenerate": 0,
        "qp_diff": qpd,
        **norms,
        "qp_diff_pow_1_over_pprime": qpd ** (1.0 / pprime),
        "viscous": visc_pair,
        "advection": adv_pair,
        "stretching": stretch_pair,
    }
    # rhs holds nu * Q_p(w - w~), the scale of the leading dissipative term
    return FunctionalReport("dissipativity", lhs, terms["nu"] * qpd, satisfied=lhs <= 0, context=ctx, extra=extra)


def scale_pairing_report(rep: FunctionalReport, amplitude: float) -> FunctionalReport:
    """Report for the pair ``(a w, a w~)`` derived from the pair ``(w, w~)``.

    ``G`` is homogeneous of degree one, so the viscous pairing scales as
    ``a^2`` and the transport pairings as ``a^3``; norms follow their degrees.
    """
    p, m = rep.context["p"], rep.context["m"]
    if rep.flag == "degenerate" or amplitude == 0:
        return _degenerate(p, m)
    a = float(amplitude)
    e = rep.extra
    pprime = p / (p - 1)
    extra = {
        "degenerate": 0,
        "qp_diff": e["qp_diff"] * abs(a) ** p,
        **{k: e[k] * abs(a) for k in ("u_m", "v_m", "omega_m", "omega_t_m", "diff_l1")},
        "qp_diff_pow_1_over_pprime": e["qp_diff_pow_1_over_pprime"] * abs(a) ** (p / pprime),
        "viscous": e["viscous"] * a * a,
        "advection": e["advection"] * a**3,
        "stretching": e["stretching"] * a**3,
    }
    lhs = extra["viscous"] + extra["advection"] + extra["stretching"]
    return FunctionalReport("dissipativity", lhs, rep.context["nu"] * extra["qp_diff"], satisfied=lhs <= 0,
                            context=dict(rep.context), extra=extra)


def dissipativity_pairing(
    wh: SpectralField, wth: SpectralField, nu: float, p: float, m: int = 3
) -> FunctionalReport:
    """``<A(u, w) - A(v, w~), G(w - w~)>`` plus the ingredients of its bound.

    ``satisfied`` is ``lhs <= 0``. When ``w = w~`` the duality map is undefined;
    the report then has ``lhs = 0`` and ``flag = "degenerate"``.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    return pairing_report(pairing_terms(wh, wth, nu), p, m)
