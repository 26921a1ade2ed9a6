"""Norms, the Q_p dissipation functional, the L^p duality map and checkers.

Every checker returns a :class:`FunctionalReport`. Inequalities whose constant
is only known to exist are reported as a ratio with ``satisfied=None``; the
lemma suite aggregates such ratios into empirical constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.fft as spfft

from .littlewood_paley import DyadicPartition
from .spectral import (
    PhysicalField,
    SpectralField,
    dft_forward,
    dft_inverse,
    fractional_laplacian,
    gradient,
    laplacian,
)

__all__ = [
    "BesovParams",
    "FunctionalReport",
    "REPORT_COLUMNS",
    "lp_norm",
    "band_lp_norms",
    "besov_norm",
    "q_p",
    "duality_map",
    "energy",
    "check_lemma_2_5",
    "check_lemma_2_6",
    "check_bernstein",
    "check_planchon",
    "check_besov_equivalence",
    "check_embedding",
    "write_reports_csv",
]

MEAN_TOL = 1e-12


@dataclass(frozen=True)
class BesovParams:
    """Homogeneous Besov index triple; ``p`` and ``q`` may be ``math.inf``."""

    s: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"Besov p and q must be >= 1, got p={self.p}, q={self.q}")

    @classmethod
    def parse(cls, text: str) -> BesovParams:
        s, p, q = (float(x) for x in text.split(","))
        return cls(s, p, q)

    def label(self) -> str:
        return f"B({self.s:g},{self.p:g},{self.q:g})"


@dataclass
class FunctionalReport:
    """Outcome of one inequality check.

    ``ratio`` is ``lhs / rhs`` when ``rhs > 0`` (0 when both vanish, inf when
    only ``rhs`` does). ``satisfied`` is ``None`` for ratio-only checks.
    """

    name: str
    lhs: float
    rhs: float
    satisfied: bool | None = None
    context: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    flag: str = ""
    ratio: float = field(init=False)

    def __post_init__(self) -> None:
        self.ratio = _ratio(self.lhs, self.rhs)

    def row(self) -> dict:
        row = {
            "check_name": self.name,
            "p": self.context.get("p", ""),
            "q": self.context.get("q", ""),
            "s": self.context.get("s", ""),
            "m": self.context.get("m", ""),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "satisfied": "" if self.satisfied is None else int(bool(self.satisfied)),
            "seed": self.context.get("seed", ""),
        }
        row.update(self.extra)
        return row


REPORT_COLUMNS = ["check_name", "p", "q", "s", "m", "lhs", "rhs", "ratio", "satisfied", "seed"]


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    if lhs == 0:
        return 0.0
    return math.inf


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports_csv(reports: Iterable[FunctionalReport], path: str | Path, extra_columns: list[str] | None = None) -> None:
    cols = REPORT_COLUMNS + list(extra_columns or [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in reports:
            row = r.row()
            w.writerow([_fmt(row.get(c, "")) for c in cols])


def _phys(f) -> PhysicalField:
    return dft_inverse(f) if isinstance(f, SpectralField) else f


def _spec(f) -> SpectralField:
    return dft_forward(f) if isinstance(f, PhysicalField) else f


def _magnitude_lp(mag: np.ndarray, p: float, cell_volume: float) -> float:
    if p == math.inf:
        return float(np.max(mag)) if mag.size else 0.0
    # scale out the max to keep large p finite
    top = float(np.max(mag)) if mag.size else 0.0
    if top == 0.0:
        return 0.0
    return top * float(np.sum((mag / top) ** p) * cell_volume) ** (1.0 / p)


def lp_norm(f, p: float) -> float:
    """``(int |f|^p dx)^(1/p)`` by lattice Riemann sum; ``p = inf`` gives the max."""
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    f = _phys(f)
    return _magnitude_lp(f.magnitude(), p, f.grid.cell_volume)


def band_lp_norms(fh: SpectralField, p: float, part: DyadicPartition) -> dict[int, float]:
    """``||Delta_j f||_p`` for every band of the partition."""
    g = fh.grid
    axes = tuple(range(1, g.dim + 1))
    out = {}
    for j in part.j_range:
        blk = spfft.ifftn(fh.data * part.psi[j], axes=axes, norm="forward").real
        out[j] = _magnitude_lp(np.sqrt(np.sum(blk**2, axis=0)), p, g.cell_volume)
    return out


def _check_mean_free(fh: SpectralField) -> None:
    scale = float(np.max(np.abs(fh.data))) if fh.data.size else 0.0
    if scale > 0 and float(np.max(np.abs(fh.mean()))) > MEAN_TOL * scale:
        raise ValueError("homogeneous Besov norm needs a mean-free field")


def _lq(terms: np.ndarray, q: float) -> float:
    if terms.size == 0:
        return 0.0
    if q == math.inf:
        return float(np.max(terms))
    top = float(np.max(terms))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((terms / top) ** q)) ** (1.0 / q)


def besov_norm(fh, params: BesovParams, part: DyadicPartition, band_norms: dict[int, float] | None = None) -> float:
    """``(sum_j 2^{jsq} ||Delta_j f||_p^q)^{1/q}`` over the partition bands."""
    fh = _spec(fh)
    _check_mean_free(fh)
    if band_norms is None:
        band_norms = band_lp_norms(fh, params.p, part)
    terms = np.array([2.0 ** (j * params.s) * band_norms[j] for j in part.j_range])
    return _lq(terms, params.q)


def q_p(phi, p: float) -> float:
    """``int |phi|^{p-2} |grad phi|^2 dx`` with spectral derivatives.

    ``|grad phi|^2`` sums the squares of all partials of all components. Where
    ``|phi| = 0`` and ``p > 2`` the integrand is taken as zero.
    """
    if p < 2:
        raise ValueError(f"Q_p needs p >= 2, got {p}")
    fh = _spec(phi)
    g = fh.grid
    mag = _phys(phi).magnitude()
    grad = spfft.ifftn(gradient(fh), axes=tuple(range(2, g.dim + 2)), norm="forward").real
    grad2 = np.sum(grad**2, axis=(0, 1))
    if p == 2:
        weight = 1.0
    else:
        weight = np.where(mag > 0, mag ** (p - 2), 0.0)
    return float(np.sum(weight * grad2) * g.cell_volume)


def duality_map(x, p: float) -> tuple[PhysicalField, bool]:
    """Return ``(G(x), degenerate)`` with ``G(x) = x |x|^{p-2} / ||x||_p^{p-2}``.

    ``degenerate`` is True (and ``G`` the zero field) when ``x = 0``.
    """
    if p < 2:
        raise ValueError(f"duality map implemented for p >= 2, got {p}")
    x = _phys(x)
    norm = lp_norm(x, p)
    if norm == 0.0:
        return PhysicalField.zeros(x.grid, x.ncomp), True
    if p == 2:
        return x, False
    mag = x.magnitude()
    return PhysicalField(x.grid, x.data * (mag / norm) ** (p - 2)), False


def energy(v) -> float:
    return 0.5 * lp_norm(v, 2) ** 2


def _pairing(a: np.ndarray, b: np.ndarray, cell_volume: float) -> float:
    return float(np.sum(a * b) * cell_volume)


def laplacian_pairing(phi, p: float) -> float:
    """``-< |phi|^{p-2} phi, Delta phi >`` by quadrature."""
    fh = _spec(phi)
    x = _phys(phi)
    lap = dft_inverse(laplacian(fh)).data
    mag = x.magnitude()
    w = x.data if p == 2 else x.data * mag ** (p - 2)
    return -_pairing(w, lap, x.grid.cell_volume)


def check_lemma_2_5(phi, p: float, tol: float = 1e-8) -> FunctionalReport:
    """Compare ``-<|phi|^{p-2} phi, Delta phi>`` with ``Q_p(phi)`` (constant 1).

    At ``p = 2`` the two agree by integration by parts, so the report is
    satisfied only on equality to ``tol`` relative.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    lhs = laplacian_pairing(phi, p)
    rhs = q_p(phi, p)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if p == 2:
        ok = abs(lhs - rhs) <= tol * scale or (lhs == 0 and rhs == 0)
    else:
        ok = lhs >= rhs - tol * scale
    return FunctionalReport("laplacian_pairing", lhs, rhs, satisfied=ok, context={"p": p})


def check_lemma_2_6(phi, p: float, m: int = 3) -> FunctionalReport:
    """Ratio ``||phi||_{mp/(m-2)} / Q_p(phi)^{1/p}`` (constant unknown)."""
    if p < 2 or m < 3:
        raise ValueError("needs p >= 2 and m >= 3")
    r = m * p / (m - 2)
    lhs = lp_norm(phi, r)
    qp = q_p(phi, p)
    rhs = qp ** (1.0 / p)
    flag = "zero_qp_nonzero_field" if rhs == 0 and lhs > 0 else ""
    return FunctionalReport("sobolev_ratio", lhs, rhs, context={"p": p, "m": m}, flag=flag)


def _support_ok(fh: SpectralField, lo: float, hi: float, rel_tol: float = 1e-13) -> bool:
    amp = np.max(np.abs(fh.data), axis=0)
    scale = float(np.max(amp)) if amp.size else 0.0
    if scale == 0:
        return True
    k = fh.grid.kmag
    live = amp > rel_tol * scale
    eps = 1e-9 * max(hi if math.isfinite(hi) else lo, 1.0)
    return bool(np.all((k[live] >= lo - eps) & (k[live] <= hi + eps)))


def check_bernstein(fh, s: float, p: float, lam: float, a: float = 0.0, b: float = 1.0, tol: float = 1e-9) -> FunctionalReport:
    """Bernstein ratio ``r = ||(-Delta)^{s/2} f||_p / (lam^s ||f||_p)``.

    Support must lie in ``{a lam <= |k| <= b lam}`` (``a = 0`` is the ball). For
    an annulus the mode-wise multiplier bounds ``r`` between ``a^s`` and ``b^s``;
    for the ball only ``s >= 0`` is meaningful and ``r <= b^s`` is reported.
    """
    fh = _spec(fh)
    if not _support_ok(fh, a * lam, b * lam):
        raise ValueError(f"field not supported in {a * lam:g} <= |k| <= {b * lam:g}")
    num = lp_norm(fractional_laplacian(fh, s), p)
    den = lam**s * lp_norm(fh, p)
    lo, hi = sorted((a**s, b**s)) if a > 0 else (0.0, b**s if s >= 0 else math.inf)
    rep = FunctionalReport("bernstein", num, den, context={"p": p, "s": s})
    rep.satisfied = lo - tol <= rep.ratio <= hi + tol if den > 0 else num == 0
    rep.extra = {"lower": lo, "upper": hi}
    return rep


def check_planchon(fh, p: float) -> FunctionalReport:
    """Ratio ``int |f|^p / int |grad f|^2 |f|^{p-2}`` for f with no modes below ``k_unit``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    fh = _spec(fh)
    if not _support_ok(fh, fh.grid.k_unit, math.inf):
        raise ValueError("field has spectral content inside the unit ball")
    lhs = lp_norm(fh, p) ** p
    rhs = q_p(fh, p)
    flag = "zero_rhs_nonzero_lhs" if rhs == 0 and lhs > 0 else ""
    return FunctionalReport("planchon", lhs, rhs, context={"p": p}, flag=flag)


def lowpass_besov_sum(fh: SpectralField, params: BesovParams, part: DyadicPartition) -> float:
    """``(sum_j 2^{jsq} ||S_j f||_p^q)^{1/q}`` over the partition bands."""
    g = fh.grid
    axes = tuple(range(1, g.dim + 1))
    terms = []
    for j in part.j_range:
        blk = spfft.ifftn(fh.data * part.low_pass(j), axes=axes, norm="forward").real
        terms.append(2.0 ** (j * params.s) * _magnitude_lp(np.sqrt(np.sum(blk**2, axis=0)), params.p, g.cell_volume))
    return _lq(np.array(terms), params.q)


def check_besov_equivalence(fh, params: BesovParams, part: DyadicPartition) -> FunctionalReport:
    """Band-sum versus low-pass-sum characterisation for negative smoothness."""
    if params.s >= 0:
        raise ValueError("equivalence check needs s < 0")
    fh = _spec(fh)
    a = besov_norm(fh, params, part)
    b = lowpass_besov_sum(fh, params, part)
    ok = bool(np.isfinite(a) and np.isfinite(b))
    return FunctionalReport(
        "besov_equivalence", a, b, satisfied=ok, context={"p": params.p, "q": params.q, "s": params.s}
    )


def check_embedding(fh, src: BesovParams, dst: BesovParams, part: DyadicPartition) -> FunctionalReport:
    """``||f||_dst / ||f||_src`` for one of the two standard embeddings.

    Sobolev-type (same ``q``, ``s1 > s2``, ``p2 >= p1``, equal scaling
    ``s - d/p``): ratio recorded only. Summability-type (same ``s, p``,
    ``q1 < q2``): ratio must not exceed 1.
    """
    d = fh.grid.dim
    close = lambda x, y: abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))  # noqa: E731
    inv = lambda p: 0.0 if p == math.inf else 1.0 / p  # noqa: E731
    sobolev = (
        close(src.q, dst.q)
        and src.s > dst.s
        and dst.p >= src.p
        and close(src.s - d * inv(src.p), dst.s - d * inv(dst.p))
    )
    summability = close(src.s, dst.s) and close(src.p, dst.p) and src.q < dst.q
    if not (sobolev or summability):
        raise ValueError(f"no embedding relation between {src.label()} and {dst.label()}")
    lhs = besov_norm(fh, dst, part)
    rhs = besov_norm(fh, src, part)
    kind = "sobolev" if sobolev else "summability"
    rep = FunctionalReport(f"embedding_{kind}", lhs, rhs, context={"p": dst.p, "q": dst.q, "s": dst.s})
    if summability:
        rep.satisfied = rep.ratio <= 1 + 1e-10
    return rep
