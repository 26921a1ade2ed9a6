"""Homogeneous Littlewood-Paley blocks and Bony's paraproduct on the torus.

The radial cutoff ``chi`` equals 1 on ``|xi| <= 1`` and 0 on ``|xi| >= 2`` with a
C-infinity ``exp(-1/t)`` transition; ``psi(xi) = chi(xi) - chi(2 xi)`` so the
band multipliers telescope and ``psi(1) = 1`` exactly.

Band indices run over ``j_min .. j_top``: ``j_min`` is the lowest band that can
see a lattice mode and ``j_top`` is the first band whose low-pass covers the
whole lattice. Everything below ``2^j_min`` (the mean, and modes between
``k_unit`` and ``2^j_min`` when ``k_unit`` is not a power of two) is kept as an
explicit low residual. For the paraproduct that residual plays the role of
band ``j_min - 1``, which makes the Bony splitting an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectral import GridSpec, SpectralField, dealias, dft_forward, dft_inverse, PhysicalField

__all__ = [
    "chi",
    "psi_hat",
    "DyadicPartition",
    "LPDecomposition",
    "build_partition",
    "delta_j",
    "s_j",
    "decompose",
    "reconstruct",
    "dealiased_product",
    "paraproduct_split",
    "paraproduct_band",
    "write_partition_csv",
]


def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi(r) -> np.ndarray:
    """Smooth radial low-pass: 1 on ``r <= 1``, 0 on ``r >= 2``, nonincreasing."""
    r = np.asarray(r, dtype=float)
    a = _bump(2.0 - r)
    b = _bump(r - 1.0)
    with np.errstate(invalid="ignore"):
        out = a / (a + b)
    out = np.where(r <= 1.0, 1.0, out)
    return np.where(r >= 2.0, 0.0, out)


def psi_hat(r) -> np.ndarray:
    """Annular multiplier supported in ``1/2 < r < 2`` with ``psi_hat(1) = 1``."""
    r = np.asarray(r, dtype=float)
    return chi(r) - chi(2.0 * r)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Band-pass and low-pass multipliers evaluated on a grid's lattice."""

    grid: GridSpec
    j_min: int
    j_top: int
    psi: dict[int, np.ndarray] = field(repr=False)
    low: np.ndarray = field(repr=False)

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_top + 1)

    def check_band(self, j: int) -> None:
        if j not in self.j_range:
            raise ValueError(f"band {j} outside partition range [{self.j_min}, {self.j_top}]")

    def low_pass(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j = sum_{p<j} Delta_p`` plus the low residual.

        Defined for every integer ``j``; below ``j_min`` it collapses to zero
        because those indices hold no bands.
        """
        if j <= self.j_min - 1:
            return np.zeros(self.grid.shape)
        if j == self.j_min:
            return self.low
        if j > self.j_top:
            return np.ones(self.grid.shape)
        return chi(self.grid.kmag / 2.0 ** (j - 1))


def build_partition(grid: GridSpec) -> DyadicPartition:
    kmax = float(np.max(grid.kmag))
    j_min = grid.j_min
    j_top = int(np.ceil(np.log2(kmax) - 1e-12))
    if j_top - j_min + 1 < 2:
        raise ValueError("grid too coarse to host two dyadic bands")
    kmag = grid.kmag
    psi = {}
    for j in range(j_min, j_top + 1):
        m = chi(kmag / 2.0**j) - chi(kmag / 2.0 ** (j - 1))
        # enforce exact annular support against rounding
        m[(kmag <= 2.0 ** (j - 1)) | (kmag >= 2.0 ** (j + 1))] = 0.0
        psi[j] = m
    low = chi(kmag / 2.0 ** (j_min - 1))
    return DyadicPartition(grid=grid, j_min=j_min, j_top=j_top, psi=psi, low=low)


def delta_j(fh: SpectralField, j: int, part: DyadicPartition) -> SpectralField:
    part.check_band(j)
    return SpectralField(fh.grid, fh.data * part.psi[j])


def s_j(fh: SpectralField, j: int, part: DyadicPartition) -> SpectralField:
    if not part.j_min <= j <= part.j_top + 1:
        raise ValueError(f"S_j index {j} outside [{part.j_min}, {part.j_top + 1}]")
    return SpectralField(fh.grid, fh.data * part.low_pass(j))


@dataclass(frozen=True, eq=False)
class LPDecomposition:
    bands: list[tuple[int, SpectralField]]
    residual_low: SpectralField
    source_grid: GridSpec

    def band(self, j: int) -> SpectralField:
        for jj, b in self.bands:
            if jj == j:
                return b
        raise KeyError(j)

    def band_energies(self) -> dict[int, float]:
        return {j: b.l2_norm() ** 2 for j, b in self.bands}


def decompose(fh: SpectralField, part: DyadicPartition) -> LPDecomposition:
    bands = [(j, delta_j(fh, j, part)) for j in part.j_range]
    return LPDecomposition(bands=bands, residual_low=s_j(fh, part.j_min, part), source_grid=fh.grid)


def reconstruct(dec: LPDecomposition) -> SpectralField:
    out = dec.residual_low.data.copy()
    for _, b in dec.bands:
        out = out + b.data
    return SpectralField(dec.source_grid, out)


def dealiased_product(fh: SpectralField, gh: SpectralField) -> SpectralField:
    """Pointwise product computed in physical space, then 2/3-truncated.

    Both inputs must have the same component count, or one of them must be
    scalar; the product is taken component by component.
    """
    f = dft_inverse(fh).data
    g = dft_inverse(gh).data
    return dealias(dft_forward(PhysicalField(fh.grid, f * g)))


def _ext_blocks(fh: SpectralField, part: DyadicPartition) -> dict[int, np.ndarray]:
    """Blocks indexed ``j_min - 1`` (low residual) through ``j_top``."""
    out = {part.j_min - 1: fh.data * part.low}
    for j in part.j_range:
        out[j] = fh.data * part.psi[j]
    return out


def _phys(grid: GridSpec, data: np.ndarray) -> np.ndarray:
    return dft_inverse(SpectralField(grid, data)).data


def _scalar_check(fh: SpectralField, gh: SpectralField) -> None:
    if fh.ncomp != 1 or gh.ncomp != 1:
        raise ValueError("paraproducts take single-component fields")
    fh._check_other(gh)


def paraproduct_split(fh: SpectralField, gh: SpectralField, part: DyadicPartition):
    """Return ``(pi(f,g), pi(g,f), R(f,g))`` with dealiased products.

    ``pi(f,g) = sum_j Delta_j f * S_{j-2} g`` and ``R(f,g)`` collects the pairs of
    blocks with indices at most two apart. The three pieces sum to
    ``dealias(f g)``.
    """
    _scalar_check(fh, gh)
    grid = fh.grid
    fb = {j: _phys(grid, d) for j, d in _ext_blocks(fh, part).items()}
    gb = {j: _phys(grid, d) for j, d in _ext_blocks(gh, part).items()}
    idx = sorted(fb)
    zero = np.zeros((1,) + grid.shape)

    def lows(blocks):
        # S_{q-2} built from blocks with index < q - 2
        return {q: sum((blocks[p] for p in idx if p < q - 2), zero) for q in idx}

    f_low = lows(fb)
    g_low = lows(gb)
    pi_fg = sum((fb[j] * g_low[j] for j in idx), zero)
    pi_gf = sum((gb[j] * f_low[j] for j in idx), zero)
    rem = zero
    for j in idx:
        for l in idx:
            if abs(l - j) <= 2:
                rem = rem + fb[j] * gb[l]

    def spec(a):
        return dealias(dft_forward(PhysicalField(grid, a)))

    return spec(pi_fg), spec(pi_gf), spec(rem)


def paraproduct_band(j: int, fh: SpectralField, gh: SpectralField, part: DyadicPartition):
    """Band-``j`` terms of the diagonal paraproduct rule.

    Returns ``(term1, term2, term3, residual)`` where ``term1 = Delta_j f S_{j-2} g``,
    ``term2 = Delta_j g S_{j-2} f``, ``term3 = Delta_j(sum_{k>=j} Delta_k f Delta_k g)``
    and ``residual = Delta_j(fg) - (term1 + term2 + term3)`` measures the
    off-diagonal pieces the rule leaves out.
    """
    _scalar_check(fh, gh)
    part.check_band(j)
    grid = fh.grid
    low = part.low_pass(j - 2)
    fj = SpectralField(grid, fh.data * part.psi[j])
    gj = SpectralField(grid, gh.data * part.psi[j])
    term1 = dealiased_product(fj, SpectralField(grid, gh.data * low))
    term2 = dealiased_product(gj, SpectralField(grid, fh.data * low))
    diag = np.zeros((1,) + grid.shape)
    for k in range(j, part.j_top + 1):
        diag = diag + _phys(grid, fh.data * part.psi[k]) * _phys(grid, gh.data * part.psi[k])
    term3 = delta_j(dealias(dft_forward(PhysicalField(grid, diag))), j, part)
    exact = delta_j(dealiased_product(fh, gh), j, part)
    residual = exact - (term1 + term2 + term3)
    return term1, term2, term3, residual


def write_partition_csv(part: DyadicPartition, path: str | Path, n_radii: int = 400) -> None:
    """Tabulate ``psi_hat(r / 2^j)`` for every band on a radial sample."""
    rmax = float(np.max(part.grid.kmag))
    radii = np.linspace(0.0, rmax, n_radii)
    cols = {f"psi_{j}": psi_hat(radii / 2.0**j) for j in part.j_range}
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["radius", *cols]) + "\n")
        for i, r in enumerate(radii):
            fh.write(",".join([f"{r:.12g}"] + [f"{c[i]:.12g}" for c in cols.values()]) + "\n")
