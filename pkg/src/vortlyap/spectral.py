"""Periodic-box fields, FFTs and mode-wise differential operators.

Fields live on the torus ``[0, L)^m`` sampled on ``n^m`` points. Spectral
coefficients are Fourier-series coefficients: the forward transform divides
by ``n^m`` so a plane wave ``exp(i k.x)`` has a unit coefficient at ``k``.

Odd-order multipliers (``derive``, ``curl``, the Leray projection) drop the
unpaired Nyquist wavenumber ``-n/2`` so that real fields stay real; every
field produced by :func:`dealias` has no Nyquist content anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as spfft

__all__ = [
    "GridSpec",
    "PhysicalField",
    "SpectralField",
    "make_grid",
    "dft_forward",
    "dft_inverse",
    "derive",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "fractional_laplacian",
    "project_divfree",
    "dealias",
    "random_divfree_field",
    "shell_field",
    "from_function",
    "inner",
]

ROUNDTRIP_IMAG_TOL = 1e-10


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic-box discretization.

    Parameters
    ----------
    dim : int
        Spatial dimension ``m`` (2 or 3).
    n : int
        Points per axis, a power of two no smaller than 8.
    box_length : float
        Side length ``L`` of the box.
    """

    dim: int
    n: int
    box_length: float

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or not _is_pow2(int(self.n)):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def k_unit(self) -> float:
        return 2.0 * np.pi / self.box_length

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dealias_cutoff(self) -> float:
        """Largest retained per-axis wavenumber magnitude under the 2/3 rule."""
        return (self.n / 3.0) * self.k_unit

    @property
    def j_min(self) -> int:
        # smallest j with 2^j >= k_unit
        return int(np.ceil(np.log2(self.k_unit) - 1e-12))

    @property
    def j_max(self) -> int:
        # largest j with 2^j <= (n/3) k_unit
        return int(np.floor(np.log2(self.dealias_cutoff) + 1e-12))

    @cached_property
    def wavenumbers_1d(self) -> np.ndarray:
        """Per-axis lattice ``{-n/2, ..., n/2-1} * k_unit`` in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n) * self.k_unit

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays, one per axis."""
        out = []
        for axis in range(self.dim):
            sh = [1] * self.dim
            sh[axis] = self.n
            out.append(self.wavenumbers_1d.reshape(sh))
        return tuple(out)

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for odd-order multipliers (Nyquist entry set to zero)."""
        k1 = self.wavenumbers_1d.copy()
        k1[self.n // 2] = 0.0
        out = []
        for axis in range(self.dim):
            sh = [1] * self.dim
            sh[axis] = self.n
            out.append(k1.reshape(sh))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for ka in self.k:
            k2 = k2 + ka**2
        return k2

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_cutoff * (1.0 + 1e-12)
        mask = np.ones(self.shape, dtype=bool)
        for ka in self.k:
            mask = mask & (np.abs(ka) <= cut)
        return mask

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        x1 = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(*([x1] * self.dim), indexing="ij"))


def make_grid(dim: int = 3, n: int = 32, box_length: float = 2.0 * np.pi) -> GridSpec:
    return GridSpec(dim=int(dim), n=int(n), box_length=float(box_length))


class _Field:
    grid: GridSpec
    data: np.ndarray

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    def _check_other(self, other):
        if type(other) is not type(self) or other.grid != self.grid or other.data.shape != self.data.shape:
            raise ValueError("field shape or grid mismatch")

    def __add__(self, other):
        self._check_other(other)
        return type(self)(self.grid, self.data + other.data)

    def __sub__(self, other):
        self._check_other(other)
        return type(self)(self.grid, self.data - other.data)

    def __neg__(self):
        return type(self)(self.grid, -self.data)

    def __mul__(self, c):
        if isinstance(c, _Field):
            return NotImplemented
        return type(self)(self.grid, self.data * c)

    __rmul__ = __mul__

    def component(self, i: int):
        return type(self)(self.grid, self.data[i : i + 1])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PhysicalField(_Field):
    """Real field sampled on the grid, ``data.shape == (ncomp, n, ..., n)``."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == self.grid.dim:
            data = data[None]
        if data.shape[1:] != self.grid.shape:
            raise ValueError(f"field shape {data.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "data", _freeze(data))

    @classmethod
    def zeros(cls, grid: GridSpec, ncomp: int | None = None) -> PhysicalField:
        return cls(grid, np.zeros((grid.dim if ncomp is None else ncomp,) + grid.shape))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude across components."""
        return np.sqrt(np.sum(self.data**2, axis=0))


@dataclass(frozen=True, eq=False)
class SpectralField(_Field):
    """Fourier-series coefficients in FFT order, ``data.shape == (ncomp, n, ..., n)``."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim == self.grid.dim:
            data = data[None]
        if data.shape[1:] != self.grid.shape:
            raise ValueError(f"field shape {data.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "data", _freeze(data))

    @classmethod
    def zeros(cls, grid: GridSpec, ncomp: int | None = None) -> SpectralField:
        return cls(grid, np.zeros((grid.dim if ncomp is None else ncomp,) + grid.shape, dtype=complex))

    def mean(self) -> np.ndarray:
        """The k = 0 coefficient of every component."""
        return self.data[(slice(None),) + (0,) * self.grid.dim]

    def l2_norm(self) -> float:
        """L2 norm over the box from the coefficients (Parseval)."""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.data) ** 2)))

    def hermitian_defect(self) -> float:
        """Max |f(-k) - conj f(k)| relative to max |f(k)|."""
        axes = tuple(range(1, self.grid.dim + 1))
        flipped = np.roll(np.flip(self.data, axis=axes), 1, axis=axes)
        scale = np.max(np.abs(self.data))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(flipped - np.conj(self.data))) / scale)


def _axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(1, grid.dim + 1))


def dft_forward(f: PhysicalField) -> SpectralField:
    return SpectralField(f.grid, spfft.fftn(f.data, axes=_axes(f.grid), norm="forward"))


def dft_inverse(fh: SpectralField) -> PhysicalField:
    """Inverse transform; raises if the imaginary residue exceeds 1e-10 relative."""
    z = spfft.ifftn(fh.data, axes=_axes(fh.grid), norm="forward")
    scale = np.max(np.abs(z.real)) if z.size else 0.0
    resid = np.max(np.abs(z.imag)) if z.size else 0.0
    if resid > ROUNDTRIP_IMAG_TOL * max(scale, 1e-300) and resid > 1e-300:
        raise ValueError(f"spectral field is not Hermitian: imaginary residue {resid:.3e} vs scale {scale:.3e}")
    return PhysicalField(fh.grid, z.real)


def from_function(grid: GridSpec, *funcs) -> PhysicalField:
    """Sample callables ``f(x1, ..., xm)`` on the grid, one per component."""
    return PhysicalField(grid, np.stack([np.broadcast_to(fn(*grid.coords), grid.shape) for fn in funcs]))


def inner(a: PhysicalField, b: PhysicalField) -> float:
    """L2 pairing by lattice quadrature."""
    a._check_other(b)
    return float(np.sum(a.data * b.data) * a.grid.cell_volume)


def derive(fh: SpectralField, axis: int) -> SpectralField:
    if not 0 <= axis < fh.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {fh.grid.dim}")
    return SpectralField(fh.grid, 1j * fh.grid.k_odd[axis] * fh.data)


def gradient(fh: SpectralField) -> np.ndarray:
    """Spectral gradient as an array of shape ``(ncomp, dim, n, ..., n)``."""
    g = fh.grid
    return np.stack([1j * g.k_odd[a] * fh.data for a in range(g.dim)], axis=1)


def divergence(vh: SpectralField) -> SpectralField:
    g = vh.grid
    if vh.ncomp != g.dim:
        raise ValueError("divergence needs a dim-component field")
    out = sum(1j * g.k_odd[a] * vh.data[a] for a in range(g.dim))
    return SpectralField(g, out[None])


def curl(vh: SpectralField) -> SpectralField:
    g = vh.grid
    if g.dim != 3 or vh.ncomp != 3:
        raise ValueError("curl is implemented for 3-component fields in 3-D")
    kx, ky, kz = g.k_odd
    a, b, c = vh.data
    return SpectralField(g, np.stack([1j * (ky * c - kz * b), 1j * (kz * a - kx * c), 1j * (kx * b - ky * a)]))


def laplacian(fh: SpectralField) -> SpectralField:
    return SpectralField(fh.grid, -fh.grid.k2 * fh.data)


def fractional_laplacian(fh: SpectralField, s: float) -> SpectralField:
    """Apply ``(-Delta)^(s/2)``, i.e. multiply each mode by ``|k|^s``.

    The k = 0 mode is sent to zero for ``s != 0``. For ``s < 0`` the input must
    be mean-free.
    """
    if s == 0:
        return fh
    g = fh.grid
    mean = np.abs(fh.mean())
    if s < 0:
        scale = max(np.max(np.abs(fh.data)), 1e-300)
        if np.any(mean > 1e-12 * scale):
            raise ValueError("negative-order fractional Laplacian applied to a field with nonzero mean")
    kmag = g.kmag.copy()
    kmag.flat[0] = 1.0
    mult = kmag**s
    mult.flat[0] = 0.0
    return SpectralField(g, fh.data * mult)


def project_divfree(vh: SpectralField) -> SpectralField:
    """Leray projection ``I - k k^T / |k|^2`` applied mode by mode."""
    g = vh.grid
    if vh.ncomp != g.dim:
        raise ValueError("projection needs a dim-component field")
    k = g.k_odd
    k2 = sum(ka**2 for ka in k)
    k2 = np.where(k2 == 0, 1.0, k2)
    kdotv = sum(k[a] * vh.data[a] for a in range(g.dim)) / k2
    return SpectralField(g, np.stack([vh.data[a] - k[a] * kdotv for a in range(g.dim)]))


def dealias(fh: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with some ``|k_axis| > (n/3) k_unit``."""
    return SpectralField(fh.grid, fh.data * fh.grid.dealias_mask)


def random_divfree_field(
    grid: GridSpec,
    seed: int,
    spectrum_slope: float = -1.0,
    amplitude: float = 1.0,
    peak_band: int | None = None,
) -> SpectralField:
    """Deterministic random divergence-free, mean-free, dealiased field.

    Mode amplitudes follow ``|k|^spectrum_slope`` times a Gaussian envelope in
    ``log2|k|`` centred on ``2^peak_band``; the result is rescaled so its L2 norm
    over the box equals ``amplitude``.
    """
    if peak_band is None:
        peak_band = grid.j_min + 1
    if not grid.j_min <= peak_band <= grid.j_max:
        raise ValueError(f"peak_band {peak_band} outside resolvable range [{grid.j_min}, {grid.j_max}]")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((grid.dim,) + grid.shape)
    fh = spfft.fftn(noise, axes=_axes(grid), norm="forward")
    kmag = grid.kmag.copy()
    kmag.flat[0] = 1.0
    envelope = kmag**spectrum_slope * np.exp(-0.5 * ((np.log2(kmag) - peak_band) / 0.75) ** 2)
    envelope.flat[0] = 0.0
    fh = fh * envelope
    field = dealias(project_divfree(SpectralField(grid, fh)))
    norm = field.l2_norm()
    if amplitude == 0 or norm == 0:
        return SpectralField.zeros(grid, grid.dim)
    return field * (amplitude / norm)


def shell_field(
    grid: GridSpec,
    radius: float,
    seed: int = 0,
    amplitude: float = 1.0,
    ncomp: int | None = None,
) -> SpectralField:
    """Random real field whose spectrum sits exactly on the sphere ``|k| = radius``.

    Vector fields (``ncomp == dim``) are projected divergence-free, which keeps
    the spectral support on the sphere. The L2 norm is scaled to ``amplitude``.
    """
    ncomp = grid.dim if ncomp is None else ncomp
    on_shell = np.abs(grid.kmag - radius) <= 1e-9 * max(radius, 1.0)
    if not np.any(on_shell):
        raise ValueError(f"no lattice modes with |k| = {radius:g}")
    rng = np.random.default_rng(seed)
    coeff = (rng.standard_normal((ncomp,) + grid.shape) + 1j * rng.standard_normal((ncomp,) + grid.shape)) * on_shell
    # real part of the synthesized field keeps the support and restores Hermitian symmetry
    z = spfft.ifftn(coeff, axes=_axes(grid), norm="forward").real
    field = SpectralField(grid, spfft.fftn(z, axes=_axes(grid), norm="forward") * on_shell)
    if ncomp == grid.dim:
        field = project_divfree(field)
    norm = field.l2_norm()
    if norm == 0:
        raise ValueError("degenerate shell sample")
    return field * (amplitude / norm)
