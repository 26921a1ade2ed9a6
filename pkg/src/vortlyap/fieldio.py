"""Binary field container and trajectory checkpoints.

Layout (all little-endian)::

    offset  size  content
    0       8     magic b"VLYPFLD\\0"
    8       4     uint32 format version (1)
    12      4     uint32 dim
    16      4     uint32 n
    20      4     uint32 representation (0 physical, 1 spectral)
    24      4     uint32 component count
    28      4     uint32 reserved (0)
    32      8     float64 box length L
    40      ...   payload

The payload is C-order (component slowest, last axis fastest). Physical
fields store float64 values; spectral fields store complex coefficients as
interleaved (real, imag) float64 pairs in FFT index order, with the
Fourier-series normalization used throughout the package.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .spectral import GridSpec, PhysicalField, SpectralField

__all__ = ["write_field", "read_field", "field_bytes", "write_checkpoint", "read_trajectory"]

MAGIC = b"VLYPFLD\0"
VERSION = 1
HEADER = struct.Struct("<8sIIIIIId")
PHYSICAL, SPECTRAL = 0, 1


def field_bytes(f: PhysicalField | SpectralField) -> bytes:
    rep = SPECTRAL if isinstance(f, SpectralField) else PHYSICAL
    g = f.grid
    head = HEADER.pack(MAGIC, VERSION, g.dim, g.n, rep, f.ncomp, 0, g.box_length)
    dtype = "<c16" if rep == SPECTRAL else "<f8"
    return head + np.ascontiguousarray(f.data, dtype=dtype).tobytes()


def write_field(f: PhysicalField | SpectralField, path: str | Path) -> None:
    Path(path).write_bytes(field_bytes(f))


def read_field(path: str | Path) -> PhysicalField | SpectralField:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, dim, n, rep, ncomp, _, length = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    grid = GridSpec(dim, n, length)
    if rep not in (PHYSICAL, SPECTRAL):
        raise ValueError(f"{path}: bad representation flag {rep}")
    dtype = "<c16" if rep == SPECTRAL else "<f8"
    count = ncomp * n**dim
    expected = HEADER.size + count * np.dtype(dtype).itemsize
    if len(raw) != expected:
        raise ValueError(f"{path}: payload size {len(raw) - HEADER.size} does not match header")
    data = np.frombuffer(raw, dtype=dtype, offset=HEADER.size).reshape((ncomp,) + grid.shape)
    cls = SpectralField if rep == SPECTRAL else PhysicalField
    return cls(grid, data)


def write_checkpoint(directory: str | Path, index: int, t: float, step_index: int, omega_hat: SpectralField, cfg_hash: str) -> Path:
    """Write ``snap_XXXXX.vlf`` plus its JSON sidecar; returns the field path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fpath = directory / f"snap_{index:05d}.vlf"
    write_field(omega_hat, fpath)
    side = {"t": t, "step_index": step_index, "config_hash": cfg_hash}
    fpath.with_suffix(".json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")
    return fpath


def read_trajectory(directory: str | Path):
    """Load checkpoints written by :func:`write_checkpoint`, in index order."""
    from .solver import Snapshot

    directory = Path(directory)
    files = sorted(directory.glob("snap_*.vlf"))
    if not files:
        raise FileNotFoundError(f"no checkpoints in {directory}")
    snaps = []
    for f in files:
        side = json.loads(f.with_suffix(".json").read_text())
        fld = read_field(f)
        if not isinstance(fld, SpectralField):
            raise ValueError(f"{f}: checkpoint must be spectral")
        snaps.append(Snapshot(t=side["t"], step_index=side["step_index"], omega_hat=fld))
    return snaps
