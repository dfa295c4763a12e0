"""Uniform periodic-grid field containers and elementwise field algebra.

The computational domain is the unit cube [0, 1)^3 with periodic topology.
Voxel (i, j, k) of an nx x ny x nz grid has its centre at

    ((i + 1/2)/nx, (j + 1/2)/ny, (k + 1/2)/nz),

so spacing along an axis is exactly 1/count and the voxel volume is
1/(nx*ny*nz).  Arrays are indexed [i, j, k]; the flat serialisation order
is x-fastest, flat = i + nx*(j + ny*k).

The RVOL on-disk format is a raw little-endian payload (f32 for scalar
fields, u8 with values 0/1 for binary volumes) plus a JSON sidecar
``<path>.json`` recording counts, dtype and order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class GridSpec:
    """Voxel counts of a uniform grid over the unit cube."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny), ("nz", self.nz)):
            if not isinstance(n, (int, np.integer)) or n < 4:
                raise ConfigError(f"{name} must be an integer >= 4, got {n!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (1.0 / self.nx, 1.0 / self.ny, 1.0 / self.nz)

    @property
    def voxel_volume(self) -> float:
        return 1.0 / (self.nx * self.ny * self.nz)

    @property
    def n_voxels(self) -> int:
        return self.nx * self.ny * self.nz

    def axis_coords(self, axis: int) -> np.ndarray:
        """Physical centre coordinates of the voxels along one axis."""
        n = self.shape[axis]
        return (np.arange(n) + 0.5) / n

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical centre coordinates X, Y, Z, each of shape (nx, ny, nz)."""
        return np.meshgrid(*(self.axis_coords(a) for a in range(3)), indexing="ij")


def flat_index(spec: GridSpec, i, j, k):
    """Flat x-fastest index of voxel (i, j, k)."""
    return i + spec.nx * (j + spec.ny * k)


def unflat_index(spec: GridSpec, flat):
    """Inverse of flat_index."""
    i = flat % spec.nx
    j = (flat // spec.nx) % spec.ny
    k = flat // (spec.nx * spec.ny)
    return i, j, k


@dataclass
class ScalarField3D:
    """One real value per voxel.  Treated as immutable after construction."""

    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != self.spec.shape:
            raise ShapeError(
                f"data shape {self.data.shape} does not match grid {self.spec.shape}")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ScalarField3D":
        return cls(spec, np.zeros(spec.shape))

    @classmethod
    def full(cls, spec: GridSpec, value: float) -> "ScalarField3D":
        return cls(spec, np.full(spec.shape, float(value)))

    def copy(self) -> "ScalarField3D":
        return ScalarField3D(self.spec, self.data.copy())


@dataclass
class VectorField3D:
    """Three scalar components on one shared grid, data shape (3, nx, ny, nz)."""

    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (3,) + self.spec.shape:
            raise ShapeError(
                f"data shape {self.data.shape} does not match (3,)+{self.spec.shape}")

    @classmethod
    def zeros(cls, spec: GridSpec) -> "VectorField3D":
        return cls(spec, np.zeros((3,) + spec.shape))

    @classmethod
    def from_components(cls, x: ScalarField3D, y: ScalarField3D,
                        z: ScalarField3D) -> "VectorField3D":
        if not (x.spec == y.spec == z.spec):
            raise ShapeError("vector components must share one GridSpec")
        return cls(x.spec, np.stack([x.data, y.data, z.data]))

    def component(self, axis: int) -> ScalarField3D:
        return ScalarField3D(self.spec, self.data[axis])


@dataclass
class BinaryVolume:
    """Voxelised indicator set: one boolean per voxel."""

    spec: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != self.spec.shape:
            raise ShapeError(
                f"bits shape {self.bits.shape} does not match grid {self.spec.shape}")

    @classmethod
    def empty(cls, spec: GridSpec) -> "BinaryVolume":
        return cls(spec, np.zeros(spec.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def _check_finite(arr: np.ndarray, context: str) -> None:
    if not np.isfinite(arr).all():
        raise ValueError(f"{context} produced non-finite values")


def field_map(f: ScalarField3D, fn: Callable[[np.ndarray], np.ndarray]) -> ScalarField3D:
    """Apply a vectorised pointwise function, preserving the grid."""
    out = np.asarray(fn(f.data), dtype=np.float64)
    if out.shape != f.data.shape:
        raise ShapeError("pointwise function changed the field shape")
    _check_finite(out, "field_map")
    return ScalarField3D(f.spec, out)


def field_axpy(a: float, x: ScalarField3D, y: ScalarField3D) -> ScalarField3D:
    """a*x + y elementwise."""
    if x.spec != y.spec:
        raise ShapeError(f"grid mismatch: {x.spec} vs {y.spec}")
    out = a * x.data + y.data
    _check_finite(out, "field_axpy")
    return ScalarField3D(x.spec, out)


def norms(f: ScalarField3D) -> tuple[float, float]:
    """Volume-weighted L2 norm and sup norm: (sqrt(sum f^2 * vol), max |f|)."""
    l2 = float(np.sqrt(np.sum(f.data * f.data) * f.spec.voxel_volume))
    linf = float(np.abs(f.data).max()) if f.data.size else 0.0
    return l2, linf


# ---------------------------------------------------------------------------
# RVOL serialisation
# ---------------------------------------------------------------------------

def _sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_rvol(path, vol: ScalarField3D | BinaryVolume) -> None:
    """Write a field (f32) or binary volume (u8) plus its JSON sidecar."""
    path = Path(path)
    spec = vol.spec
    if isinstance(vol, BinaryVolume):
        dtype = "u8"
        payload = vol.bits.astype(np.uint8).ravel(order="F").tobytes()
    else:
        dtype = "f32"
        payload = vol.data.astype("<f4").ravel(order="F").tobytes()
    meta = {"nx": spec.nx, "ny": spec.ny, "nz": spec.nz,
            "dtype": dtype, "order": "x-fastest"}
    path.write_bytes(payload)
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_rvol(path) -> ScalarField3D | BinaryVolume:
    """Read an RVOL file; the sidecar dtype decides the returned container."""
    path = Path(path)
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise FileNotFoundError(f"missing RVOL sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    for key in ("nx", "ny", "nz", "dtype", "order"):
        if key not in meta:
            raise ValueError(f"RVOL sidecar {sidecar} missing field {key!r}")
    if meta["order"] != "x-fastest":
        raise ValueError(f"unsupported RVOL order {meta['order']!r} in {sidecar}")
    spec = GridSpec(meta["nx"], meta["ny"], meta["nz"])
    raw = path.read_bytes()
    if meta["dtype"] == "f32":
        flat = np.frombuffer(raw, dtype="<f4")
    elif meta["dtype"] == "u8":
        flat = np.frombuffer(raw, dtype=np.uint8)
    else:
        raise ValueError(f"unsupported RVOL dtype {meta['dtype']!r} in {sidecar}")
    if flat.size != spec.n_voxels:
        raise ValueError(
            f"RVOL payload {path} has {flat.size} values, expected {spec.n_voxels}")
    cube = flat.reshape(spec.shape, order="F")
    if meta["dtype"] == "u8":
        if not np.isin(flat, (0, 1)).all():
            raise ValueError(f"u8 RVOL {path} has values other than 0/1")
        return BinaryVolume(spec, cube.astype(bool))
    return ScalarField3D(spec, cube.astype(np.float64))
