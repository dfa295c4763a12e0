"""Synthetic test volumes, slice subsampling and reproducible experiment runs.

Generators voxelise simple solids on the unit cube (a voxel is set when its
centre lies in the solid) and require the solid to stay inside
[0.1, 0.9]^3 so the periodic spectral operators never see wrap-around.
Slice subsampling extracts the planar masks either at explicit plane
indices or by a seeded uneven-gap rule.  An experiment manifest records
everything needed to replay a full pipeline bitwise in single-threaded
mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .constraints import SliceStack
from .errors import ConfigError, DegenerateInputError
from .grid import BinaryVolume, GridSpec, ScalarField3D, write_rvol
from . import stack_io

_PAD_LO, _PAD_HI = 0.1, 0.9


def _check_inside(lo: np.ndarray, hi: np.ndarray, what: str) -> None:
    if (lo < _PAD_LO).any() or (hi > _PAD_HI).any():
        raise ConfigError(
            f"{what} must lie strictly inside [{_PAD_LO}, {_PAD_HI}]^3, "
            f"got extent {lo.tolist()}..{hi.tolist()}")


def gen_sphere(n: int, radius: float = 0.3,
               center: tuple[float, float, float] = (0.5, 0.5, 0.5)) -> BinaryVolume:
    """Voxelised ball {|x - c| <= r}."""
    c = np.asarray(center, dtype=float)
    if radius < 0:
        raise ConfigError("radius must be >= 0")
    if radius > 0:
        _check_inside(c - radius, c + radius, "ball")
    spec = GridSpec(n, n, n)
    X, Y, Z = spec.meshgrid()
    bits = (X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2 <= radius ** 2
    return BinaryVolume(spec, bits)


def _capsule_bits(spec: GridSpec, a, b, radius: float) -> np.ndarray:
    """Voxels within `radius` of the segment a-b."""
    if radius <= 0:
        return np.zeros(spec.shape, dtype=bool)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    X, Y, Z = spec.meshgrid()
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        t = np.zeros_like(X)
    else:
        t = ((X - a[0]) * ab[0] + (Y - a[1]) * ab[1] + (Z - a[2]) * ab[2]) / denom
        t = np.clip(t, 0.0, 1.0)
    d2 = ((X - (a[0] + t * ab[0])) ** 2 + (Y - (a[1] + t * ab[1])) ** 2
          + (Z - (a[2] + t * ab[2])) ** 2)
    return d2 <= radius ** 2


def gen_branching_cylinders(n: int, trunk_radius: float = 0.1,
                            branch_radii: tuple[float, float] = (0.08, 0.08),
                            branch_angle: float = 0.5,
                            trunk: tuple = ((0.5, 0.5, 0.22), (0.5, 0.5, 0.5)),
                            branch_length: float = 0.35) -> BinaryVolume:
    """Y-shaped union of capsules: a vertical trunk and two tilted branches."""
    spec = GridSpec(n, n, n)
    a, b = (np.asarray(p, float) for p in trunk)
    segs = [(a, b, trunk_radius)]
    s, c = np.sin(branch_angle), np.cos(branch_angle)
    for sign, r in zip((+1.0, -1.0), branch_radii):
        end = b + branch_length * np.array([sign * s, 0.0, c])
        segs.append((b, end, r))
    for p0, p1, r in segs:
        if r > 0:
            _check_inside(np.minimum(p0, p1) - r, np.maximum(p0, p1) + r, "capsule")
    bits = np.zeros(spec.shape, dtype=bool)
    for p0, p1, r in segs:
        bits |= _capsule_bits(spec, p0, p1, r)
    return BinaryVolume(spec, bits)


def _occupied_range(vol: BinaryVolume, axis: int) -> tuple[int, int]:
    occupied = np.any(vol.bits, axis=tuple(a for a in range(3) if a != axis))
    idx = np.nonzero(occupied)[0]
    if idx.size == 0:
        raise DegenerateInputError("volume is empty, nothing to slice")
    return int(idx[0]), int(idx[-1])


def uneven_planes(vol: BinaryVolume, count: int, gap_min: int, gap_max: int,
                  seed: int, axis: int = 2) -> list[int]:
    """Seeded plane positions with uneven gaps drawn from [gap_min, gap_max].

    The gap sequence is drawn uniformly, then the largest gaps are shrunk
    (never below gap_min when avoidable) until the span fits the occupied
    extent; the whole run of planes is centred on that extent.
    """
    if count < 2:
        raise DegenerateInputError("need at least 2 slices")
    if not (1 <= gap_min <= gap_max):
        raise ConfigError("need 1 <= gap_min <= gap_max")
    lo, hi = _occupied_range(vol, axis)
    extent = hi - lo
    rng = np.random.default_rng(seed)
    gaps = rng.integers(gap_min, gap_max + 1, size=count - 1)
    floor = gap_min
    while gaps.sum() > extent:
        over = np.nonzero(gaps > floor)[0]
        if over.size == 0:
            if floor == 1:
                raise ConfigError(
                    f"{count} slices with gaps >= 1 cannot fit an extent of "
                    f"{extent} planes")
            floor = 1
            continue
        gaps[over[np.argmax(gaps[over])]] -= 1
    start = lo + (extent - int(gaps.sum())) // 2
    return (start + np.concatenate([[0], np.cumsum(gaps)])).tolist()


def subsample_slices(vol: BinaryVolume, planes=None, *, count: int | None = None,
                     gap_range: tuple[int, int] | None = None,
                     seed: int = 0, axis: int = 2) -> SliceStack:
    """Extract the 2D masks at explicit planes or by the seeded uneven rule."""
    if planes is None:
        if count is None or gap_range is None:
            raise ConfigError("give explicit planes or (count, gap_range)")
        planes = uneven_planes(vol, count, gap_range[0], gap_range[1], seed, axis)
    planes = [int(p) for p in planes]
    n_axis = vol.spec.shape[axis]
    for p in planes:
        if not (0 <= p < n_axis):
            raise ConfigError(f"plane {p} outside [0, {n_axis})")
    stack = SliceStack.from_volume(vol, planes, axis=axis)
    nonempty = sum(1 for _, m in stack.slices if m.any())
    if nonempty < 2:
        raise DegenerateInputError(
            f"only {nonempty} selected planes intersect the object")
    return stack


def ingest_real_stack(directory, manifest_path=None) -> tuple[SliceStack, dict]:
    """Read a PGM stack directory, returning it with a validation report."""
    directory = Path(directory)
    stack = stack_io.read_stack(directory)
    report = {"n_slices": len(stack.slices),
              "voxels_per_slice": {k: int(m.sum()) for k, m in stack.slices},
              "empty_slices": [k for k, m in stack.slices if not m.any()]}
    return stack, report


# ---------------------------------------------------------------------------
# Experiment manifests
# ---------------------------------------------------------------------------

@dataclass
class ExperimentManifest:
    """Replayable description of one synth -> reconstruct -> metrics pipeline."""

    example: str                      # sphere | branching
    n: int
    formulation: str
    method: str = "pgdm"
    slices: int = 5
    gap_min: int = 4
    gap_max: int = 5
    seed: int = 0
    eps_rule: str = "1.5/N"
    tau_rule: str = "eps^4"
    rho: float = 1.0
    alpha: float = 0.5
    erosion: int = 0
    obstacle_mode: str = "indicator"
    max_iters: int = 2000
    tol_rel: float = 1e-4
    bins: int = 64

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        return cls(**json.loads(text))


def generate_example(example: str, n: int) -> BinaryVolume:
    if example == "sphere":
        return gen_sphere(n)
    if example == "branching":
        return gen_branching_cylinders(n)
    raise ConfigError(f"unknown example {example!r} (expected sphere|branching)")


def execute_manifest(manifest: ExperimentManifest, outdir) -> dict:
    """Run the full pipeline described by a manifest into `outdir`.

    Writes the stack, the solved field, the extracted surface and the
    curvature reports; returns the output paths.  Rerunning with the same
    manifest reproduces every output byte-for-byte in single-threaded mode.
    """
    from .solvers import SolverConfig, parse_eps_rule, parse_tau_rule, run, write_trace_csv
    from .mesh import extract_isosurface, write_obj
    from .curvature import (curvature_report, write_histogram_csv,
                            write_report_csv, write_summary_json)

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(manifest.to_json() + "\n")

    vol = generate_example(manifest.example, manifest.n)
    stack = subsample_slices(vol, count=manifest.slices,
                             gap_range=(manifest.gap_min, manifest.gap_max),
                             seed=manifest.seed)
    stack_io.write_stack(outdir / "stack", stack)

    eps = parse_eps_rule(manifest.eps_rule)(manifest.n)
    tau = parse_tau_rule(manifest.tau_rule)(eps)
    cfg = SolverConfig(manifest.formulation, eps, tau, method=manifest.method,
                       rho=manifest.rho, max_iters=manifest.max_iters,
                       tol_rel=manifest.tol_rel,
                       obstacle_mode=manifest.obstacle_mode, record_trace=True)
    result = run(stack, cfg, alpha=manifest.alpha, erosion=manifest.erosion)

    paths = {"volume": outdir / "volume.rvol", "field": outdir / "u.rvol",
             "trace": outdir / "trace.csv", "surface": outdir / "surface.obj",
             "report": outdir / "report.json", "histogram": outdir / "hist.csv",
             "vertices": outdir / "vertices.csv"}
    write_rvol(paths["volume"], vol)
    write_rvol(paths["field"], result.final_u)
    write_trace_csv(paths["trace"], result)
    mesh = extract_isosurface(result.final_u, 0.5)
    write_obj(paths["surface"], mesh)
    report = curvature_report(mesh, bins=manifest.bins)
    write_summary_json(paths["report"], report)
    write_histogram_csv(paths["histogram"], report)
    write_report_csv(paths["vertices"], report)
    return {k: str(v) for k, v in paths.items()}
