"""Slice-stack directory format: binary PGM masks plus a JSON manifest.

A stack directory holds one ``slice_<k>.pgm`` per plane (P5, maxval 255,
nonzero = set; rows are the first in-plane axis) and a ``manifest.json``
with {"axis": a, "grid": {"nx", "ny", "nz"}, "planes": [k, ...]}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .constraints import SliceStack
from .grid import GridSpec


def write_pgm(path, mask: np.ndarray) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("PGM masks must be 2D")
    rows, cols = mask.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write((mask.astype(np.uint8) * 255).tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    cols, rows, maxval = (int(t) for t in tokens[1:4])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(raw, dtype=np.uint8, count=rows * cols, offset=pos)
    return (pixels.reshape(rows, cols) > 0)


def write_stack(directory, stack: SliceStack) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, mask in stack.slices:
        write_pgm(directory / f"slice_{k}.pgm", mask)
    manifest = {"axis": stack.axis,
                "grid": {"nx": stack.grid.nx, "ny": stack.grid.ny,
                         "nz": stack.grid.nz},
                "planes": stack.planes}
    (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True) + "\n")


def read_stack(directory) -> SliceStack:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"missing stack manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    for key in ("axis", "grid", "planes"):
        if key not in manifest:
            raise ValueError(f"{manifest_path}: missing field {key!r}")
    g = manifest["grid"]
    grid = GridSpec(g["nx"], g["ny"], g["nz"])
    axis = int(manifest["axis"])
    expected = tuple(n for a, n in enumerate(grid.shape) if a != axis)
    slices = []
    for k in manifest["planes"]:
        path = directory / f"slice_{k}.pgm"
        if not path.exists():
            raise FileNotFoundError(f"stack slice file {path} listed in manifest is missing")
        mask = read_pgm(path)
        if mask.shape != expected:
            raise ValueError(
                f"{path}: mask shape {mask.shape} does not match grid in-plane "
                f"shape {expected}")
        slices.append((int(k), mask))
    return SliceStack(grid, axis, slices)
