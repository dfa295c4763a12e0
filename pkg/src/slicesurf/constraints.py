"""Interior/exterior restrictions from slice data and the obstacle profiles.

A slice stack provides, on a few parallel planes, where the object
definitely is (interior restriction, the mask possibly eroded) and
definitely is not (exterior restriction, the complement of the possibly
dilated mask).  Each planar restriction is thickened into a 3D slab whose
half-thickness at in-plane position xi is h*|d(xi)| with d the in-plane
signed distance to the restriction and h the fattening thickness.  The
fattened sets are turned into pointwise bounds lower <= u <= upper, either
as sharp indicator bounds (lower = 1/2 on the interior set, upper = 1/2 on
the exterior set) or as diffuse profiles of their signed distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, InfeasibleConstraintsError, ShapeError
from .grid import BinaryVolume, GridSpec, ScalarField3D
from .distance import signed_distance, slice_signed_distance
from .phasefield import PhaseFieldParams, transition_profile


def _in_plane_shape(grid: GridSpec, axis: int) -> tuple[int, int]:
    return tuple(n for a, n in enumerate(grid.shape) if a != axis)


def _in_plane_spacing(grid: GridSpec, axis: int) -> tuple[float, float]:
    return tuple(s for a, s in enumerate(grid.spacing) if a != axis)


@dataclass
class SliceStack:
    """Ordered set of (plane index, 2D binary mask) pairs along one axis."""

    grid: GridSpec
    axis: int
    slices: list[tuple[int, np.ndarray]]

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ShapeError(f"axis must be 0, 1 or 2, got {self.axis}")
        shape = _in_plane_shape(self.grid, self.axis)
        n_axis = self.grid.shape[self.axis]
        cleaned = []
        prev = -1
        for k, mask in self.slices:
            k = int(k)
            if not (0 <= k < n_axis):
                raise ShapeError(f"plane index {k} outside [0, {n_axis})")
            if k <= prev:
                raise ShapeError("plane indices must be strictly increasing")
            prev = k
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != shape:
                raise ShapeError(f"slice {k} mask shape {mask.shape} != {shape}")
            cleaned.append((k, mask))
        self.slices = cleaned

    @property
    def planes(self) -> list[int]:
        return [k for k, _ in self.slices]

    @classmethod
    def from_volume(cls, vol: BinaryVolume, planes, axis: int = 2) -> "SliceStack":
        slices = []
        for k in planes:
            mask = np.take(vol.bits, int(k), axis=axis)
            slices.append((int(k), mask))
        return cls(vol.spec, axis, slices)


@dataclass
class ObstaclePair:
    """Pointwise bounds encoding the slice constraints, both in [0, 1]."""

    lower: ScalarField3D
    upper: ScalarField3D

    def __post_init__(self):
        if self.lower.spec != self.upper.spec:
            raise ShapeError("obstacle bounds must share one grid")
        lo, hi = self.lower.data, self.upper.data
        if lo.min() < 0.0 or hi.max() > 1.0:
            raise InfeasibleConstraintsError("obstacle bounds must lie in [0, 1]")
        if np.any(lo > hi):
            raise InfeasibleConstraintsError("lower obstacle exceeds upper obstacle")

    @classmethod
    def trivial(cls, spec: GridSpec) -> "ObstaclePair":
        return cls(ScalarField3D.zeros(spec), ScalarField3D.full(spec, 1.0))


@dataclass
class SliceRestrictions:
    """Per-slice interior/exterior planar restrictions plus warnings."""

    omega_in: SliceStack
    omega_ex: SliceStack
    warnings: list[str] = field(default_factory=list)


def restrictions_from_slices(stack: SliceStack, erosion: int = 0) -> SliceRestrictions:
    """Interior = eroded mask, exterior = complement of the dilated mask.

    With erosion 0 the mask and its in-plane complement are used directly.
    A slice whose interior empties under erosion is kept (with a warning
    record) so noisy slices constrain only the exterior.
    """
    if erosion < 0:
        raise ShapeError(f"erosion must be >= 0, got {erosion}")
    omega_in, omega_ex, warnings = [], [], []
    for k, mask in stack.slices:
        if erosion > 0:
            inner = ndimage.binary_erosion(mask, iterations=erosion)
            outer_c = ndimage.binary_dilation(mask, iterations=erosion)
        else:
            inner = mask.copy()
            outer_c = mask.copy()
        if mask.any() and not inner.any():
            warnings.append(f"slice {k}: interior restriction emptied by erosion={erosion}")
        omega_in.append((k, inner))
        omega_ex.append((k, ~outer_c))
    return SliceRestrictions(
        SliceStack(stack.grid, stack.axis, omega_in),
        SliceStack(stack.grid, stack.axis, omega_ex),
        warnings,
    )


def fatten(omega: SliceStack, params: PhaseFieldParams,
           clip_to: BinaryVolume | None = None) -> BinaryVolume:
    """Thicken planar restrictions into 3D slabs of half-thickness h*|d|.

    A voxel at out-of-plane offset zeta from plane k belongs to the slab of
    that plane iff its in-plane position xi is in the restriction and
    |zeta| < h * |d(xi)|, with d the in-plane signed distance to the
    restriction.  Offset zero is always included.  If `clip_to` is given
    the result is intersected with it.
    """
    grid, axis = omega.grid, omega.axis
    bits = np.zeros(grid.shape, dtype=bool)
    spacing_axis = grid.spacing[axis]
    plane_spacing = _in_plane_spacing(grid, axis)
    n_axis = grid.shape[axis]
    h = params.h
    bits_move = np.moveaxis(bits, axis, 2)  # view: in-plane first, plane axis last
    for k, mask in omega.slices:
        if not mask.any():
            continue
        bits_move[..., k] |= mask
        if h <= 0.0:
            continue
        depth = -slice_signed_distance(mask, plane_spacing)  # > 0 inside the mask
        max_offset = h * np.maximum(depth, 0.0) / spacing_axis  # in plane counts
        m_top = int(np.floor(max_offset.max()))
        for m in range(1, m_top + 1):
            band = mask & (max_offset > m)
            if not band.any():
                break
            if k + m < n_axis:
                bits_move[..., k + m] |= band
            if k - m >= 0:
                bits_move[..., k - m] |= band
    if clip_to is not None:
        if clip_to.spec != grid:
            raise ShapeError("clip volume grid does not match the stack grid")
        bits &= clip_to.bits
    return BinaryVolume(grid, bits)


def obstacle_profiles(omega_in_fat: BinaryVolume, omega_ex_fat: BinaryVolume,
                      params: PhaseFieldParams, mode: str = "indicator") -> ObstaclePair:
    """Turn fattened interior/exterior sets into pointwise bounds on u.

    indicator mode: lower = 1/2 on the interior set, upper = 1 - 1/2 on the
    exterior set (sharp half-level bounds).  exact mode: lower is the
    diffuse profile of the interior set's signed distance, upper = 1 minus
    the profile of the exterior set's.
    """
    if omega_in_fat.spec != omega_ex_fat.spec:
        raise ShapeError("fattened sets must share one grid")
    if np.any(omega_in_fat.bits & omega_ex_fat.bits):
        raise InfeasibleConstraintsError(
            "interior and exterior restrictions overlap")
    spec = omega_in_fat.spec
    if mode == "indicator":
        lower = 0.5 * omega_in_fat.bits
        upper = 1.0 - 0.5 * omega_ex_fat.bits
    elif mode == "exact":
        if omega_in_fat.bits.any():
            lower = transition_profile(signed_distance(omega_in_fat).data / params.epsilon)
        else:
            lower = np.zeros(spec.shape)
        if omega_ex_fat.bits.any():
            upper = 1.0 - transition_profile(signed_distance(omega_ex_fat).data / params.epsilon)
        else:
            upper = np.ones(spec.shape)
    else:
        raise ShapeError(f"unknown obstacle mode {mode!r}")
    return ObstaclePair(ScalarField3D(spec, lower), ScalarField3D(spec, upper))


def fill_gaps_by_duplication(stack: SliceStack) -> BinaryVolume:
    """Rough initial volume: each plane copies the mask of its nearest slice.

    Planes between the first and last slice take the nearest slice's mask
    (ties go to the lower slice); planes outside that range stay empty.
    """
    if len(stack.slices) < 2:
        raise DegenerateInputError("gap filling needs at least 2 slices")
    grid, axis = stack.grid, stack.axis
    planes = np.array(stack.planes)
    bits = np.zeros(grid.shape, dtype=bool)
    bits_move = np.moveaxis(bits, axis, 2)
    for p in range(planes[0], planes[-1] + 1):
        up = int(np.searchsorted(planes, p))  # first slice index with plane >= p
        if planes[up] == p:
            nearest = up
        elif p - planes[up - 1] <= planes[up] - p:  # tie -> lower slice
            nearest = up - 1
        else:
            nearest = up
        bits_move[..., p] = stack.slices[nearest][1]
    return BinaryVolume(grid, bits)


def assemble_constraints(stack: SliceStack, params: PhaseFieldParams,
                         mode: str = "indicator", erosion: int = 0,
                         ) -> tuple[BinaryVolume, ObstaclePair, SliceRestrictions]:
    """Full constraint pipeline: gap-filled initial set plus obstacle bounds.

    The interior slabs are clipped to the gap-filled initial volume; the
    exterior slabs are left unclipped.
    """
    e0 = fill_gaps_by_duplication(stack)
    restr = restrictions_from_slices(stack, erosion=erosion)
    omega_in_fat = fatten(restr.omega_in, params, clip_to=e0)
    omega_ex_fat = fatten(restr.omega_ex, params)
    obst = obstacle_profiles(omega_in_fat, omega_ex_fat, params, mode=mode)
    return e0, obst, restr
