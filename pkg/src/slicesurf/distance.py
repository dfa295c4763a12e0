"""Exact signed Euclidean distance transforms in 2D (slice planes) and 3D.

Sign convention: negative strictly inside the set, positive strictly
outside.  On a voxel grid the inside and outside unsigned transforms both
vanish at the interface voxels, which would leave a one-voxel dead zone in
the difference; half a spacing is therefore subtracted from each unsigned
transform (floored at zero) before differencing, placing the zero level on
the voxel interface:

    d = max(d_out - s/2, 0) - max(d_in - s/2, 0)

with d_out the distance to the set, d_in the distance to its complement
and s the voxel spacing.  Distance transforms do not wrap around the
periodic domain; objects are assumed interior.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import AllFarError
from .grid import BinaryVolume, ScalarField3D

# sentinel depth for a mask with an empty complement (no boundary anywhere)
_FULL_DEPTH = np.sqrt(3.0)


def edt_unsigned(mask: np.ndarray | BinaryVolume, spacing: float | tuple = 1.0) -> np.ndarray:
    """Exact Euclidean distance from every voxel to the nearest set voxel centre.

    Zero on set voxels.  `spacing` scales index units to physical units
    (scalar or per-axis tuple).  Raises AllFarError for an empty mask;
    a full mask yields all zeros.
    """
    bits = mask.bits if isinstance(mask, BinaryVolume) else np.asarray(mask, dtype=bool)
    if not bits.any():
        raise AllFarError("distance transform of an empty set")
    if bits.all():
        return np.zeros(bits.shape)
    sampling = spacing if np.ndim(spacing) else [float(spacing)] * bits.ndim
    return ndimage.distance_transform_edt(~bits, sampling=sampling)


def _signed_from_bits(bits: np.ndarray, sampling) -> np.ndarray:
    """Signed distance with the half-spacing interface offset."""
    if not bits.any():
        raise AllFarError("signed distance of an empty set")
    half = 0.5 * float(np.min(sampling))
    if bits.all():
        return np.full(bits.shape, -_FULL_DEPTH)
    d_out = ndimage.distance_transform_edt(~bits, sampling=sampling)
    d_in = ndimage.distance_transform_edt(bits, sampling=sampling)
    return np.maximum(d_out - half, 0.0) - np.maximum(d_in - half, 0.0)


def signed_distance(vol: BinaryVolume) -> ScalarField3D:
    """3D signed distance field of a voxel set, negative inside."""
    return ScalarField3D(vol.spec, _signed_from_bits(vol.bits, vol.spec.spacing))


def slice_signed_distance(plane_mask: np.ndarray, spacing: float | tuple) -> np.ndarray:
    """In-plane signed distance of a 2D subset of one slice plane.

    Distance to the subset minus distance to its in-plane complement,
    offset as in the 3D case; negative on the subset.
    """
    bits = np.asarray(plane_mask, dtype=bool)
    if bits.ndim != 2:
        raise ValueError("plane mask must be 2D")
    sampling = spacing if np.ndim(spacing) else [float(spacing)] * 2
    return _signed_from_bits(bits, sampling)
