"""Reversible affine warps (flip, rotation, scale, translation) in 2D/3D.

Conventions
-----------
* Coordinates are array indices (axis 0 first).  The transform center is the
  image center ``(shape - 1) / 2`` on every axis.
* A forward transform is composed in the fixed order scale -> rotation ->
  flips -> translation.  In 2D the rotation is a single angle; in 3D three
  angles are applied extrinsically about axes 0, 1, 2 in that order.  The
  in-plane convention is the one under which a +pi/2 rotation of a 3x3 image
  carries pixel (0, 0) to (0, 2).
* ``AffineMatrix.matrix`` maps output pixel coordinates to input pixel
  coordinates (the pull-back used for resampling), so warping an array with
  ``affine_from_params(p, shape)`` applies the forward transform of ``p``.
* Images are resampled with linear interpolation and a caller-supplied fill
  for coordinates outside the input domain; label maps use nearest-neighbor
  with background 0 outside.  Output shape always equals input shape.

Sampling coordinates within 1e-7 px of a lattice point are snapped onto it,
which makes flips and axis-aligned 90-degree rotations exact permutations
instead of leaking float dust through the interpolation weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Tensor

_COORD_SNAP = 1e-7
_DET_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class AffineMatrix:
    """Homogeneous (dim+1)x(dim+1) matrix mapping output coords to input coords."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if m.shape != (self.dim + 1, self.dim + 1):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        bottom = np.zeros(self.dim + 1)
        bottom[-1] = 1.0
        if not np.array_equal(m[-1], bottom):
            raise ValueError(f"last row must be {bottom}, got {m[-1]}")
        if abs(np.linalg.det(m[: self.dim, : self.dim])) <= _DET_EPS:
            raise ValueError("matrix is singular")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def _rotation_2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def _rotation_3d(angles) -> np.ndarray:
    # Extrinsic rotations about axes 0, 1, 2, applied in that order.
    ax, ay, az = angles
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, sx], [0, -sx, cx]], dtype=np.float64)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=np.float64)
    rz = np.array([[cz, sz, 0], [-sz, cz, 0], [0, 0, 1]], dtype=np.float64)
    return rz @ ry @ rx


def affine_from_params(p, shape) -> AffineMatrix:
    """Pull-back matrix realizing the forward transform of ``p`` on an image of ``shape``.

    Composition order of the forward map is scale, rotation, flips,
    translation, all about the image center.  Identity parameters produce the
    identity matrix exactly.
    """
    shape = tuple(int(n) for n in shape)
    dim = len(shape)
    if p.dim != dim:
        raise ValueError(f"params are {p.dim}D but shape {shape} is {dim}D")
    if not p.scale > 0:
        raise ValueError(f"scale must be positive, got {p.scale}")
    rot = _rotation_2d(p.rotation[0]) if dim == 2 else _rotation_3d(p.rotation)
    flip = np.diag([-1.0 if f else 1.0 for f in p.flips])
    center = (np.asarray(shape, dtype=np.float64) - 1.0) / 2.0
    shift = np.asarray(p.translation, dtype=np.float64)
    # Forward linear part A = flips @ rot * scale; pull-back is its analytic
    # inverse (1/s) R^T F, kept exact for identity/flip/lattice cases.
    inv_linear = (rot.T @ flip) / p.scale
    offset = center - inv_linear @ (center + shift)
    m = np.eye(dim + 1)
    m[:dim, :dim] = inv_linear
    m[:dim, dim] = offset
    return AffineMatrix(dim, m)


def invert(a: AffineMatrix) -> AffineMatrix:
    """Homogeneous inverse; invert(a).matrix @ a.matrix == identity to 1e-9."""
    d = a.dim
    linear = a.matrix[:d, :d]
    inv_linear = np.linalg.inv(linear)
    m = np.eye(d + 1)
    m[:d, :d] = inv_linear
    m[:d, d] = -inv_linear @ a.matrix[:d, d]
    return AffineMatrix(d, m)


def _source_coords(a: AffineMatrix, shape) -> np.ndarray:
    """Per-axis source coordinates (float64, snapped) for every output pixel."""
    d = a.dim
    grid = np.indices(shape, dtype=np.float64)
    coords = np.tensordot(a.matrix[:d, :d], grid, axes=(1, 0))
    coords += a.matrix[:d, d].reshape((d,) + (1,) * d)
    rounded = np.rint(coords)
    near = np.abs(coords - rounded) < _COORD_SNAP
    return np.where(near, rounded, coords)


def warp_image(img: Tensor, a: AffineMatrix, fill: float = 0.0) -> Tensor:
    """Resample a float32 image through ``a`` with linear interpolation.

    Output pixel v takes the bi/trilinear interpolant of the input at
    ``a.matrix @ v``; coordinates outside [0, n-1] on any axis receive
    ``fill``.
    """
    if img.dtype != np.float32:
        raise ValueError("warp_image expects a float32 image")
    if img.ndim != a.dim:
        raise ValueError(f"image is {img.ndim}D but matrix is {a.dim}D")
    shape = img.shape
    coords = _source_coords(a, shape)
    valid = np.ones(shape, dtype=bool)
    for k in range(a.dim):
        valid &= (coords[k] >= 0.0) & (coords[k] <= shape[k] - 1)

    lo = np.floor(coords).astype(np.int64)
    frac = coords - lo
    data = img.data.astype(np.float64)
    acc = np.zeros(shape, dtype=np.float64)
    # Accumulate the 2^d corner contributions of the containing cell.
    for corner in range(1 << a.dim):
        idx = []
        weight = np.ones(shape, dtype=np.float64)
        for k in range(a.dim):
            if corner >> k & 1:
                idx.append(np.clip(lo[k] + 1, 0, shape[k] - 1))
                weight = weight * frac[k]
            else:
                idx.append(np.clip(lo[k], 0, shape[k] - 1))
                weight = weight * (1.0 - frac[k])
        acc += weight * data[tuple(idx)]
    out = np.where(valid, acc, float(fill)).astype(np.float32)
    return Tensor(out, img.spacing)


def warp_labels(lab: Tensor, a: AffineMatrix) -> Tensor:
    """Resample a uint8 label map through ``a`` with nearest-neighbor lookup.

    Out-of-domain pixels become background 0, so the output value set is a
    subset of the input values plus {0}.
    """
    if lab.dtype != np.uint8:
        raise ValueError("warp_labels expects a uint8 label map")
    if lab.ndim != a.dim:
        raise ValueError(f"label map is {lab.ndim}D but matrix is {a.dim}D")
    shape = lab.shape
    coords = _source_coords(a, shape)
    nearest = np.floor(coords + 0.5).astype(np.int64)
    valid = np.ones(shape, dtype=bool)
    for k in range(a.dim):
        valid &= (nearest[k] >= 0) & (nearest[k] <= shape[k] - 1)
        nearest[k] = np.clip(nearest[k], 0, shape[k] - 1)
    out = np.where(valid, lab.data[tuple(nearest)], np.uint8(0)).astype(np.uint8)
    return Tensor(out, lab.spacing)
