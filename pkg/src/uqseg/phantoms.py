"""Synthetic ellipse/ellipsoid phantoms with known ground truth.

Each phantom is a centered ellipse (2D) or ellipsoid (3D) pushed through a
random pose drawn from a prior, rendered as foreground/background intensities
plus Gaussian noise and z-normalized, a miniature stand-in for real
acquisitions that keeps every pipeline claim checkable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .acquisition import AugmentationPrior, TransformParams, from_latent, sample_params
from .core import DatasetManifest, ManifestCase, Tensor, save_manifest, write_npy, znormalize
from .seeding import derive_seed, make_rng

#: Elongated semi-axes (fractions of the image size) so object pose matters.
DEFAULT_SEMI_AXES_2D = (0.30, 0.12)
DEFAULT_SEMI_AXES_3D = (0.30, 0.12, 0.12)

#: Pre-normalization noise level strong enough to exercise error modes.
DEFAULT_NOISE_STD = 0.25


def rotation_only_prior(dim: int = 2, noise_std: float = 0.05) -> AugmentationPrior:
    """Uniform-rotation prior (no flips, fixed scale) for pose sampling."""
    return AugmentationPrior(
        flip_prob=(0.0,) * dim,
        rotation_range=(0.0, 2.0 * math.pi),
        scale_range=(1.0, 1.0),
        noise_mean=0.0,
        noise_std=noise_std,
    )


@dataclass(frozen=True)
class PhantomSpec:
    dim: int = 2
    size: int = 64
    semi_axes: tuple[float, ...] = DEFAULT_SEMI_AXES_2D  # fractions of size
    fg_intensity: float = 1.0
    bg_intensity: float = 0.0
    noise_std: float = DEFAULT_NOISE_STD
    pose_prior: AugmentationPrior = field(default_factory=lambda: rotation_only_prior(2, 0.0))

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.size < 16:
            raise ValueError(f"size must be >= 16, got {self.size}")
        if len(self.semi_axes) != self.dim:
            raise ValueError(f"expected {self.dim} semi-axes, got {len(self.semi_axes)}")
        if not all(0.0 < a < 0.5 for a in self.semi_axes):
            raise ValueError(f"semi-axes must be fractions in (0, 0.5), got {self.semi_axes}")
        if self.pose_prior.dim != self.dim:
            raise ValueError("pose prior dimensionality does not match the phantom")


def _rasterize_ellipse(shape, semi_axes_px) -> np.ndarray:
    grid = np.indices(shape, dtype=np.float64)
    center = (np.asarray(shape, dtype=np.float64) - 1.0) / 2.0
    q = np.zeros(shape, dtype=np.float64)
    for k, a in enumerate(semi_axes_px):
        q += ((grid[k] - center[k]) / a) ** 2
    return (q <= 1.0).astype(np.uint8)


def make_phantom(spec: PhantomSpec, seed: int) -> tuple[Tensor, Tensor, TransformParams]:
    """One (image, ground truth, pose) triple, deterministic per seed."""
    shape = (spec.size,) * spec.dim
    canonical = Tensor(_rasterize_ellipse(shape, [a * spec.size for a in spec.semi_axes]))
    pose = sample_params(spec.pose_prior, make_rng(derive_seed(seed, 0, "pose")))
    gt = from_latent(canonical, pose)
    levels = np.where(gt.data > 0, np.float32(spec.fg_intensity), np.float32(spec.bg_intensity))
    noise = make_rng(derive_seed(seed, 0, "texture")).normal(0.0, spec.noise_std, size=shape)
    image = znormalize(Tensor((levels + noise).astype(np.float32)))
    return image, gt, pose


def make_dataset(spec: PhantomSpec, n: int, out_dir, seed: int) -> DatasetManifest:
    """Write n phantom cases (image/label NPY pairs) plus manifest.json."""
    os.makedirs(out_dir, exist_ok=True)
    cases = []
    for k in range(n):
        image, gt, _ = make_phantom(spec, derive_seed(seed, k, "case"))
        case_id = f"case{k:03d}"
        image_rel = f"{case_id}_image.npy"
        label_rel = f"{case_id}_label.npy"
        write_npy(image, os.path.join(out_dir, image_rel))
        write_npy(gt, os.path.join(out_dir, label_rel))
        cases.append(ManifestCase(id=case_id, image_path=image_rel, label_path=label_rel))
    manifest = DatasetManifest(cases=cases, root=str(out_dir))
    save_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest
