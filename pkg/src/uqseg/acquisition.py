"""Priors over spatial transforms and noise, and the two directions of the
image formation model.

An observed image is modeled as a transformed underlying image plus additive
Gaussian noise.  Inference inverts that: subtract a sampled noise field, then
apply the inverse spatial transform to recover one plausible underlying image
(``to_latent``); a prediction made there is carried back to the observed
frame by the forward transform (``from_latent``, labels only, noise never
touches the label path).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Tensor
from .seeding import make_rng
from .transforms import affine_from_params, invert, warp_image, warp_labels


@dataclass(frozen=True)
class TransformParams:
    """One concrete draw: per-axis flips, rotation angle(s), scale,
    per-axis translation in pixels, and the seed of its noise field."""

    dim: int
    flips: tuple[bool, ...]
    rotation: tuple[float, ...]  # 1 angle in 2D, 3 in 3D
    scale: float
    translation: tuple[float, ...]
    noise_seed: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.flips) != self.dim or len(self.translation) != self.dim:
            raise ValueError("flips and translation must have one entry per axis")
        if len(self.rotation) != (1 if self.dim == 2 else 3):
            raise ValueError(f"expected {1 if self.dim == 2 else 3} rotation angles")
        if not all(math.isfinite(r) for r in self.rotation):
            raise ValueError("rotation angles must be finite")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def identity(cls, dim: int, noise_seed: int = 0) -> "TransformParams":
        angles = 1 if dim == 2 else 3
        return cls(
            dim=dim,
            flips=(False,) * dim,
            rotation=(0.0,) * angles,
            scale=1.0,
            translation=(0.0,) * dim,
            noise_seed=noise_seed,
        )


@dataclass(frozen=True)
class AugmentationPrior:
    """Distribution parameters for the transform and noise draws.

    Flips are Bernoulli per axis, rotation/scale/translation uniform over
    their ranges (in 3D the rotation range applies independently to each of
    the three angles), noise is an i.i.d. Gaussian field.
    """

    flip_prob: tuple[float, ...]
    rotation_range: tuple[float, float]
    scale_range: tuple[float, float]
    translation_range: tuple[tuple[float, float], ...] = ()
    noise_mean: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if len(self.flip_prob) not in (2, 3):
            raise ValueError("flip_prob must have 2 or 3 entries (one per axis)")
        if not all(0.0 <= p <= 1.0 for p in self.flip_prob):
            raise ValueError(f"flip probabilities must be in [0, 1], got {self.flip_prob}")
        r0, r1 = self.rotation_range
        if r0 > r1:
            raise ValueError(f"rotation_range must satisfy r0 <= r1, got {self.rotation_range}")
        s0, s1 = self.scale_range
        if not (0.0 < s0 <= s1):
            raise ValueError(f"scale_range must satisfy 0 < s0 <= s1, got {self.scale_range}")
        trans = self.translation_range or ((0.0, 0.0),) * len(self.flip_prob)
        trans = tuple((float(lo), float(hi)) for lo, hi in trans)
        if len(trans) != len(self.flip_prob):
            raise ValueError("translation_range must have one (lo, hi) pair per axis")
        if any(lo > hi for lo, hi in trans):
            raise ValueError(f"translation ranges must satisfy lo <= hi, got {trans}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be nonnegative, got {self.noise_std}")
        object.__setattr__(self, "flip_prob", tuple(float(p) for p in self.flip_prob))
        object.__setattr__(self, "rotation_range", (float(r0), float(r1)))
        object.__setattr__(self, "scale_range", (float(s0), float(s1)))
        object.__setattr__(self, "translation_range", trans)

    @property
    def dim(self) -> int:
        return len(self.flip_prob)

    @classmethod
    def default(cls, dim: int = 2) -> "AugmentationPrior":
        """Full-coverage prior: flips 0.5, rotation U(0, 2pi), scale U(0.8, 1.2),
        no translation, noise N(0, 0.05)."""
        return cls(
            flip_prob=(0.5,) * dim,
            rotation_range=(0.0, 2.0 * math.pi),
            scale_range=(0.8, 1.2),
            noise_mean=0.0,
            noise_std=0.05,
        )

    @classmethod
    def degenerate(cls, dim: int = 2) -> "AugmentationPrior":
        """Point mass at the identity with zero noise."""
        return cls(
            flip_prob=(0.0,) * dim,
            rotation_range=(0.0, 0.0),
            scale_range=(1.0, 1.0),
            noise_mean=0.0,
            noise_std=0.0,
        )

    def to_dict(self) -> dict:
        return {
            "flip_prob": list(self.flip_prob),
            "rotation_range": list(self.rotation_range),
            "scale_range": list(self.scale_range),
            "translation_range": [list(r) for r in self.translation_range],
            "noise_mean": self.noise_mean,
            "noise_std": self.noise_std,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AugmentationPrior":
        return cls(
            flip_prob=tuple(doc["flip_prob"]),
            rotation_range=tuple(doc["rotation_range"]),
            scale_range=tuple(doc["scale_range"]),
            translation_range=tuple(tuple(r) for r in doc.get("translation_range", ())),
            noise_mean=float(doc.get("noise_mean", 0.0)),
            noise_std=float(doc.get("noise_std", 0.0)),
        )


def load_prior(path) -> AugmentationPrior:
    with open(path) as fh:
        return AugmentationPrior.from_dict(json.load(fh))


def sample_params(prior: AugmentationPrior, rng: np.random.Generator) -> TransformParams:
    """Draw one transform from the prior; deterministic given the rng state.

    Draw order is fixed (flips, rotation, scale, translation, noise seed) so
    a given generator state always yields the same parameters.
    """
    dim = prior.dim
    flips = tuple(bool(rng.random() < p) for p in prior.flip_prob)
    n_angles = 1 if dim == 2 else 3
    rotation = tuple(float(rng.uniform(*prior.rotation_range)) for _ in range(n_angles))
    scale = float(rng.uniform(*prior.scale_range))
    translation = tuple(float(rng.uniform(lo, hi)) for lo, hi in prior.translation_range)
    noise_seed = int(rng.integers(0, 2**63))
    return TransformParams(
        dim=dim,
        flips=flips,
        rotation=rotation,
        scale=scale,
        translation=translation,
        noise_seed=noise_seed,
    )


def sample_noise(prior: AugmentationPrior, shape, seed: int) -> Tensor:
    """I.i.d. Gaussian field N(noise_mean, noise_std), fully determined by seed."""
    rng = make_rng(seed)
    field = rng.normal(prior.noise_mean, prior.noise_std, size=tuple(shape))
    return Tensor(field.astype(np.float32))


def to_latent(x: Tensor, p: TransformParams, prior: AugmentationPrior) -> Tensor:
    """Observed image -> one plausible underlying image.

    Subtracts the noise field of ``p.noise_seed`` and applies the inverse
    spatial transform.
    """
    noise = sample_noise(prior, x.shape, p.noise_seed)
    denoised = Tensor(x.data - noise.data, x.spacing)
    return warp_image(denoised, invert(affine_from_params(p, x.shape)))


def from_latent(y0: Tensor, p: TransformParams) -> Tensor:
    """Prediction in the underlying frame -> observed frame (labels, noise-free)."""
    return warp_labels(y0, affine_from_params(p, y0.shape))
