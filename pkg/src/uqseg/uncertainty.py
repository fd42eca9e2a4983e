"""Pixel-wise entropy maps and structure-wise volume statistics.

Pixel uncertainty is the Shannon entropy (nats) of the label frequencies
across the Monte Carlo samples; it is zero exactly where the samples are
unanimous and bounded by ln(number of classes).  Structure uncertainty is
the volume variation coefficient: the population std of the per-sample
structure volumes divided by their mean, which makes it independent of the
structure's size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Tensor
from .errors import UndefinedVVCError
from .inference import SampleSet


@dataclass(frozen=True)
class UncertaintyReport:
    """Entropy map plus per-sample volumes and their summary statistics."""

    entropy_map: Tensor
    volumes: tuple[float, ...]
    volume_mean: float
    volume_std: float
    vvc: float

    def stats_dict(self) -> dict:
        return {
            "volumes": list(self.volumes),
            "volume_mean": self.volume_mean,
            "volume_std": self.volume_std,
            "vvc": self.vvc,
        }


def pixel_entropy(s: SampleSet) -> Tensor:
    """Entropy (nats) of the per-pixel label frequencies over the samples."""
    stack = s.stacked()
    n = len(s)
    entropy = np.zeros(stack.shape[1:], dtype=np.float64)
    for value in np.unique(stack):
        p = (stack == value).sum(axis=0) / n
        # 0 ln 0 := 0; unanimous pixels come out exactly zero
        entropy -= np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return Tensor(entropy.astype(np.float32), s.samples[0].spacing)


def structure_volumes(s: SampleSet, spacing, label: int) -> tuple[float, ...]:
    """Per-sample physical volume (mm^3, or mm^2 in 2D) of the given label."""
    unit = math.prod(float(v) for v in spacing)
    return tuple(float(np.count_nonzero(y.data == label)) * unit for y in s.samples)


def structure_stats(s: SampleSet, spacing, label: int = 1) -> UncertaintyReport:
    """Entropy map plus volume mean/std (population) and variation coefficient.

    Raises UndefinedVVCError when the structure is absent in every sample
    (the coefficient has no meaning for a zero mean volume).
    """
    volumes = structure_volumes(s, spacing, label)
    arr = np.asarray(volumes, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std())  # population
    if mean == 0.0:
        raise UndefinedVVCError(f"label {label} is absent in all {len(s)} samples")
    return UncertaintyReport(
        entropy_map=pixel_entropy(s),
        volumes=volumes,
        volume_mean=mean,
        volume_std=std,
        vvc=std / mean,
    )
