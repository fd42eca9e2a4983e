"""Segmentation accuracy (Dice, average symmetric surface distance) and
uncertainty-vs-error analyses (joint histograms, per-method summaries)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Tensor
from .errors import UndefinedSurfaceError


def _arr(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x)


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    method: str  # baseline | tta | ttd | ttad
    n_samples: int
    dice: float
    assd: float
    vvc: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.dice <= 1.0:
            raise ValueError(f"dice must be in [0, 1], got {self.dice}")
        if self.assd < 0.0:
            raise ValueError(f"assd must be nonnegative, got {self.assd}")


def dice(pred, gt, label: int = 1) -> float:
    """Overlap score 2|P & G| / (|P| + |G|) for one label.

    When the label is absent from both masks the score is 1.0 (perfect
    agreement on "nothing there").
    """
    p = _arr(pred) == label
    g = _arr(gt) == label
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    denom = int(np.count_nonzero(p)) + int(np.count_nonzero(g))
    if denom == 0:
        return 1.0
    return 2 * int(np.count_nonzero(p & g)) / denom


def surface_points(mask) -> np.ndarray:
    """Coordinates of foreground voxels with a face-adjacent background or
    out-of-image neighbor (4-neighborhood in 2D, 6 in 3D)."""
    m = _arr(mask).astype(bool)
    interior = np.ones_like(m)
    for axis in range(m.ndim):
        padded = np.pad(m, [(1, 1) if k == axis else (0, 0) for k in range(m.ndim)])
        lo = [slice(None)] * m.ndim
        hi = [slice(None)] * m.ndim
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        interior &= padded[tuple(lo)] & padded[tuple(hi)]
    return np.argwhere(m & ~interior)


def assd(pred, gt, spacing=None) -> float:
    """Average symmetric surface distance in mm.

    Surface point sets S (prediction) and G (ground truth) contribute
    (sum_s d(s, G) + sum_g d(g, S)) / (|S| + |G|), with d the Euclidean
    distance between spacing-scaled voxel centers.
    """
    p = _arr(pred)
    g = _arr(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    if spacing is None:
        spacing = pred.spacing if isinstance(pred, Tensor) else (1.0,) * p.ndim
    sp = np.asarray([float(v) for v in spacing], dtype=np.float64)
    s_pts = surface_points(p).astype(np.float64) * sp
    g_pts = surface_points(g).astype(np.float64) * sp
    if len(s_pts) == 0 or len(g_pts) == 0:
        raise UndefinedSurfaceError("a mask has no surface points; ASSD is undefined")
    d_sg = _nearest_distances(s_pts, g_pts)
    d_gs = _nearest_distances(g_pts, s_pts)
    # fsum keeps the reduction exact, so the result does not depend on
    # accumulation order.
    return (math.fsum(d_sg) + math.fsum(d_gs)) / (len(s_pts) + len(g_pts))


def _nearest_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """min_j ||a_i - b_j|| for every row of a, chunked to bound memory."""
    out = np.empty(len(a), dtype=np.float64)
    step = 2048
    for start in range(0, len(a), step):
        block = a[start : start + step]
        diff = block[:, None, :] - b[None, :, :]
        sq = diff * diff
        d2 = sq[..., 0]
        for axis in range(1, a.shape[1]):
            d2 = d2 + sq[..., axis]
        out[start : start + step] = np.sqrt(d2).min(axis=1)
    return out


@dataclass(frozen=True)
class JointHistogram:
    """Pixels binned by uncertainty and split by correctness.

    ``counts`` is B x 2 (correct, incorrect); ``normalized`` divides by the
    total pixel count; ``mean_error_curve`` is the per-bin error rate with
    NaN marking empty bins (see ``occupied``).
    """

    bin_edges: np.ndarray  # length B+1, spanning [0, ln M]
    counts: np.ndarray  # (B, 2) int64
    normalized: np.ndarray  # (B, 2) float64
    mean_error_curve: np.ndarray  # (B,) float64, NaN where empty
    occupied: np.ndarray  # (B,) bool

    @property
    def bin_centers(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2.0


def joint_histogram(entropy, pred, gt, n_bins: int = 20, n_classes: int | None = None) -> JointHistogram:
    """Joint histogram of pixel uncertainty and prediction error.

    Pixels are binned by entropy into ``n_bins`` equal-width bins over
    [0, ln M] (last bin right-closed); each bin counts correct and incorrect
    pixels, where a pixel is incorrect when pred != gt.  ``n_classes``
    defaults to the labels present (at least 2).
    """
    h = _arr(entropy).astype(np.float64)
    p = _arr(pred)
    g = _arr(gt)
    if not (h.shape == p.shape == g.shape):
        raise ValueError(f"shape mismatch: {h.shape}, {p.shape}, {g.shape}")
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    if n_classes is None:
        n_classes = max(2, int(max(p.max(), g.max())) + 1)
    top = math.log(n_classes)
    edges = np.linspace(0.0, top, n_bins + 1)
    width = top / n_bins
    idx = np.minimum((h / width).astype(np.int64), n_bins - 1)
    wrong = (p != g).ravel()
    idx = idx.ravel()
    counts = np.zeros((n_bins, 2), dtype=np.int64)
    np.add.at(counts[:, 0], idx[~wrong], 1)
    np.add.at(counts[:, 1], idx[wrong], 1)
    total = counts.sum()
    per_bin = counts.sum(axis=1)
    occupied = per_bin > 0
    curve = np.full(n_bins, np.nan)
    curve[occupied] = counts[occupied, 1] / per_bin[occupied]
    return JointHistogram(
        bin_edges=edges,
        counts=counts,
        normalized=counts / total,
        mean_error_curve=curve,
        occupied=occupied,
    )


def merge_histograms(histograms: list[JointHistogram]) -> JointHistogram:
    """Pool counts of histograms that share bin edges (e.g. across cases)."""
    if not histograms:
        raise ValueError("nothing to merge")
    edges = histograms[0].bin_edges
    for h in histograms[1:]:
        if not np.allclose(h.bin_edges, edges):
            raise ValueError("histograms have different bin edges")
    counts = np.sum([h.counts for h in histograms], axis=0)
    per_bin = counts.sum(axis=1)
    occupied = per_bin > 0
    curve = np.full(len(per_bin), np.nan)
    curve[occupied] = counts[occupied, 1] / per_bin[occupied]
    return JointHistogram(
        bin_edges=edges,
        counts=counts,
        normalized=counts / counts.sum(),
        mean_error_curve=curve,
        occupied=occupied,
    )


def histogram_rows(h: JointHistogram) -> list[list]:
    """CSV rows: bin_lo, bin_hi, frac_correct, frac_incorrect, mean_error."""
    rows = []
    for k in range(len(h.counts)):
        rows.append(
            [
                float(h.bin_edges[k]),
                float(h.bin_edges[k + 1]),
                float(h.normalized[k, 0]),
                float(h.normalized[k, 1]),
                float(h.mean_error_curve[k]),
            ]
        )
    return rows


def aggregate_cases(results: list[CaseResult]) -> list[list]:
    """Per-method mean and population std of Dice and ASSD.

    Rows are [method, n, dice_mean, dice_std, assd_mean, assd_std] with n the
    number of cases aggregated, ordered baseline, tta, ttd, ttad, then any
    other method name alphabetically.
    """
    if not results:
        raise ValueError("no case results to aggregate")
    known = ["baseline", "tta", "ttd", "ttad"]
    methods = sorted({r.method for r in results}, key=lambda m: (known.index(m) if m in known else len(known), m))
    rows = []
    for method in methods:
        group = [r for r in results if r.method == method]
        dices = np.asarray([r.dice for r in group], dtype=np.float64)
        assds = np.asarray([r.assd for r in group], dtype=np.float64)
        rows.append(
            [
                method,
                len(group),
                float(dices.mean()),
                float(dices.std()),
                float(assds.mean()),
                float(assds.std()),
            ]
        )
    return rows
