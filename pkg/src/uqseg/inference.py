"""Monte Carlo inference engines and aggregation rules.

Four ways to predict:

* ``run_baseline``: one plain forward pass.
* ``run_tta``: N passes over resampled inputs; draw transform and noise,
  map the input to its underlying frame, predict there with a fixed seed,
  map the labels back.  Captures input-induced variability.
* ``run_ttd``: N stochastic passes on the untransformed input with
  derived predictor seeds.  Captures model-induced variability.
* ``run_ttad``: both at once, a fresh transform and a fresh predictor seed
  per sample.

Sample n of a run is a pure function of (master_seed, n), so results are
bit-identical no matter the execution order or degree of parallelism.
Aggregate with per-pixel majority vote (labels) or the elementwise mean
(probability/regression maps).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .acquisition import AugmentationPrior, TransformParams, from_latent, sample_params, to_latent
from .core import Tensor
from .errors import ConfigurationError, InferenceError
from .predictors import PredictorSpec, as_labels, predict
from .seeding import derive_seed, make_rng

#: Monte Carlo run counts where accuracy plateaus at desk scale.
DEFAULT_SAMPLES_2D = 20
DEFAULT_SAMPLES_3D = 40


@dataclass(frozen=True)
class SampleRecord:
    """Provenance of one sample: its transform draw (None for TTD/baseline)
    and the predictor seed used."""

    params: TransformParams | None
    predictor_seed: int


@dataclass(frozen=True, eq=False)
class SampleSet:
    """The N label predictions of one Monte Carlo run plus per-sample provenance."""

    mode: str  # baseline | tta | ttd | ttad
    samples: tuple[Tensor, ...]
    records: tuple[SampleRecord, ...]
    master_seed: int

    def __post_init__(self):
        if self.mode not in ("baseline", "tta", "ttd", "ttad"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.samples) < 1:
            raise ValueError("a SampleSet needs at least one sample")
        if len(self.records) != len(self.samples):
            raise ValueError("records and samples must have equal length")
        shape = self.samples[0].shape
        for s in self.samples:
            if s.shape != shape:
                raise ValueError("all samples must share one shape")
            if s.dtype != np.uint8:
                raise ValueError("samples must be uint8 label maps")
        if self.mode == "baseline" and len(self.samples) != 1:
            raise ValueError("baseline runs hold exactly one sample")

    def __len__(self) -> int:
        return len(self.samples)

    def stacked(self) -> np.ndarray:
        """(N, *spatial) uint8 view of all samples."""
        return np.stack([s.data for s in self.samples])


def _collect(worker, n_samples: int, max_workers: int) -> list:
    """Evaluate worker(0..N-1), optionally in threads, merged by index."""

    def guarded(n):
        try:
            return worker(n)
        except Exception as exc:
            raise InferenceError(f"sample {n} failed: {exc}") from exc

    if max_workers <= 1:
        return [guarded(n) for n in range(n_samples)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(guarded, range(n_samples)))


def _effective_workers(spec: PredictorSpec, max_workers: int) -> int:
    # External processes are serialized unless the spec declares them stateless.
    if spec.kind == "external" and not spec.stateless:
        return 1
    return max_workers


def run_baseline(spec: PredictorSpec, x: Tensor) -> SampleSet:
    """Single prediction with seed 0 and no transform."""
    y = as_labels(spec, predict(spec, x, seed=0))
    record = SampleRecord(params=None, predictor_seed=0)
    return SampleSet(mode="baseline", samples=(y,), records=(record,), master_seed=0)


def run_tta(
    spec: PredictorSpec,
    x: Tensor,
    prior: AugmentationPrior,
    n_samples: int,
    master_seed: int,
    max_workers: int = 1,
) -> SampleSet:
    """Test-time augmentation: resample the input N times, predict with a
    fixed predictor seed, map each prediction back to the observed frame."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")

    def worker(n):
        params = sample_params(prior, make_rng(derive_seed(master_seed, n, "params")))
        latent = to_latent(x, params, prior)
        y = as_labels(spec, predict(spec, latent, seed=0))
        return from_latent(y, params), SampleRecord(params=params, predictor_seed=0)

    results = _collect(worker, n_samples, _effective_workers(spec, max_workers))
    samples, records = zip(*results)
    return SampleSet(mode="tta", samples=samples, records=records, master_seed=master_seed)


def run_ttd(
    spec: PredictorSpec,
    x: Tensor,
    n_samples: int,
    master_seed: int,
    max_workers: int = 1,
) -> SampleSet:
    """Test-time stochastic passes: N predictions on the untransformed input."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not spec.stochastic and n_samples > 1:
        raise ConfigurationError(
            "ttd with a deterministic predictor would produce N identical samples"
        )

    def worker(n):
        seed = derive_seed(master_seed, n, "pred")
        y = as_labels(spec, predict(spec, x, seed=seed))
        return y, SampleRecord(params=None, predictor_seed=seed)

    results = _collect(worker, n_samples, _effective_workers(spec, max_workers))
    samples, records = zip(*results)
    return SampleSet(mode="ttd", samples=samples, records=records, master_seed=master_seed)


def run_ttad(
    spec: PredictorSpec,
    x: Tensor,
    prior: AugmentationPrior,
    n_samples: int,
    master_seed: int,
    max_workers: int = 1,
) -> SampleSet:
    """Combined run: fresh transform draw and fresh predictor seed per sample."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not spec.stochastic and n_samples > 1:
        raise ConfigurationError(
            "ttad with a deterministic predictor would reduce to tta; use tta"
        )

    def worker(n):
        params = sample_params(prior, make_rng(derive_seed(master_seed, n, "params")))
        seed = derive_seed(master_seed, n, "pred")
        latent = to_latent(x, params, prior)
        y = as_labels(spec, predict(spec, latent, seed=seed))
        return from_latent(y, params), SampleRecord(params=params, predictor_seed=seed)

    results = _collect(worker, n_samples, _effective_workers(spec, max_workers))
    samples, records = zip(*results)
    return SampleSet(mode="ttad", samples=samples, records=records, master_seed=master_seed)


def run_method(
    method: str,
    spec: PredictorSpec,
    x: Tensor,
    prior: AugmentationPrior | None = None,
    n_samples: int = 1,
    master_seed: int = 0,
    max_workers: int = 1,
) -> SampleSet:
    """Dispatch on the method name (baseline | tta | ttd | ttad)."""
    if method == "baseline":
        return run_baseline(spec, x)
    if method == "tta":
        if prior is None:
            raise ConfigurationError("tta requires a prior")
        return run_tta(spec, x, prior, n_samples, master_seed, max_workers)
    if method == "ttd":
        return run_ttd(spec, x, n_samples, master_seed, max_workers)
    if method == "ttad":
        if prior is None:
            raise ConfigurationError("ttad requires a prior")
        return run_ttad(spec, x, prior, n_samples, master_seed, max_workers)
    raise ConfigurationError(f"unknown method {method!r}")


def aggregate_mode(s: SampleSet) -> Tensor:
    """Per-pixel most frequent label; ties go to the smallest label value."""
    stack = s.stacked()
    values = np.unique(stack)
    counts = np.stack([(stack == v).sum(axis=0) for v in values])
    # argmax returns the first maximum; values are ascending, so ties pick the
    # smallest label.
    winner = values[np.argmax(counts, axis=0)]
    return Tensor(winner.astype(np.uint8), s.samples[0].spacing)


def aggregate_mean(maps: list[Tensor]) -> Tensor:
    """Elementwise arithmetic mean of float32 maps of identical shape."""
    if not maps:
        raise ValueError("aggregate_mean needs at least one map")
    shape = maps[0].shape
    for m in maps:
        if m.shape != shape:
            raise ValueError(f"shape mismatch: {m.shape} != {shape}")
        if m.dtype != np.float32:
            raise ValueError("aggregate_mean expects float32 maps")
    acc = np.zeros(shape, dtype=np.float64)
    for m in maps:
        acc += m.data
    return Tensor((acc / len(maps)).astype(np.float32), maps[0].spacing)
