"""Uniform interface over segmentation predictors.

Three analytic built-ins make the whole pipeline testable without any
trained model:

* ``threshold(tau)``: label 1 where the image exceeds ``tau``.
* ``biased(tau, hw)``: thresholding clipped to an axis-aligned centered
  box with half-widths ``hw`` (in pixels).  Emulates a model that is only
  accurate near one canonical object pose.
* ``stochastic(tau, sigma)``: thresholding at ``tau + g`` with one Gaussian
  offset ``g`` drawn per call from the seed.  Emulates stochastic forward
  passes of a model with parameter uncertainty.

External predictors run as subprocesses over a file handoff: the command
template receives a float32 NPY input path, an output path and a seed, and
must write labels (uint8, same spatial shape) or class probabilities
(float32, leading class axis) as NPY.  ``predict`` is a pure function of
(spec, image, seed): deterministic predictors ignore the seed, stochastic
ones must depend only on the input and the seed.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .core import Tensor, read_npy, write_npy
from .errors import (
    ConfigurationError,
    PredictorExitError,
    PredictorOutputError,
    PredictorTimeoutError,
)
from .seeding import make_rng

_PLACEHOLDERS = ("{input}", "{output}", "{seed}")

DEFAULT_TIMEOUT = 300.0


@dataclass(frozen=True)
class PredictorSpec:
    """Description of a predictor: which one, its parameters, and its contract."""

    kind: str  # builtin_threshold | builtin_biased | builtin_stochastic | external
    params: dict = field(default_factory=dict)
    stochastic: bool = False
    output_kind: str = "labels"  # labels | probabilities
    class_count: int = 2
    timeout: float = DEFAULT_TIMEOUT
    stateless: bool = False  # external only: safe to run concurrent processes

    def __post_init__(self):
        if self.kind not in ("builtin_threshold", "builtin_biased", "builtin_stochastic", "external"):
            raise ConfigurationError(f"unknown predictor kind {self.kind!r}")
        if self.output_kind not in ("labels", "probabilities"):
            raise ConfigurationError(f"unknown output kind {self.output_kind!r}")
        if self.class_count < 2 or self.class_count > 255:
            raise ConfigurationError(f"class_count must be in [2, 255], got {self.class_count}")
        if self.kind in ("builtin_threshold", "builtin_biased") and self.stochastic:
            raise ConfigurationError(f"{self.kind} is deterministic; stochastic=True is inconsistent")
        if self.kind == "external":
            template = self.params.get("command", "")
            for ph in _PLACEHOLDERS:
                if ph not in template:
                    raise ConfigurationError(f"external command template is missing {ph}")


def parse_predictor(text: str) -> PredictorSpec:
    """Parse a predictor spec string.

    Grammar: ``builtin:threshold:TAU``, ``builtin:biased:TAU:HW0,HW1[,HW2]``,
    ``builtin:stochastic:TAU:SIGMA``, ``extern:COMMAND_TEMPLATE``.
    """
    if text.startswith("extern:"):
        return PredictorSpec(kind="external", params={"command": text[len("extern:"):]})
    parts = text.split(":")
    if parts[0] != "builtin" or len(parts) < 3:
        raise ConfigurationError(f"cannot parse predictor spec {text!r}")
    name = parts[1]
    try:
        if name == "threshold" and len(parts) == 3:
            return PredictorSpec(kind="builtin_threshold", params={"tau": float(parts[2])})
        if name == "biased" and len(parts) == 4:
            hw = tuple(float(v) for v in parts[3].split(","))
            return PredictorSpec(kind="builtin_biased", params={"tau": float(parts[2]), "halfwidths": hw})
        if name == "stochastic" and len(parts) == 4:
            return PredictorSpec(
                kind="builtin_stochastic",
                params={"tau": float(parts[2]), "tau_std": float(parts[3])},
                stochastic=True,
            )
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse predictor spec {text!r}: {exc}") from exc
    raise ConfigurationError(f"cannot parse predictor spec {text!r}")


def format_predictor(spec: PredictorSpec) -> str:
    """Inverse of parse_predictor, used to echo provenance."""
    p = spec.params
    if spec.kind == "builtin_threshold":
        return f"builtin:threshold:{p['tau']}"
    if spec.kind == "builtin_biased":
        hw = ",".join(str(v) for v in p["halfwidths"])
        return f"builtin:biased:{p['tau']}:{hw}"
    if spec.kind == "builtin_stochastic":
        return f"builtin:stochastic:{p['tau']}:{p['tau_std']}"
    return f"extern:{p['command']}"


# ---------------------------------------------------------------------------
# Built-in predictors
# ---------------------------------------------------------------------------


def _predict_threshold(spec: PredictorSpec, x: Tensor) -> Tensor:
    mask = x.data > spec.params["tau"]
    return Tensor(mask.astype(np.uint8), x.spacing)


def _center_box(shape, halfwidths) -> np.ndarray:
    if len(halfwidths) != len(shape):
        raise ValueError(f"expected {len(shape)} half-widths, got {len(halfwidths)}")
    grid = np.indices(shape)
    center = (np.asarray(shape, dtype=np.float64) - 1.0) / 2.0
    inside = np.ones(shape, dtype=bool)
    for k, hw in enumerate(halfwidths):
        inside &= np.abs(grid[k] - center[k]) <= hw
    return inside


def _predict_biased(spec: PredictorSpec, x: Tensor) -> Tensor:
    mask = (x.data > spec.params["tau"]) & _center_box(x.shape, spec.params["halfwidths"])
    return Tensor(mask.astype(np.uint8), x.spacing)


def _predict_stochastic(spec: PredictorSpec, x: Tensor, seed: int) -> Tensor:
    offset = float(make_rng(seed).normal(0.0, spec.params["tau_std"]))
    mask = x.data > spec.params["tau"] + offset
    return Tensor(mask.astype(np.uint8), x.spacing)


# ---------------------------------------------------------------------------
# External subprocess predictors
# ---------------------------------------------------------------------------


def _predict_external(spec: PredictorSpec, x: Tensor, seed: int) -> Tensor:
    tmp_root = os.environ.get("UQSEG_TMPDIR") or None
    workdir = tempfile.mkdtemp(prefix="uqseg_", dir=tmp_root)
    in_path = os.path.join(workdir, "input.npy")
    out_path = os.path.join(workdir, "output.npy")
    try:
        write_npy(x, in_path)
        cmd = [
            token.replace("{input}", in_path).replace("{output}", out_path).replace("{seed}", str(seed))
            for token in shlex.split(spec.params["command"])
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=spec.timeout)
        except subprocess.TimeoutExpired:
            raise PredictorTimeoutError(cmd, spec.timeout) from None
        if proc.returncode != 0:
            raise PredictorExitError(cmd, proc.returncode, proc.stderr)
        if not os.path.exists(out_path):
            raise PredictorOutputError(out_path, f"file was not written; stderr: {proc.stderr.strip()!r}")
        try:
            out = read_npy(out_path)
        except Exception as exc:
            raise PredictorOutputError(out_path, str(exc)) from exc
        _check_output(spec, x, out, out_path)
        return Tensor(out.data, x.spacing if out.ndim == x.ndim else ())
    finally:
        for path in (in_path, out_path):
            if os.path.exists(path):
                os.unlink(path)
        os.rmdir(workdir)


def _check_output(spec: PredictorSpec, x: Tensor, out: Tensor, path: str) -> None:
    if spec.output_kind == "labels":
        if out.dtype != np.uint8:
            raise PredictorOutputError(path, f"expected uint8 labels, got {out.dtype}")
        if out.shape != x.shape:
            raise PredictorOutputError(path, f"label shape {out.shape} != input shape {x.shape}")
        if int(out.data.max()) >= spec.class_count:
            raise PredictorOutputError(path, f"label values exceed class count {spec.class_count}")
    else:
        if x.ndim != 2:
            raise PredictorOutputError(path, "probability outputs are supported for 2D inputs only")
        if out.dtype != np.float32:
            raise PredictorOutputError(path, f"expected float32 probabilities, got {out.dtype}")
        expected = (spec.class_count,) + x.shape
        if out.shape != expected:
            raise PredictorOutputError(path, f"probability shape {out.shape} != {expected}")
        sums = out.data.sum(axis=0)
        if np.abs(sums - 1.0).max() > 1e-4:
            raise PredictorOutputError(path, "per-pixel probabilities do not sum to 1 within 1e-4")


def predict(spec: PredictorSpec, x: Tensor, seed: int = 0) -> Tensor:
    """Run one forward pass; pure function of (spec, x, seed)."""
    if x.dtype != np.float32:
        raise ValueError("predict expects a float32 image")
    if not np.isfinite(x.data).all():
        raise ValueError("input image contains non-finite values")
    if spec.kind == "builtin_threshold":
        return _predict_threshold(spec, x)
    if spec.kind == "builtin_biased":
        return _predict_biased(spec, x)
    if spec.kind == "builtin_stochastic":
        return _predict_stochastic(spec, x, seed)
    return _predict_external(spec, x, seed)


def as_labels(spec: PredictorSpec, y: Tensor) -> Tensor:
    """Reduce a prediction to hard labels (argmax over the class axis if needed)."""
    if spec.output_kind == "labels":
        return y
    return Tensor(np.argmax(y.data, axis=0).astype(np.uint8))
