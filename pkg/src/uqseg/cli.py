"""Command-line surface: dataset synthesis, train-time augmentation export,
Monte Carlo prediction with uncertainty, evaluation, and histogram analysis.

Every command is reproducible from its flags and seed; all flags are echoed
into the output JSON for provenance, and output files are written atomically
(temp file + rename).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from concurrent.futures import ThreadPoolExecutor

from .acquisition import AugmentationPrior, load_prior, sample_noise, sample_params
from .core import DatasetManifest, ManifestCase, Tensor, load_manifest, read_npy, save_manifest, write_npy
from .errors import ConfigurationError, UqsegError
from .inference import DEFAULT_SAMPLES_2D, DEFAULT_SAMPLES_3D, aggregate_mode, run_method
from .metrics import CaseResult, aggregate_cases, assd, dice, histogram_rows, joint_histogram, merge_histograms
from .phantoms import PhantomSpec, make_dataset, rotation_only_prior
from .predictors import PredictorSpec, format_predictor, parse_predictor
from .seeding import derive_seed, make_rng
from .transforms import affine_from_params, warp_image, warp_labels
from .uncertainty import pixel_entropy, structure_volumes


@dataclass(frozen=True)
class RunConfig:
    """Validated prediction run configuration."""

    predictor: PredictorSpec
    prior: AugmentationPrior | None
    method: str
    n_samples: int
    master_seed: int
    keep_samples: bool = False
    max_parallel: int = 1

    def __post_init__(self):
        if self.method not in ("baseline", "tta", "ttd", "ttad"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.n_samples < 1:
            raise ConfigurationError(f"--n must be >= 1, got {self.n_samples}")
        if self.method in ("ttd", "ttad") and not self.predictor.stochastic:
            raise ConfigurationError(
                f"method {self.method} requires a stochastic predictor; "
                f"{format_predictor(self.predictor)} is deterministic"
            )
        if self.method in ("tta", "ttad") and self.prior is None:
            raise ConfigurationError(f"method {self.method} requires --prior")


# ---------------------------------------------------------------------------
# Atomic writers
# ---------------------------------------------------------------------------


def _write_npy_atomic(t: Tensor, path: str) -> None:
    tmp = path + ".tmp"
    write_npy(t, tmp)
    os.replace(tmp, path)


def _write_json_atomic(doc: dict, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _write_csv_atomic(header: list[str], rows: list[list], path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Shared flag handling
# ---------------------------------------------------------------------------


def _echo_flags(args, command: str) -> None:
    """Record the invocation's flags next to its outputs, for provenance."""
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    flags["command"] = command
    _write_json_atomic(flags, os.path.join(args.out_dir, f"{command}_flags.json"))


def _parse_spacing(text: str | None, dim: int) -> tuple[float, ...] | None:
    if text is None:
        return None
    values = tuple(float(v) for v in text.split(","))
    if len(values) != dim:
        raise ConfigurationError(f"--spacing has {len(values)} entries for a {dim}D image")
    return values


def _load_cases(args, need_labels: bool) -> list[tuple[str, Tensor, Tensor | None]]:
    """Resolve --manifest or --image/--label into (id, image, label) triples."""
    if args.manifest:
        manifest = load_manifest(args.manifest)
        cases = []
        for case in manifest.cases:
            label = None
            if case.label_path is not None:
                label = manifest.load_label(case)
            elif need_labels:
                raise ConfigurationError(f"case {case.id} in --manifest has no label")
            cases.append((case.id, manifest.load_image(case), label))
        if not cases:
            raise ConfigurationError(f"--manifest {args.manifest} has no cases")
        return cases
    if not args.image:
        raise ConfigurationError("either --manifest or --image is required")
    image = read_npy(args.image)
    label = None
    if args.label:
        label = read_npy(args.label)
    elif need_labels:
        raise ConfigurationError("--label is required without a labeled --manifest")
    return [("case", image, label)]


def _apply_spacing(t: Tensor, spacing) -> Tensor:
    return Tensor(t.data, spacing) if spacing else t


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    prior = load_prior(args.prior) if args.prior else rotation_only_prior(2, 0.0)
    spec = PhantomSpec(pose_prior=prior)
    manifest = make_dataset(spec, args.n, args.out_dir, args.seed)
    if args.spacing:
        spacing = _parse_spacing(args.spacing, spec.dim)
        manifest = DatasetManifest(
            cases=[
                ManifestCase(c.id, c.image_path, c.label_path, spacing) for c in manifest.cases
            ],
            root=manifest.root,
        )
        save_manifest(manifest, os.path.join(args.out_dir, "manifest.json"))
    _echo_flags(args, "synth")
    print(f"wrote {len(manifest.cases)} cases to {args.out_dir}")
    return 0


def cmd_augment(args) -> int:
    given_prior = load_prior(args.prior) if args.prior else None
    cases = _load_cases(args, need_labels=True)
    os.makedirs(args.out_dir, exist_ok=True)
    out_cases = []
    for case_id, image, label in cases:
        prior = given_prior if given_prior is not None else AugmentationPrior.default(image.ndim)
        if prior.dim != image.ndim:
            raise ConfigurationError(f"--prior is {prior.dim}D but case {case_id} is {image.ndim}D")
        for k in range(args.n):
            params = sample_params(prior, make_rng(derive_seed(args.seed, k, f"augment:{case_id}")))
            forward = affine_from_params(params, image.shape)
            warped = warp_image(image, forward)
            noise = sample_noise(prior, image.shape, params.noise_seed)
            # Generative direction: warp first, then add noise; labels stay noise-free.
            aug_image = Tensor((warped.data + noise.data).astype(np.float32), image.spacing)
            aug_label = warp_labels(label, forward)
            image_rel = f"{case_id}_aug{k:03d}_image.npy"
            label_rel = f"{case_id}_aug{k:03d}_label.npy"
            _write_npy_atomic(aug_image, os.path.join(args.out_dir, image_rel))
            _write_npy_atomic(aug_label, os.path.join(args.out_dir, label_rel))
            out_cases.append(ManifestCase(id=f"{case_id}_aug{k:03d}", image_path=image_rel, label_path=label_rel))
    save_manifest(DatasetManifest(cases=out_cases, root=args.out_dir), os.path.join(args.out_dir, "manifest.json"))
    _echo_flags(args, "augment")
    print(f"wrote {len(out_cases)} augmented pairs to {args.out_dir}")
    return 0


def _predict_one(config: RunConfig, image: Tensor, out_dir: str, flags: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    samples = run_method(
        config.method,
        config.predictor,
        image,
        prior=config.prior,
        n_samples=config.n_samples,
        master_seed=config.master_seed,
        max_workers=config.max_parallel,
    )
    _write_npy_atomic(aggregate_mode(samples), os.path.join(out_dir, "pred.npy"))
    _write_npy_atomic(pixel_entropy(samples), os.path.join(out_dir, "entropy.npy"))
    volumes = structure_volumes(samples, image.spacing, label=1)
    mean = float(np.mean(volumes))
    std = float(np.std(volumes))
    stats = {
        "method": samples.mode,
        "n_samples": len(samples),
        "master_seed": config.master_seed,
        "volumes": list(volumes),
        "volume_mean": mean,
        "volume_std": std,
        "flags": flags,
    }
    if len(samples) > 1:
        stats["vvc"] = std / mean if mean > 0.0 else None
    _write_json_atomic(stats, os.path.join(out_dir, "stats.json"))
    if config.keep_samples:
        sample_dir = os.path.join(out_dir, "samples")
        os.makedirs(sample_dir, exist_ok=True)
        records = []
        for n, (tensor, record) in enumerate(zip(samples.samples, samples.records)):
            _write_npy_atomic(tensor, os.path.join(sample_dir, f"sample{n:03d}.npy"))
            records.append(
                {
                    "predictor_seed": record.predictor_seed,
                    "params": None
                    if record.params is None
                    else {
                        "flips": list(record.params.flips),
                        "rotation": list(record.params.rotation),
                        "scale": record.params.scale,
                        "translation": list(record.params.translation),
                        "noise_seed": record.params.noise_seed,
                    },
                }
            )
        _write_json_atomic({"records": records}, os.path.join(sample_dir, "records.json"))


def cmd_predict(args) -> int:
    predictor = parse_predictor(args.predictor)
    if args.timeout_secs is not None:
        predictor = dataclasses.replace(predictor, timeout=args.timeout_secs)
    if args.method in ("ttd", "ttad") and not predictor.stochastic:
        raise ConfigurationError(
            f"method {args.method} requires a stochastic predictor; "
            f"{args.predictor} is deterministic"
        )
    prior = load_prior(args.prior) if args.prior else None
    flags = {
        "method": args.method,
        "n": args.n,
        "seed": args.seed,
        "predictor": args.predictor,
        "prior": args.prior,
        "spacing": args.spacing,
        "keep_samples": args.keep_samples,
        "max_parallel": args.max_parallel,
        "timeout_secs": args.timeout_secs,
        "image": args.image,
        "manifest": args.manifest,
        "out_dir": args.out_dir,
    }
    cases = _load_cases(args, need_labels=False)

    def run_case(entry, sample_workers: int) -> None:
        case_id, image, _ = entry
        spacing = _parse_spacing(args.spacing, image.ndim)
        image = _apply_spacing(image, spacing)
        case_prior = prior
        if case_prior is None and args.method in ("tta", "ttad"):
            case_prior = AugmentationPrior.default(image.ndim)
        if case_prior is not None and case_prior.dim != image.ndim:
            raise ConfigurationError(f"--prior is {case_prior.dim}D but case {case_id} is {image.ndim}D")
        n = args.n if args.n is not None else (
            DEFAULT_SAMPLES_2D if image.ndim == 2 else DEFAULT_SAMPLES_3D
        )
        config = RunConfig(
            predictor=predictor,
            prior=case_prior,
            method=args.method,
            n_samples=n,
            master_seed=args.seed,
            keep_samples=args.keep_samples,
            max_parallel=sample_workers,
        )
        out_dir = args.out_dir if not args.manifest else os.path.join(args.out_dir, case_id)
        _predict_one(config, image, out_dir, flags)

    # Manifest runs parallelize across cases; a single case parallelizes its
    # samples. External predictors stay serialized unless declared stateless.
    case_workers = args.max_parallel
    if predictor.kind == "external" and not predictor.stateless:
        case_workers = 1
    if args.manifest and case_workers > 1 and len(cases) > 1:
        with ThreadPoolExecutor(max_workers=case_workers) as pool:
            list(pool.map(lambda entry: run_case(entry, 1), cases))
    else:
        for entry in cases:
            run_case(entry, args.max_parallel)
    print(f"predicted {len(cases)} case(s) into {args.out_dir}")
    return 0


def _case_out_dir(args, case_id: str) -> str:
    return args.out_dir if not args.manifest else os.path.join(args.out_dir, case_id)


def cmd_evaluate(args) -> int:
    cases = _load_cases(args, need_labels=True)
    results = []
    for case_id, image, label in cases:
        out_dir = _case_out_dir(args, case_id)
        pred_path = os.path.join(out_dir, "pred.npy")
        if not os.path.exists(pred_path):
            raise FileNotFoundError(f"no prediction for case {case_id}: missing {pred_path}")
        pred = read_npy(pred_path)
        with open(os.path.join(out_dir, "stats.json")) as fh:
            stats = json.load(fh)
        spacing = _parse_spacing(args.spacing, label.ndim) or label.spacing
        results.append(
            CaseResult(
                case_id=case_id,
                method=stats["method"],
                n_samples=stats["n_samples"],
                dice=dice(pred, label, label=1),
                assd=assd(pred, label, spacing),
                vvc=stats.get("vvc"),
            )
        )
    case_rows = [
        [r.case_id, r.method, r.n_samples, r.dice, r.assd, r.vvc] for r in results
    ]
    _write_csv_atomic(
        ["case_id", "method", "n_samples", "dice", "assd", "vvc"],
        case_rows,
        os.path.join(args.out_dir, "cases.csv"),
    )
    _write_csv_atomic(
        ["method", "n", "dice_mean", "dice_std", "assd_mean", "assd_std"],
        aggregate_cases(results),
        os.path.join(args.out_dir, "summary.csv"),
    )
    _echo_flags(args, "evaluate")
    print(f"evaluated {len(results)} case(s); wrote cases.csv and summary.csv in {args.out_dir}")
    return 0


def cmd_histogram(args) -> int:
    cases = _load_cases(args, need_labels=True)
    histograms = []
    for case_id, image, label in cases:
        out_dir = _case_out_dir(args, case_id)
        entropy = read_npy(os.path.join(out_dir, "entropy.npy"))
        pred = read_npy(os.path.join(out_dir, "pred.npy"))
        histograms.append(joint_histogram(entropy, pred, label, n_bins=args.bins))
    merged = merge_histograms(histograms)
    _write_csv_atomic(
        ["bin_lo", "bin_hi", "frac_correct", "frac_incorrect", "mean_error"],
        histogram_rows(merged),
        os.path.join(args.out_dir, "histogram.csv"),
    )
    _echo_flags(args, "histogram")
    print(f"wrote histogram.csv in {args.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqseg",
        description="Monte Carlo segmentation inference with uncertainty estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *names):
        if "image" in names:
            p.add_argument("--image", help="input image NPY (float32)")
        if "label" in names:
            p.add_argument("--label", help="ground-truth label NPY (uint8)")
        if "manifest" in names:
            p.add_argument("--manifest", help="dataset manifest JSON")
        if "out-dir" in names:
            p.add_argument("--out-dir", required=True, help="output directory")
        if "seed" in names:
            p.add_argument("--seed", type=int, default=0, help="master seed")
        if "n" in names:
            p.add_argument("--n", type=int, default=20, help="sample / case count")
        if "prior" in names:
            p.add_argument("--prior", help="augmentation prior JSON path")
        if "spacing" in names:
            p.add_argument("--spacing", help="comma-separated mm per axis")

    p = sub.add_parser("synth", help="generate a synthetic phantom dataset")
    add_common(p, "out-dir", "seed", "n", "prior", "spacing")
    p.set_defaults(func=cmd_synth, image=None, label=None, manifest=None)

    p = sub.add_parser("augment", help="export augmented training pairs")
    add_common(p, "image", "label", "manifest", "out-dir", "seed", "n", "prior")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("predict", help="Monte Carlo prediction with uncertainty")
    add_common(p, "image", "manifest", "out-dir", "seed", "prior", "spacing")
    p.add_argument("--n", type=int, default=None, help="sample count (default 20 for 2D, 40 for 3D)")
    p.add_argument("--method", choices=["baseline", "tta", "ttd", "ttad"], default="baseline")
    p.add_argument("--predictor", required=True, help="predictor spec string")
    p.add_argument("--keep-samples", action="store_true", help="write per-sample label maps")
    p.add_argument("--max-parallel", type=int, default=1, help="concurrent samples")
    p.add_argument("--timeout-secs", type=float, default=None, help="external predictor timeout")
    p.set_defaults(func=cmd_predict, label=None)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    add_common(p, "image", "label", "manifest", "out-dir", "spacing")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("histogram", help="uncertainty-vs-error joint histogram")
    add_common(p, "image", "label", "manifest", "out-dir")
    p.add_argument("--bins", type=int, default=20, help="uncertainty bin count")
    p.set_defaults(func=cmd_histogram)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UqsegError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        print(f"uqseg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
