"""Built-in predictors, spec-string parsing, and the subprocess protocol."""

import os
import stat
import sys
import textwrap

import numpy as np
import pytest

from uqseg import (
    ConfigurationError,
    PhantomSpec,
    PredictorExitError,
    PredictorOutputError,
    PredictorSpec,
    PredictorTimeoutError,
    Tensor,
    TransformParams,
    affine_from_params,
    dice,
    format_predictor,
    from_latent,
    make_phantom,
    parse_predictor,
    predict,
    rotation_only_prior,
    warp_image,
)


def binary_image():
    rng = np.random.default_rng(0)
    return Tensor(rng.integers(0, 2, size=(12, 12)).astype(np.float32))


class TestParse:
    def test_all_kinds(self):
        s = parse_predictor("builtin:threshold:0.5")
        assert s.kind == "builtin_threshold" and s.params["tau"] == 0.5 and not s.stochastic
        s = parse_predictor("builtin:biased:0.5:19,8")
        assert s.kind == "builtin_biased" and s.params["halfwidths"] == (19.0, 8.0)
        s = parse_predictor("builtin:stochastic:0.5:0.1")
        assert s.kind == "builtin_stochastic" and s.stochastic
        s = parse_predictor("extern:run.sh --input {input} --output {output} --seed {seed}")
        assert s.kind == "external"

    def test_round_trip_through_format(self):
        for text in (
            "builtin:threshold:0.5",
            "builtin:biased:0.5:19.0,8.0",
            "builtin:stochastic:0.5:0.1",
            "extern:x {input} {output} {seed}",
        ):
            assert format_predictor(parse_predictor(text)) == text

    def test_bad_strings(self):
        for text in ("builtin:nope:1", "builtin:threshold", "threshold:0.5", "builtin:threshold:abc"):
            with pytest.raises(ConfigurationError):
                parse_predictor(text)

    def test_external_requires_placeholders(self):
        with pytest.raises(ConfigurationError) as err:
            parse_predictor("extern:run.sh --input {input}")
        assert "{output}" in str(err.value)


class TestBuiltins:
    def test_threshold_on_binary_image_is_identity(self):
        img = binary_image()
        out = predict(parse_predictor("builtin:threshold:0.5"), img)
        assert np.array_equal(out.data, img.data.astype(np.uint8))

    def test_threshold_ignores_seed(self):
        img = binary_image()
        spec = parse_predictor("builtin:threshold:0.5")
        assert np.array_equal(predict(spec, img, 1).data, predict(spec, img, 999).data)

    def test_stochastic_pure_function_of_seed(self):
        rng = np.random.default_rng(1)
        img = Tensor(rng.normal(0.5, 0.2, size=(32, 32)).astype(np.float32))
        spec = parse_predictor("builtin:stochastic:0.5:0.1")
        a = predict(spec, img, seed=7)
        b = predict(spec, img, seed=7)
        c = predict(spec, img, seed=8)
        assert np.array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)

    def test_stochastic_zero_sigma_matches_threshold(self):
        img = binary_image()
        s0 = predict(parse_predictor("builtin:stochastic:0.5:0.0"), img, seed=3)
        st = predict(parse_predictor("builtin:threshold:0.5"), img)
        assert np.array_equal(s0.data, st.data)

    def test_biased_clips_to_canonical_template(self):
        from uqseg import AugmentationPrior

        # low-noise canonical-pose phantom so clipping dominates the score
        image, gt, _ = make_phantom(
            PhantomSpec(noise_std=0.05, pose_prior=AugmentationPrior.degenerate(2)), 31
        )
        biased = parse_predictor("builtin:biased:0.5:19,8")
        assert dice(predict(biased, image), gt) >= 0.95
        quarter = TransformParams(2, (False, False), (np.pi / 2,), 1.0, (0.0, 0.0), 0)
        rot_image = warp_image(image, affine_from_params(quarter, image.shape))
        rot_gt = from_latent(gt, quarter)
        assert dice(predict(biased, rot_image), rot_gt) <= 0.7

    def test_threshold_equivariant_under_lattice_warps(self):
        rng = np.random.default_rng(5)
        img = Tensor(rng.normal(0.5, 0.3, size=(8, 8)).astype(np.float32))
        spec = parse_predictor("builtin:threshold:0.5")
        for p in (
            TransformParams(2, (True, False), (0.0,), 1.0, (0.0, 0.0), 0),
            TransformParams(2, (False, True), (0.0,), 1.0, (0.0, 0.0), 0),
            TransformParams(2, (False, False), (np.pi / 2,), 1.0, (0.0, 0.0), 0),
            TransformParams(2, (True, True), (np.pi,), 1.0, (0.0, 0.0), 0),
        ):
            a = affine_from_params(p, img.shape)
            warped_then_pred = predict(spec, warp_image(img, a))
            pred_then_warped = from_latent(predict(spec, img), p)
            assert np.array_equal(warped_then_pred.data, pred_then_warped.data)

    def test_nonfinite_input_rejected(self):
        bad = np.full((4, 4), np.nan, dtype=np.float32)
        with pytest.raises(ValueError):
            predict(parse_predictor("builtin:threshold:0.5"), Tensor(bad))


def _write_stub(tmp_path, name, body):
    """Write an executable python stub speaking the subprocess protocol."""
    path = tmp_path / name
    path.write_text(
        textwrap.dedent(
            f"""\
            #!{sys.executable}
            import sys
            sys.path.insert(0, {str(os.path.join(os.path.dirname(__file__), os.pardir, "src"))!r})
            import argparse
            import numpy as np
            from uqseg import Tensor, read_npy, write_npy

            ap = argparse.ArgumentParser()
            ap.add_argument("--input"); ap.add_argument("--output"); ap.add_argument("--seed", type=int)
            args = ap.parse_args()
            """
        )
        + textwrap.dedent(body)
    )
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return f"extern:{sys.executable} {path} --input {{input}} --output {{output}} --seed {{seed}}"


class TestExternal:
    def test_threshold_stub_matches_builtin(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "ok.py",
            """
            x = read_npy(args.input)
            write_npy(Tensor((x.data > 0.5).astype(np.uint8)), args.output)
            """,
        )
        img = binary_image()
        out = predict(PredictorSpec(kind="external", params={"command": cmd[len("extern:"):]}), img, 0)
        ref = predict(parse_predictor("builtin:threshold:0.5"), img)
        assert np.array_equal(out.data, ref.data)
        assert out.spacing == img.spacing

    def test_nonzero_exit_carries_stderr(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "fail.py",
            """
            print("boom: bad weights", file=sys.stderr)
            sys.exit(3)
            """,
        )
        spec = parse_predictor(cmd)
        with pytest.raises(PredictorExitError) as err:
            predict(spec, binary_image(), 0)
        assert "boom: bad weights" in str(err.value)
        assert err.value.returncode == 3

    def test_timeout(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "slow.py",
            """
            import time
            time.sleep(30)
            """,
        )
        import dataclasses

        spec = dataclasses.replace(parse_predictor(cmd), timeout=0.5)
        with pytest.raises(PredictorTimeoutError):
            predict(spec, binary_image(), 0)

    def test_wrong_shape_is_output_error(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "shape.py",
            """
            x = read_npy(args.input)
            write_npy(Tensor(np.zeros((3, 3), dtype=np.uint8)), args.output)
            """,
        )
        with pytest.raises(PredictorOutputError) as err:
            predict(parse_predictor(cmd), binary_image(), 0)
        assert "shape" in str(err.value)

    def test_probability_output_checked_and_reduced(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "prob.py",
            """
            x = read_npy(args.input)
            fg = (x.data > 0.5).astype(np.float32) * 0.9 + 0.05
            write_npy(Tensor(np.stack([1.0 - fg, fg])), args.output)
            """,
        )
        import dataclasses

        spec = dataclasses.replace(parse_predictor(cmd), output_kind="probabilities")
        img = binary_image()
        out = predict(spec, img, 0)
        assert out.shape == (2,) + img.shape
        from uqseg.predictors import as_labels

        labels = as_labels(spec, out)
        assert np.array_equal(labels.data, img.data.astype(np.uint8))

    def test_tmpdir_env_var_overrides_handoff_location(self, tmp_path, monkeypatch):
        override = tmp_path / "scratch"
        override.mkdir()
        report = tmp_path / "seen_input.txt"
        cmd = _write_stub(
            tmp_path,
            "report.py",
            f"""
            x = read_npy(args.input)
            open({str(report)!r}, "w").write(args.input)
            write_npy(Tensor((x.data > 0.5).astype(np.uint8)), args.output)
            """,
        )
        monkeypatch.setenv("UQSEG_TMPDIR", str(override))
        predict(parse_predictor(cmd), binary_image(), 0)
        assert report.read_text().startswith(str(override))

    def test_seed_placeholder_is_substituted(self, tmp_path):
        cmd = _write_stub(
            tmp_path,
            "seeded.py",
            """
            x = read_npy(args.input)
            fill = np.uint8(args.seed % 2)
            write_npy(Tensor(np.full(x.shape, fill, dtype=np.uint8)), args.output)
            """,
        )
        spec = parse_predictor(cmd)
        img = binary_image()
        assert predict(spec, img, 2).data.max() == 0
        assert predict(spec, img, 3).data.min() == 1
