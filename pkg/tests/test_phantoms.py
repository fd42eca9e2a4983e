"""Phantom generation determinism, geometry and dataset export."""

import math
import os

import numpy as np
import pytest

from uqseg import (
    AugmentationPrior,
    PhantomSpec,
    Tensor,
    derive_seed,
    load_manifest,
    make_dataset,
    make_phantom,
    rotation_only_prior,
    znormalize,
)


class TestMakePhantom:
    def test_identity_pose_circle_area(self):
        spec = PhantomSpec(
            semi_axes=(0.25, 0.25), pose_prior=AugmentationPrior.degenerate(2)
        )
        _, gt, _ = make_phantom(spec, seed=1)
        count = int(gt.data.sum())
        expected = math.pi * 16**2
        assert abs(count - expected) <= 0.03 * expected

    def test_noiseless_unit_contrast_image_is_normalized_mask(self):
        spec = PhantomSpec(
            noise_std=0.0, fg_intensity=1.0, bg_intensity=0.0,
            pose_prior=rotation_only_prior(2, 0.0),
        )
        image, gt, _ = make_phantom(spec, seed=5)
        reference = znormalize(Tensor(gt.data.astype(np.float32)))
        assert np.array_equal(image.data, reference.data)

    def test_same_seed_identical(self):
        spec = PhantomSpec()
        a_img, a_gt, a_pose = make_phantom(spec, seed=9)
        b_img, b_gt, b_pose = make_phantom(spec, seed=9)
        c_img, _, _ = make_phantom(spec, seed=10)
        assert np.array_equal(a_img.data, b_img.data)
        assert np.array_equal(a_gt.data, b_gt.data)
        assert a_pose == b_pose
        assert not np.array_equal(a_img.data, c_img.data)

    def test_foreground_fraction_stays_in_range(self):
        spec = PhantomSpec(pose_prior=AugmentationPrior.default(2))
        for k in range(30):
            _, gt, _ = make_phantom(spec, seed=k)
            frac = float(gt.data.mean())
            assert 0.0 < frac < 0.5

    def test_foreground_brighter_than_background(self):
        spec = PhantomSpec(noise_std=0.2, fg_intensity=1.0, bg_intensity=0.0)
        for k in range(10):
            image, gt, _ = make_phantom(spec, seed=k)
            fg = image.data[gt.data == 1].mean()
            bg = image.data[gt.data == 0].mean()
            assert fg > bg

    def test_validation(self):
        with pytest.raises(ValueError):
            PhantomSpec(size=8)
        with pytest.raises(ValueError):
            PhantomSpec(semi_axes=(0.6, 0.2))
        with pytest.raises(ValueError):
            PhantomSpec(dim=3, semi_axes=(0.3, 0.2))

    def test_3d_phantom(self):
        spec = PhantomSpec(
            dim=3, size=24, semi_axes=(0.3, 0.12, 0.12),
            pose_prior=rotation_only_prior(3, 0.0),
        )
        image, gt, _ = make_phantom(spec, seed=2)
        assert image.shape == (24, 24, 24)
        assert gt.data.sum() > 0


class TestMakeDataset:
    def test_empty_dataset(self, tmp_path):
        manifest = make_dataset(PhantomSpec(), 0, tmp_path, seed=0)
        assert manifest.cases == []

    def test_five_cases_ten_files_plus_manifest(self, tmp_path):
        manifest = make_dataset(PhantomSpec(), 5, tmp_path, seed=3)
        assert len(manifest.cases) == 5
        npy_files = sorted(p for p in os.listdir(tmp_path) if p.endswith(".npy"))
        assert len(npy_files) == 10
        back = load_manifest(tmp_path / "manifest.json")
        assert [c.id for c in back.cases] == [f"case{k:03d}" for k in range(5)]

    def test_regeneration_is_bit_identical(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        make_dataset(PhantomSpec(), 3, a_dir, seed=8)
        make_dataset(PhantomSpec(), 3, b_dir, seed=8)
        for name in sorted(os.listdir(a_dir)):
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()

    def test_case_seeds_are_derived(self, tmp_path):
        manifest = make_dataset(PhantomSpec(), 2, tmp_path, seed=4)
        img0 = manifest.load_image(manifest.cases[0])
        direct, _, _ = make_phantom(PhantomSpec(), derive_seed(4, 0, "case"))
        assert np.array_equal(img0.data, direct.data)
