"""
Phantoms, reversible transforms, and the acquisition model
==========================================================

A quick tour of the building blocks: synthesize a phantom with a known
pose, map the observed image back to its underlying frame, and carry a
prediction forward again.
"""

import numpy as np

from uqseg import (
    AugmentationPrior,
    PhantomSpec,
    Tensor,
    affine_from_params,
    dice,
    from_latent,
    invert,
    make_phantom,
    sample_params,
    make_rng,
    to_latent,
    warp_image,
    warp_labels,
)

# An elongated ellipse at a random orientation, plus noise, z-normalized.
spec = PhantomSpec()
image, gt, pose = make_phantom(spec, seed=3)
print(f"phantom: shape {image.shape}, pose rotation {pose.rotation[0]:.2f} rad")
print(f"foreground fraction: {gt.data.mean():.3f}")

# The pose is one draw of the transform parameters; its affine matrix maps
# output pixel coordinates back to input coordinates, so warping with it
# applies the forward transform.
matrix = affine_from_params(pose, image.shape)
print("forward pull-back matrix:\n", np.round(matrix.matrix, 3))

# Undo the pose: the canonical-frame mask should be axis-aligned again.
canonical_gt = warp_labels(gt, invert(matrix))
print(f"canonical mask area {int(canonical_gt.data.sum())} vs posed {int(gt.data.sum())}")

# The acquisition model in both directions.  A fresh draw from the prior
# maps the observed image to one plausible underlying image (subtract a
# noise field, invert the spatial transform) ...
prior = AugmentationPrior.default(2)
draw = sample_params(prior, make_rng(11))
latent = to_latent(image, draw, prior)
print(f"latent image range: [{latent.data.min():.2f}, {latent.data.max():.2f}]")

# ... and a segmentation made in that frame is carried back with the same
# draw (labels are warped without noise).
mask_in_latent = Tensor((latent.data > 0.5).astype(np.uint8))
back = from_latent(mask_in_latent, draw)
print(f"dice of carried-back mask vs ground truth: {dice(back, gt):.3f}")

# Lattice-exact transforms are bit-exact: a 90-degree rotation twice, then
# a 180-degree rotation, is the identity on both images and labels.
quarter = sample_params(
    AugmentationPrior(flip_prob=(0, 0), rotation_range=(np.pi / 2, np.pi / 2), scale_range=(1, 1)),
    make_rng(0),
)
a = affine_from_params(quarter, image.shape)
twice = warp_image(warp_image(image, a), a)
half = sample_params(
    AugmentationPrior(flip_prob=(0, 0), rotation_range=(np.pi, np.pi), scale_range=(1, 1)),
    make_rng(0),
)
restored = warp_image(twice, affine_from_params(half, image.shape))
print("two quarter turns + one half turn restore the image exactly:",
      bool(np.array_equal(restored.data, image.data)))
