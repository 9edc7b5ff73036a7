import numpy as np
import pytest

from pdelearn.fields import Field
from pdelearn.dataset_io import synthetic_scenes


def analytic_field(fn, height=12, width=12, pad=2):
    """Field sampled from fn(x, y) over the whole padded array.

    x is the column index and y the row index of the full array, so
    stencils away from the array edge see the analytic function exactly
    (no halo jump).
    """
    yy, xx = np.mgrid[0 : height + 2 * pad, 0 : width + 2 * pad].astype(np.float64)
    return Field(fn(xx, yy), pad)


def smooth_blob_array(height, width, seed, n_blobs=4, amp=0.3):
    """Smooth random array in roughly [0, 1] built from Gaussian bumps."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yy /= max(height - 1, 1)
    xx /= max(width - 1, 1)
    img = np.full((height, width), 0.5)
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        s = rng.uniform(0.15, 0.35)
        img += rng.uniform(-amp, amp) * np.exp(
            -((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s)
        )
    return np.clip(img, 0.02, 0.98)


@pytest.fixture
def scenes32():
    return synthetic_scenes(4, 32, 32, seed=7)
