"""Evaluation metrics: PSNR and the F-alpha segmentation measure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Field, GridMismatchError

# Cap used when formatting an infinite PSNR (identical images) as text.
PSNR_TEXT_CAP = 99.0


@dataclass
class BinaryMask:
    """Boolean mask over the interior pixels of a field."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=bool)
        if self.values.ndim != 2:
            raise ValueError("mask must be 2-D")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def count(self) -> int:
        return int(self.values.sum())


def psnr(pred: Field, truth: Field) -> float:
    """Peak signal-to-noise ratio in dB with peak 1, over interior pixels.

    Identical images give math.inf; format_psnr caps that for text output.
    """
    if not pred.same_grid(truth):
        raise GridMismatchError("psnr requires fields on the same grid")
    diff = pred.interior - truth.interior
    mse = float((diff * diff).sum()) / diff.size
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def format_psnr(value: float) -> str:
    """Render a PSNR with 4 fractional digits, capping +inf at 99 dB."""
    return f"{min(value, PSNR_TEXT_CAP):.4f}"


def threshold(mask_map: Field, tau: float) -> BinaryMask:
    """Binarize a mask map; pixels >= tau count as foreground."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {tau}")
    return BinaryMask(mask_map.interior >= tau)


def f_measure(truth: BinaryMask, pred: BinaryMask, alpha: float = 2.0) -> float:
    """Weighted combination of segmentation recall and precision.

    F_alpha = (1 + alpha) * recall * precision / (alpha * precision + recall)
    with recall = |A&B| / |A| and precision = |A&B| / |B|.  Two empty masks
    agree perfectly (1.0); exactly one empty scores 0.0.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if truth.values.shape != pred.values.shape:
        raise GridMismatchError("masks have different dimensions")
    n_truth = truth.count()
    n_pred = pred.count()
    if n_truth == 0 and n_pred == 0:
        return 1.0
    if n_truth == 0 or n_pred == 0:
        return 0.0
    inter = int((truth.values & pred.values).sum())
    recall = inter / n_truth
    precision = inter / n_pred
    denom = alpha * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + alpha) * recall * precision / denom
