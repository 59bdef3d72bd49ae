"""Misclassification error between binary segmentations and ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_model import ClassStatistics, GrayImage, LabelField

__all__ = [
    "BinaryMask",
    "MEReport",
    "binarize_labels",
    "mask_from_image",
    "misclassification_error",
]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Foreground (``True``) / background (``False``) mask."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError("mask must be 2-D")
        arr = arr.astype(bool, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.bits)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class MEReport:
    me: float
    matched_bg: int
    matched_fg: int
    total: int
    polarity_flipped: bool = False


def mask_from_image(image: GrayImage) -> BinaryMask:
    """Ground-truth convention: 0 is background, anything else foreground."""
    return BinaryMask(image.pixels != 0)


def binarize_labels(labels: LabelField, stats: ClassStatistics) -> BinaryMask:
    """Map the darker class to background and the brighter one to foreground.

    Equal means make class 1 the background; if one class is empty the
    populated class is the background.
    """
    if labels.k != 2 or stats.k != 2:
        raise ValueError("binarization needs exactly two classes")
    m1, m2 = stats.means
    if np.isnan(m1) or np.isnan(m2):
        return BinaryMask(np.zeros(labels.labels.shape, dtype=bool))
    foreground = 1 if m1 > m2 else 2
    return BinaryMask(labels.labels == foreground)


def _score(gt: np.ndarray, seg: np.ndarray):
    matched_bg = int(np.count_nonzero(~gt & ~seg))
    matched_fg = int(np.count_nonzero(gt & seg))
    total = gt.size
    return 1.0 - (matched_bg + matched_fg) / total, matched_bg, matched_fg, total


def misclassification_error(gt: BinaryMask, seg: BinaryMask,
                            try_both_polarities: bool = False) -> MEReport:
    """Fraction of pixels whose foreground/background label disagrees with `gt`.

    With `try_both_polarities` the inverted segmentation is scored as well and
    the smaller error is reported.
    """
    if gt.bits.shape != seg.bits.shape:
        raise ValueError(f"dimension mismatch: {gt.bits.shape} vs {seg.bits.shape}")
    me, bg, fg, total = _score(gt.bits, seg.bits)
    report = MEReport(me, bg, fg, total, False)
    if try_both_polarities:
        me2, bg2, fg2, _ = _score(gt.bits, ~seg.bits)
        if me2 < me:
            report = MEReport(me2, bg2, fg2, total, True)
    return report
