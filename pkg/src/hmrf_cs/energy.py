"""HMRF segmentation energy over class-mean vectors.

The energy of a mean vector ``mu`` is evaluated on the labeling it induces by
nearest-mean classification: a Gaussian data term built from the empirical
class statistics of that labeling plus a Potts-style clique term scaled by
``b / temperature``. Mean vectors outside ``[0, 255]^K`` get ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .image_model import (
    SIGMA_FLOOR,
    GrayImage,
    LabelField,
    class_statistics,
)

__all__ = [
    "INF",
    "Neighborhood",
    "EnergyParams",
    "pair_count",
    "smoothness_term",
    "labeling_energy",
    "HMRFEnergy",
    "energy",
    "threshold_oracle",
]

#: Sentinel for out-of-range mean vectors; compares greater than every finite energy.
INF = math.inf


class Neighborhood(str, Enum):
    FOUR = "four_connected"
    EIGHT = "eight_connected"

    @classmethod
    def parse(cls, value) -> "Neighborhood":
        if isinstance(value, cls):
            return value
        aliases = {"4": cls.FOUR, "four": cls.FOUR, "8": cls.EIGHT, "eight": cls.EIGHT}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown neighborhood {value!r}; expected one of "
                f"{', '.join(m.value for m in cls)}") from None


# (row, col) offsets; each unordered neighbor pair is generated exactly once
_OFFSETS = {
    Neighborhood.FOUR: ((0, 1), (1, 0)),
    Neighborhood.EIGHT: ((0, 1), (1, 0), (1, 1), (1, -1)),
}


@dataclass(frozen=True)
class EnergyParams:
    """Clique weight ``b``, temperature and neighborhood system."""

    b: float = 1.0
    temperature: float = 2.0
    neighborhood: Neighborhood = Neighborhood.EIGHT

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        object.__setattr__(self, "neighborhood", Neighborhood.parse(self.neighborhood))

    @property
    def weight(self) -> float:
        return self.b / self.temperature


def _pairs(arr: np.ndarray, neighborhood: Neighborhood):
    """Yield aligned (first, second) views for every neighbor offset."""
    h, w = arr.shape
    for dr, dc in _OFFSETS[Neighborhood.parse(neighborhood)]:
        if dc >= 0:
            yield arr[:h - dr, :w - dc], arr[dr:, dc:]
        else:
            yield arr[:h - dr, -dc:], arr[dr:, :w + dc]


def pair_count(height: int, width: int, neighborhood=Neighborhood.EIGHT) -> int:
    """Number of unordered neighboring pixel pairs in a ``height x width`` grid."""
    total = 0
    for dr, dc in _OFFSETS[Neighborhood.parse(neighborhood)]:
        total += max(height - dr, 0) * max(width - abs(dc), 0)
    return total


def smoothness_term(labels: LabelField, neighborhood=Neighborhood.EIGHT) -> int:
    """Sum of ``1 - 2 * delta(x_s, x_t)`` over all neighbor pairs (unscaled)."""
    x = labels.labels
    total = 0
    for a, b in _pairs(x, neighborhood):
        total += a.size - 2 * int(np.count_nonzero(a == b))
    return total


def labeling_energy(image: GrayImage, labels: LabelField, params: EnergyParams,
                    sigma_floor: float = SIGMA_FLOOR) -> float:
    """Energy of an explicit label field, computed pixel by pixel.

    Used as the reference path; :class:`HMRFEnergy` is the fast one.
    """
    stats = class_statistics(image, labels, sigma_floor)
    y = image.pixels.astype(np.float64)
    x = labels.labels
    data = 0.0
    for j in range(labels.k):
        if stats.counts[j] == 0:
            continue
        values = y[x == j + 1]
        sigma = stats.stds[j]
        data += float(np.sum(np.log(sigma) + (values - stats.means[j]) ** 2 / (2 * sigma ** 2)))
    return data + params.weight * smoothness_term(labels, params.neighborhood)


class HMRFEnergy:
    """Precomputed energy for one image, K and parameter set.

    The image enters only through its gray-level histogram and the table of
    neighbor co-occurrences. Because nearest-mean classes are intervals of
    gray levels, the count of equal-label pairs is a sum of square blocks of
    the co-occurrence table, read off a 2-D prefix sum.

    Calling the instance on a ``(n, K)`` array returns ``n`` energies; on a
    single vector it returns a float.
    """

    def __init__(self, image: GrayImage, k: int, params: EnergyParams | None = None,
                 sigma_floor: float = SIGMA_FLOOR):
        if k < 2:
            raise ValueError("k must be at least 2")
        self.image = image
        self.k = int(k)
        self.params = params if params is not None else EnergyParams()
        self.sigma_floor = float(sigma_floor)

        y = image.pixels.astype(np.intp)
        hist = np.bincount(y.ravel(), minlength=256).astype(np.int64)
        levels = np.arange(256, dtype=np.int64)
        # prefix sums of count, sum and sum of squares over gray levels
        moments = np.zeros((3, 257), dtype=np.int64)
        moments[0, 1:] = np.cumsum(hist)
        moments[1, 1:] = np.cumsum(hist * levels)
        moments[2, 1:] = np.cumsum(hist * levels ** 2)
        self._moments = moments
        # n * sum(y^2) must fit in int64 for the exact variance numerator
        self._exact = image.size * 65025 * image.size < 2 ** 62

        cooc = np.zeros((256, 256), dtype=np.int64)
        for a, b in _pairs(y, self.params.neighborhood):
            np.add.at(cooc, (a.ravel(), b.ravel()), 1)
        prefix = np.zeros((257, 257), dtype=np.int64)
        prefix[1:, 1:] = cooc.cumsum(0).cumsum(1)
        self._prefix = prefix
        self.n_pairs = pair_count(image.height, image.width, self.params.neighborhood)
        self._levels = np.arange(256, dtype=np.float64)
        self.evaluations = 0

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        if mu.ndim == 1:
            return float(self.evaluate(mu[None, :])[0])
        return self.evaluate(mu)

    def _intervals(self, mu: np.ndarray):
        """First gray level and level count owned by each class."""
        m, k = mu.shape
        levels = self._levels
        best = np.abs(levels - mu[:, 0:1])
        lut = np.zeros((m, 256), dtype=np.int16)
        for j in range(1, k):
            d = np.abs(levels - mu[:, j:j + 1])
            # strict comparison keeps ties on the lower class index
            lut[d < best] = j
            np.minimum(best, d, out=best)
        lo = np.empty((m, k), dtype=np.intp)
        width = np.empty((m, k), dtype=np.intp)
        for j in range(k):
            owned = lut == j
            width[:, j] = owned.sum(axis=1)
            lo[:, j] = owned.argmax(axis=1)
        return lo, width

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != self.k:
            raise ValueError(f"expected an (n, {self.k}) array of mean vectors")
        self.evaluations += len(positions)
        out = np.full(len(positions), INF)
        valid = np.all((positions >= 0.0) & (positions <= 255.0), axis=1)
        if not valid.any():
            return out

        lo, width = self._intervals(positions[valid])
        present = width > 0
        hi1 = np.where(present, lo + width, lo)      # one past the last owned level

        mom = self._moments
        count = mom[0, hi1] - mom[0, lo]
        total = mom[1, hi1] - mom[1, lo]
        square = mom[2, hi1] - mom[2, lo]
        filled = count > 0
        safe = np.where(filled, count, 1)
        if self._exact:
            var = (safe * square - total * total) / (safe * safe)
        else:
            mean = total / safe
            var = np.maximum(square / safe - mean * mean, 0.0)
        sigma = np.maximum(np.sqrt(var), self.sigma_floor)
        data = np.where(filled, count * (np.log(sigma) + var / (2.0 * sigma * sigma)), 0.0)

        p = self._prefix
        equal = p[hi1, hi1] - p[lo, hi1] - p[hi1, lo] + p[lo, lo]
        smooth = self.n_pairs - 2 * equal.sum(axis=1)

        out[valid] = data.sum(axis=1) + self.params.weight * smooth
        return out


def energy(image: GrayImage, mu, params: EnergyParams | None = None,
           sigma_floor: float = SIGMA_FLOOR) -> float:
    """Energy of a single mean vector; ``+inf`` if any mean leaves [0, 255]."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim != 1 or mu.size < 2:
        raise ValueError("mu must be a vector with at least two class means")
    if not np.all(np.isfinite(mu)):
        raise ValueError("mu must be finite")
    return HMRFEnergy(image, mu.size, params, sigma_floor)(mu)


def threshold_oracle(image: GrayImage, params: EnergyParams | None = None,
                     sigma_floor: float = SIGMA_FLOOR, k: int = 2):
    """Exhaustive minimum over all two-class threshold labelings.

    Labels pixel ``s`` as class 1 iff ``y_s <= t`` for ``t = 0..255`` and
    evaluates each labeling with :func:`labeling_energy`. For two classes this
    bounds from below every energy reachable by nearest-mean classification.

    Returns ``(best_energy, best_threshold)``; ties keep the smallest threshold.
    """
    if k != 2:
        raise ValueError("the threshold oracle only supports k = 2")
    params = params if params is not None else EnergyParams()
    y = image.pixels
    best_energy, best_t = INF, -1
    for t in range(256):
        labels = LabelField(np.where(y <= t, 1, 2), 2)
        e = labeling_energy(image, labels, params, sigma_floor)
        if e < best_energy:
            best_energy, best_t = e, t
    return best_energy, best_t
