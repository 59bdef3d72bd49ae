"""Grayscale images, label fields, PGM I/O and per-class statistics."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_FLOOR",
    "GrayImage",
    "LabelField",
    "ClassStatistics",
    "PGMError",
    "load_pgm",
    "save_pgm",
    "classify_nearest_mean",
    "class_statistics",
    "labels_to_image",
]

#: Lower bound applied to every non-empty class standard deviation.
SIGMA_FLOOR = 1e-4


class PGMError(ValueError):
    """Raised for malformed or unsupported PGM files."""


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An 8-bit grayscale image stored as a read-only ``(height, width)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            if not np.all(arr == np.round(arr)):
                raise ValueError("pixel values must be integers")
        object.__setattr__(self, "pixels", _frozen(arr, np.uint8))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} pixels, got {values.size}")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> int:
        return self.pixels.size

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage(width={self.width}, height={self.height})"


@dataclass(frozen=True, eq=False)
class LabelField:
    """Per-pixel class indices in ``1..k``."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if arr.ndim != 2:
            raise ValueError("labels must be a 2-D array")
        if arr.size and (arr.min() < 1 or arr.max() > self.k):
            raise ValueError(f"labels must lie in [1, {self.k}]")
        object.__setattr__(self, "labels", _frozen(arr, np.int64))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LabelField):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"LabelField(width={self.width}, height={self.height}, k={self.k})"


@dataclass(frozen=True)
class ClassStatistics:
    """Per-class mean, standard deviation and site count.

    Empty classes carry ``nan`` for both mean and standard deviation.
    """

    means: np.ndarray
    stds: np.ndarray
    counts: np.ndarray

    @property
    def k(self) -> int:
        return len(self.counts)


# --------------------------------------------------------------------------
# PGM I/O
# --------------------------------------------------------------------------

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _header_tokens(data: bytes, count: int):
    """Return the first `count` header tokens and the offset after them."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise PGMError("truncated PGM header")
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _parse_int(token: bytes, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise PGMError(f"invalid {what}: {token!r}") from None
    return value


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) or ASCII (P2) PGM file with maxval <= 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P5", b"P2"):
        raise PGMError(f"{os.fspath(path)}: not a P2/P5 PGM file")
    tokens, pos = _header_tokens(data, 4)
    width = _parse_int(tokens[1], "width")
    height = _parse_int(tokens[2], "height")
    maxval = _parse_int(tokens[3], "maxval")
    if width < 1 or height < 1:
        raise PGMError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise PGMError(f"invalid maxval {maxval}")
    if maxval > 255:
        raise PGMError("16-bit PGM files are not supported")
    npix = width * height

    if data[:2] == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[pos + 1:pos + 1 + npix]
        if len(raster) != npix:
            raise PGMError(f"expected {npix} raster bytes, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = data[pos:]
        # strip comments from the ASCII raster as well
        body = b"\n".join(line.split(b"#", 1)[0] for line in body.splitlines())
        try:
            values = np.array(body.split(), dtype=np.int64)
        except ValueError:
            raise PGMError("non-integer value in ASCII raster") from None
        if values.size < npix:
            raise PGMError(f"expected {npix} values, found {values.size}")
        values = values[:npix]
    if values.size and values.max() > maxval:
        raise PGMError("pixel value exceeds maxval")
    return GrayImage.from_flat(width, height, values)


def save_pgm(image: GrayImage, path) -> None:
    """Write `image` as a binary P5 PGM with maxval 255."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(image.pixels, dtype=np.uint8).tobytes())


# --------------------------------------------------------------------------
# Classification and statistics
# --------------------------------------------------------------------------

def _check_means(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    if mu.ndim != 1 or mu.size < 2:
        raise ValueError("mu must be a vector with at least two class means")
    if not np.all(np.isfinite(mu)):
        raise ValueError("mu must be finite")
    return mu


def level_classes(mu) -> np.ndarray:
    """Class index (1-based) of every gray level 0..255 under nearest-mean rules.

    Ties go to the smallest class index.
    """
    mu = _check_means(mu)
    levels = np.arange(256, dtype=np.float64)
    # argmin returns the first minimum, which is the tie-break we want
    return np.argmin(np.abs(levels[:, None] - mu[None, :]), axis=1) + 1


def classify_nearest_mean(image: GrayImage, mu) -> LabelField:
    """Assign every pixel to the class whose mean is closest to its intensity."""
    lut = level_classes(mu)
    return LabelField(lut[image.pixels], len(mu))


def class_statistics(image: GrayImage, labels: LabelField,
                     sigma_floor: float = SIGMA_FLOOR) -> ClassStatistics:
    """Empirical per-class mean and population standard deviation.

    Standard deviations of non-empty classes are floored at `sigma_floor`.
    """
    if image.pixels.shape != labels.labels.shape:
        raise ValueError(
            f"dimension mismatch: image {image.pixels.shape} vs labels {labels.labels.shape}")
    y = image.pixels.ravel().astype(np.float64)
    x = labels.labels.ravel()
    k = labels.k
    counts = np.bincount(x, minlength=k + 1)[1:]
    means = np.full(k, np.nan)
    stds = np.full(k, np.nan)
    for j in range(k):
        if counts[j]:
            values = y[x == j + 1]
            means[j] = values.mean()
            stds[j] = max(sigma_floor, float(np.sqrt(np.mean((values - means[j]) ** 2))))
    return ClassStatistics(means=means, stds=stds, counts=counts.astype(np.int64))


def labels_to_image(labels: LabelField) -> GrayImage:
    """Spread classes evenly over 0..255 (class 1 -> 0, class k -> 255)."""
    k = labels.k
    # integer round-half-up of j * 255 / (k - 1)
    palette = np.array([(2 * j * 255 + (k - 1)) // (2 * (k - 1)) for j in range(k)],
                       dtype=np.uint8)
    return GrayImage(palette[labels.labels - 1])
