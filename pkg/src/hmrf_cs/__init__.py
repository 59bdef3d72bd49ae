"""Grayscale image segmentation by HMRF energy minimization with cuckoo search.

Modules
-------
image_model
    Images, label fields, PGM I/O, nearest-mean classification and class statistics.
energy
    The HMRF energy of a class-mean vector and an exhaustive two-class oracle.
core
    Population operators shared by the variants (Lévy flights, random walks, selection).
variants
    SCS, ICS, AACS, MCS and NMCS plus the run driver.
evaluation
    Misclassification error against binary ground truth.
bench
    Synthetic datasets, parameter sweeps and CSV reports.
"""

from .core import CommonConfig, make_rng
from .energy import EnergyParams, HMRFEnergy, Neighborhood, energy, threshold_oracle
from .evaluation import BinaryMask, binarize_labels, misclassification_error
from .image_model import (
    GrayImage,
    LabelField,
    class_statistics,
    classify_nearest_mean,
    labels_to_image,
    load_pgm,
    save_pgm,
)
from .variants import PRESETS, VARIANTS, VariantConfig, preset_config, run

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "CommonConfig",
    "EnergyParams",
    "GrayImage",
    "HMRFEnergy",
    "LabelField",
    "Neighborhood",
    "PRESETS",
    "VARIANTS",
    "VariantConfig",
    "binarize_labels",
    "class_statistics",
    "classify_nearest_mean",
    "energy",
    "labels_to_image",
    "load_pgm",
    "make_rng",
    "misclassification_error",
    "preset_config",
    "run",
    "save_pgm",
    "threshold_oracle",
]
