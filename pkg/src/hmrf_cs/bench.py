"""Benchmark harness: synthetic datasets, parameter sweeps and CSV reports.

An experiment is described by a line-oriented ``key = value`` file::

    dataset_dir = data          # <name>.pgm images with <name>.gt.pgm masks
    variants = scs, ics, aacs, mcs, nmcs
    n = 5, 10, 15, 20, 25, 30
    ni = 50, 100
    temp = 2, 3
    b = 1.0
    k = 2
    neighborhood = eight_connected
    seeds = 1, 2, 3
    output_dir = results

Relative paths are resolved against the directory holding the config file.
Every (image, variant, n, ni, temp, seed) combination becomes one row of
``results.csv``.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
import time
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import CommonConfig
from .energy import EnergyParams, Neighborhood
from .evaluation import binarize_labels, mask_from_image, misclassification_error
from .image_model import (
    SIGMA_FLOOR,
    GrayImage,
    class_statistics,
    load_pgm,
    save_pgm,
)
from .variants import VARIANTS, VariantConfig, run

__all__ = [
    "GT_SUFFIX",
    "ExperimentConfig",
    "RunRecord",
    "Task",
    "parse_config",
    "load_config",
    "discover_images",
    "row_seed",
    "build_tasks",
    "run_task",
    "run_experiment",
    "summarize",
    "select_best",
    "write_results",
    "synth_dataset",
    "RESULT_FIELDS",
]

GT_SUFFIX = ".gt.pgm"
JOBS_ENV = "HMRF_CS_JOBS"

RESULT_FIELDS = ["image", "variant", "n", "ni", "temp", "b", "seed",
                 "me", "energy", "duration_s", "mu_star", "error"]
SUMMARY_FIELDS = ["variant", "n", "ni", "temp", "runs", "failed", "mean_me", "mean_duration_s"]


@dataclass
class ExperimentConfig:
    dataset_dir: Path
    variants: list[str]
    n: list[int]
    ni: list[int]
    temp: list[float]
    seeds: list[int]
    output_dir: Path
    b: float = 1.0
    k: int = 2
    neighborhood: Neighborhood = Neighborhood.EIGHT
    both_polarities: bool = False
    sigma_floor: float = SIGMA_FLOOR


@dataclass
class RunRecord:
    image_name: str
    variant: str
    n: int
    ni: int
    t_param: float
    b: float
    seed: int
    me: float = math.nan
    energy: float = math.nan
    duration_s: float = math.nan
    mu_star: list[float] = field(default_factory=list)
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class Task:
    image_name: str
    image_path: str
    gt_path: str
    variant: str
    n: int
    ni: int
    temp: float
    b: float
    seed: int
    k: int
    neighborhood: str
    both_polarities: bool
    sigma_floor: float


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

def _split(value: str) -> list[str]:
    items = [v.strip() for v in value.split(",")]
    if not all(items):
        raise ValueError(f"empty item in list {value!r}")
    return items


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_REQUIRED = ("dataset_dir", "variants", "n", "ni", "temp", "seeds", "output_dir")


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    base = Path(base_dir)
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")

    parsers = {
        "dataset_dir": lambda v: base / v,
        "output_dir": lambda v: base / v,
        "variants": lambda v: [s.lower() for s in _split(v)],
        "n": lambda v: [int(s) for s in _split(v)],
        "ni": lambda v: [int(s) for s in _split(v)],
        "temp": lambda v: [float(s) for s in _split(v)],
        "seeds": lambda v: [int(s) for s in _split(v)],
        "b": float,
        "k": int,
        "neighborhood": Neighborhood.parse,
        "both_polarities": _bool,
        "sigma_floor": float,
    }
    values = {}
    for key, value in raw.items():
        if key not in parsers:
            raise ValueError(f"unknown key {key!r}")
        try:
            values[key] = parsers[key](value)
        except ValueError as exc:
            raise ValueError(f"{key}: {exc}") from None
    cfg = ExperimentConfig(**values)

    bad = [v for v in cfg.variants if v not in VARIANTS]
    if bad:
        raise ValueError(f"unknown variants {bad}; expected from {', '.join(VARIANTS)}")
    if cfg.k != 2:
        raise ValueError("misclassification error needs k = 2")
    if cfg.b <= 0:
        raise ValueError("b must be positive")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


# --------------------------------------------------------------------------
# Tasks
# --------------------------------------------------------------------------

def discover_images(dataset_dir) -> list[tuple[str, Path, Path]]:
    """``(name, image_path, gt_path)`` for every image, sorted by name."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {dataset_dir}")
    out = []
    for path in sorted(dataset_dir.glob("*.pgm")):
        if path.name.endswith(GT_SUFFIX):
            continue
        out.append((path.stem, path, path.with_name(path.stem + GT_SUFFIX)))
    return out


def row_seed(base_seed: int, image_name: str, variant: str, n: int, ni: int, temp: float) -> int:
    """64-bit seed for one row, stable across runs, processes and platforms."""
    key = f"{int(base_seed)}|{image_name}|{variant}|{int(n)}|{int(ni)}|{float(temp)!r}"
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def build_tasks(cfg: ExperimentConfig) -> list[Task]:
    """All rows in output order: image, variant, n, ni, temp, seed."""
    tasks = []
    for name, image_path, gt_path in discover_images(cfg.dataset_dir):
        for variant in cfg.variants:
            for n in cfg.n:
                for ni in cfg.ni:
                    for temp in cfg.temp:
                        for seed in cfg.seeds:
                            tasks.append(Task(
                                name, str(image_path), str(gt_path), variant, n, ni,
                                temp, cfg.b, seed, cfg.k, cfg.neighborhood.value,
                                cfg.both_polarities, cfg.sigma_floor))
    return tasks


def run_task(task: Task) -> RunRecord:
    """Execute one row; failures are captured in ``RunRecord.error``."""
    record = RunRecord(task.image_name, task.variant, task.n, task.ni, task.temp,
                       task.b, task.seed)
    try:
        image = load_pgm(task.image_path)
        gt = mask_from_image(load_pgm(task.gt_path))
        if gt.bits.shape != image.pixels.shape:
            raise ValueError("ground truth and image differ in size")
        vconfig = VariantConfig(task.variant, CommonConfig(
            n=task.n, ni=task.ni,
            seed=row_seed(task.seed, task.image_name, task.variant, task.n, task.ni, task.temp)))
        eparams = EnergyParams(task.b, task.temp, task.neighborhood)
        start = time.perf_counter()
        result = run(image, task.k, vconfig, eparams)
        duration = time.perf_counter() - start
        stats = class_statistics(image, result.labels, task.sigma_floor)
        seg = binarize_labels(result.labels, stats)
        report = misclassification_error(gt, seg, task.both_polarities)
    except Exception as exc:  # noqa: BLE001 - recorded per row
        record.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return record
    record.me = report.me
    record.energy = result.energy
    record.duration_s = duration
    record.mu_star = [float(v) for v in result.mu_star]
    return record


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"{JOBS_ENV} must be an integer, got {value!r}") from None


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[RunRecord]:
    tasks = build_tasks(cfg)
    if jobs <= 1 or len(tasks) <= 1:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves task order regardless of completion order
        return list(pool.map(run_task, tasks, chunksize=1))


# --------------------------------------------------------------------------
# Aggregation and output
# --------------------------------------------------------------------------

def _key(r: RunRecord):
    return r.variant, r.n, r.ni, r.t_param


def summarize(records: list[RunRecord]) -> list[dict]:
    """Mean ME and mean duration per (variant, n, ni, temp) over successful rows."""
    groups: OrderedDict[tuple, list[RunRecord]] = OrderedDict()
    for r in records:
        groups.setdefault(_key(r), []).append(r)
    rows = []
    for (variant, n, ni, temp), group in groups.items():
        ok = [r for r in group if r.ok]
        rows.append({
            "variant": variant, "n": n, "ni": ni, "temp": temp,
            "runs": len(ok), "failed": len(group) - len(ok),
            "mean_me": math.fsum(r.me for r in ok) / len(ok) if ok else math.nan,
            "mean_duration_s": math.fsum(r.duration_s for r in ok) / len(ok) if ok else math.nan,
        })
    return rows


def select_best(summary: list[dict]) -> list[dict]:
    """Per variant, the grid point with the lowest mean ME (ties: lower mean duration)."""
    best: OrderedDict[str, dict] = OrderedDict()
    for row in summary:
        if not row["runs"]:
            continue
        current = best.get(row["variant"])
        rank = (row["mean_me"], row["mean_duration_s"])
        if current is None or rank < (current["mean_me"], current["mean_duration_s"]):
            best[row["variant"]] = row
    return list(best.values())


def _fmt(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def _record_row(r: RunRecord) -> list[str]:
    return [r.image_name, r.variant, str(r.n), str(r.ni), _fmt(float(r.t_param)),
            _fmt(float(r.b)), str(r.seed), _fmt(r.me), _fmt(r.energy), _fmt(r.duration_s),
            ";".join(repr(v) for v in r.mu_star), r.error]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_results(records: list[RunRecord], output_dir) -> dict[str, Path]:
    """Write results.csv, summary.csv, best_params.csv and per_image.csv."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("results", "summary", "best_params", "per_image")}

    _write_csv(paths["results"], RESULT_FIELDS, (_record_row(r) for r in records))
    summary = summarize(records)
    _write_csv(paths["summary"], SUMMARY_FIELDS,
               ([_fmt(row[f]) if f != "temp" else _fmt(float(row[f])) for f in SUMMARY_FIELDS]
                for row in summary))
    best = select_best(summary)
    best_fields = ["variant", "n", "ni", "temp", "mean_me", "mean_duration_s"]
    _write_csv(paths["best_params"], best_fields,
               ([_fmt(row[f]) if f != "temp" else _fmt(float(row[f])) for f in best_fields]
                for row in best))

    # per-image means at each variant's selected parameters
    chosen = {(b["variant"], b["n"], b["ni"], b["temp"]) for b in best}
    per_image: OrderedDict[tuple, list[RunRecord]] = OrderedDict()
    for r in records:
        if r.ok and _key(r) in chosen:
            per_image.setdefault((r.image_name, r.variant), []).append(r)
    _write_csv(paths["per_image"], ["image", "variant", "mean_me", "mean_duration_s"],
               ([name, variant,
                 _fmt(math.fsum(r.me for r in rs) / len(rs)),
                 _fmt(math.fsum(r.duration_s for r in rs) / len(rs))]
                for (name, variant), rs in per_image.items()))
    return paths


# --------------------------------------------------------------------------
# Synthetic data
# --------------------------------------------------------------------------

def _random_shapes(rng: np.random.Generator, size: int) -> np.ndarray:
    mask = np.zeros((size, size), dtype=bool)
    rows, cols = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(1, 4))):
        extent = int(rng.integers(max(2, size // 10), max(3, size // 4) + 1))
        r0 = int(rng.integers(0, size - extent + 1))
        c0 = int(rng.integers(0, size - extent + 1))
        if rng.random() < 0.5:
            h = int(rng.integers(max(1, extent // 2), extent + 1))
            mask[r0:r0 + h, c0:c0 + extent] = True
        else:
            radius = extent / 2
            cr, cc = r0 + radius, c0 + radius
            mask |= (rows + 0.5 - cr) ** 2 + (cols + 0.5 - cc) ** 2 <= radius ** 2
    if not mask.any():
        mask[size // 2, size // 2] = True
    return mask


def synth_dataset(out_dir, count: int = 25, size: int = 64, means=(80.0, 170.0),
                  noise_sigma: float = 20.0, seed: int = 0) -> list[str]:
    """Write ``count`` noisy two-level images with their ground-truth masks.

    Foreground shapes (rectangles and discs) take ``means[1]`` over a
    ``means[0]`` background; Gaussian noise is added and the result clamped to
    [0, 255]. Ground truth is the noiseless mask (255 = foreground). Returns
    the image names.
    """
    background, foreground = (float(m) for m in means)
    if not (0 <= background <= 255 and 0 <= foreground <= 255):
        raise ValueError("means must lie in [0, 255]")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    if count < 0 or size < 4:
        raise ValueError("count must be >= 0 and size >= 4")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for i in range(count):
        mask = _random_shapes(rng, size)
        clean = np.where(mask, foreground, background)
        noisy = clean + rng.normal(0.0, noise_sigma, size=clean.shape) if noise_sigma else clean
        pixels = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
        name = f"synth_{i:03d}"
        save_pgm(GrayImage(pixels), out / f"{name}.pgm")
        save_pgm(GrayImage(mask.astype(np.uint8) * 255), out / f"{name}{GT_SUFFIX}")
        names.append(name)
    return names
