"""
A small parameter sweep
=======================

Write a dataset and a config file, run the harness as the command line
would, and read back the per-variant best parameters.
"""

import csv
import tempfile
from pathlib import Path

from hmrf_cs import bench
from hmrf_cs.cli import main

work = Path(tempfile.mkdtemp())
bench.synth_dataset(work / "data", count=5, size=48, seed=3)

# every list is swept; 5 images x 2 variants x 2 n x 2 temp x 2 seeds = 80 rows
(work / "sweep.cfg").write_text("""\
dataset_dir = data
variants = ics, mcs
n = 5, 15
ni = 50
temp = 2, 3
seeds = 1, 2
output_dir = results
""")

# same as: hmrf-cs bench --config sweep.cfg --jobs 2
main(["bench", "--config", str(work / "sweep.cfg"), "--jobs", "2"])

with open(work / "results" / "summary.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print(row["variant"], "n =", row["n"], "T =", row["temp"],
              "mean ME", round(float(row["mean_me"]), 4),
              "mean time", round(float(row["mean_duration_s"]), 3))

with open(work / "results" / "best_params.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print("best for", row["variant"], "-> n =", row["n"], "ni =", row["ni"], "T =", row["temp"])
