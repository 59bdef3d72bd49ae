import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hmrf_cs import bench
from hmrf_cs.cli import main
from hmrf_cs.image_model import GrayImage, load_pgm, save_pgm

CONFIG = """\
dataset_dir = data   # two images
variants = scs
n = 5
ni = 50
temp = 2
seeds = 1
output_dir = out
"""


@pytest.fixture
def dataset(tmp_path):
    bench.synth_dataset(tmp_path / "data", count=2, size=16, seed=3)
    (tmp_path / "exp.cfg").write_text(CONFIG)
    return tmp_path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def without_duration(path):
    rows = read_rows(path)
    for r in rows:
        r.pop("duration_s")
    return rows


# -- config -----------------------------------------------------------------

def test_parse_config(tmp_path):
    cfg = bench.parse_config(
        "dataset_dir = d\nvariants = SCS, mcs\nn = 5,10\nni = 50\ntemp = 2, 3.5\n"
        "seeds = 1,2\noutput_dir = o\nb = 0.5\nneighborhood = 4\n", tmp_path)
    assert cfg.dataset_dir == tmp_path / "d" and cfg.output_dir == tmp_path / "o"
    assert cfg.variants == ["scs", "mcs"] and cfg.n == [5, 10] and cfg.temp == [2.0, 3.5]
    assert cfg.b == 0.5 and cfg.neighborhood.value == "four_connected"


@pytest.mark.parametrize("text, match", [
    ("variants = scs", "missing keys"),
    (CONFIG + "n = 4\n", "duplicate"),
    (CONFIG + "colour = red\n", "unknown key"),
    (CONFIG.replace("scs", "bogus"), "unknown variants"),
    (CONFIG + "k = 3\n", "k = 2"),
    (CONFIG.replace("n = 5", "n = five"), "^n:"),
    (CONFIG + "just words\n", "key = value"),
])
def test_parse_config_errors(text, match):
    with pytest.raises(ValueError, match=match):
        bench.parse_config(text)


def test_row_seed_stable():
    a = bench.row_seed(1, "img", "scs", 5, 50, 2.0)
    assert a == bench.row_seed(1, "img", "scs", 5, 50, 2.0)
    assert a != bench.row_seed(2, "img", "scs", 5, 50, 2.0)
    assert a != bench.row_seed(1, "img", "scs", 5, 50, 3.0)
    assert 0 <= a < 2 ** 64


def test_default_jobs(monkeypatch):
    monkeypatch.delenv(bench.JOBS_ENV, raising=False)
    assert bench.default_jobs() == 1
    monkeypatch.setenv(bench.JOBS_ENV, "4")
    assert bench.default_jobs() == 4
    monkeypatch.setenv(bench.JOBS_ENV, "many")
    with pytest.raises(ValueError):
        bench.default_jobs()


# -- harness ----------------------------------------------------------------

def test_two_images_give_two_rows(dataset):
    assert main(["bench", "--config", str(dataset / "exp.cfg")]) == 0
    rows = read_rows(dataset / "out" / "results.csv")
    assert len(rows) == 2
    assert list(rows[0]) == bench.RESULT_FIELDS
    assert [r["image"] for r in rows] == ["synth_000", "synth_001"]
    assert all(r["error"] == "" and 0 <= float(r["me"]) <= 1 for r in rows)
    assert all(len(r["mu_star"].split(";")) == 2 for r in rows)


def test_summary_recomputable(tmp_path):
    bench.synth_dataset(tmp_path / "data", count=3, size=12, seed=1)
    (tmp_path / "exp.cfg").write_text(CONFIG.replace("n = 5", "n = 5, 6")
                                      .replace("seeds = 1", "seeds = 1, 2")
                                      .replace("ni = 50", "ni = 5"))
    assert main(["bench", "--config", str(tmp_path / "exp.cfg")]) == 0
    rows = read_rows(tmp_path / "out" / "results.csv")
    assert len(rows) == 3 * 2 * 2
    summary = read_rows(tmp_path / "out" / "summary.csv")
    assert len(summary) == 2
    for s in summary:
        group = [r for r in rows if r["n"] == s["n"]]
        me = sum(float(r["me"]) for r in group) / len(group)
        dur = sum(float(r["duration_s"]) for r in group) / len(group)
        assert abs(float(s["mean_me"]) - me) <= 1e-12
        assert abs(float(s["mean_duration_s"]) - dur) <= 1e-12
        assert int(s["runs"]) == 6 and int(s["failed"]) == 0
    best = read_rows(tmp_path / "out" / "best_params.csv")
    assert len(best) == 1
    ranked = min(summary, key=lambda s: (float(s["mean_me"]), float(s["mean_duration_s"])))
    assert best[0]["n"] == ranked["n"]


def test_rerun_and_jobs_are_byte_identical(dataset):
    cfg = dataset / "exp.cfg"
    outs = []
    for jobs, name in [(1, "a"), (1, "b"), (4, "c")]:
        assert main(["bench", "--config", str(cfg), "--jobs", str(jobs),
                     "--output-dir", str(dataset / name)]) == 0
        outs.append(without_duration(dataset / name / "results.csv"))
    assert outs[0] == outs[1] == outs[2]


def test_missing_ground_truth_is_flagged(dataset):
    (dataset / "data" / "synth_001.gt.pgm").unlink()
    assert main(["bench", "--config", str(dataset / "exp.cfg")]) == 0
    rows = read_rows(dataset / "out" / "results.csv")
    assert rows[0]["error"] == "" and rows[1]["error"] != ""
    assert rows[1]["me"] == ""
    summary = read_rows(dataset / "out" / "summary.csv")
    assert summary[0]["runs"] == "1" and summary[0]["failed"] == "1"


def test_all_rows_failing_exits_nonzero(dataset):
    for p in (dataset / "data").glob("*.gt.pgm"):
        p.unlink()
    assert main(["bench", "--config", str(dataset / "exp.cfg")]) == 1


def test_missing_dataset_dir(tmp_path):
    (tmp_path / "exp.cfg").write_text(CONFIG)
    assert main(["bench", "--config", str(tmp_path / "exp.cfg")]) == 1


# -- segment ----------------------------------------------------------------

@pytest.fixture
def image_path(tmp_path):
    bench.synth_dataset(tmp_path, count=1, size=16, seed=0)
    return tmp_path / "synth_000.pgm"


def test_segment_ics_preset(image_path, tmp_path, capsys):
    out = tmp_path / "seg.pgm"
    code = main(["segment", "--image", str(image_path), "--out", str(out),
                 "--variant", "ics", "--n", "20", "--ni", "100", "--temp", "2"])
    assert code == 0
    info = json.loads(capsys.readouterr().out)
    assert info["variant"] == "ics" and math.isfinite(info["energy"])
    seg = load_pgm(out)
    assert seg.pixels.shape == (16, 16)
    assert set(np.unique(seg.pixels)) <= {0, 255}


def test_segment_binary_matches_ground_truth(image_path, tmp_path, capsys):
    out = tmp_path / "seg.pgm"
    assert main(["segment", "--image", str(image_path), "--out", str(out), "--binary"]) == 0
    capsys.readouterr()
    gt = str(tmp_path / "synth_000.gt.pgm")
    assert main(["eval", "--gt", gt, "--seg", str(out)]) == 0
    assert float(capsys.readouterr().out) < 0.1


def test_segment_missing_image_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["segment", "--out", str(tmp_path / "x.pgm")])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_segment_bogus_variant_lists_names(image_path, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["segment", "--image", str(image_path), "--out", str(tmp_path / "x.pgm"),
              "--variant", "bogus"])
    assert exc.value.code != 0
    err = capsys.readouterr().err
    assert all(name in err for name in ("scs", "ics", "aacs", "mcs", "nmcs"))


def test_segment_unreadable_image(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    assert main(["segment", "--image", str(bad), "--out", str(tmp_path / "x.pgm")]) == 1
    assert "16-bit" in capsys.readouterr().err


def test_module_entry_point(image_path, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hmrf_cs", "segment", "--image", str(image_path),
                           "--out", str(tmp_path / "x.pgm"), "--ni", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


# -- eval -------------------------------------------------------------------

def write(path, values):
    save_pgm(GrayImage(np.array([values], dtype=np.uint8)), path)
    return str(path)


@pytest.mark.parametrize("seg, expected", [
    ([0, 0, 0, 255], "0.0"), ([255, 255, 255, 0], "1.0"), ([0, 0, 255, 255], "0.25")])
def test_eval_prints_me(tmp_path, capsys, seg, expected):
    gt = write(tmp_path / "gt.pgm", [0, 0, 0, 255])
    assert main(["eval", "--gt", gt, "--seg", write(tmp_path / "s.pgm", seg)]) == 0
    assert capsys.readouterr().out.strip() == expected


def test_eval_both_polarities(tmp_path, capsys):
    gt = write(tmp_path / "gt.pgm", [0, 0, 0, 255])
    seg = write(tmp_path / "s.pgm", [255, 255, 255, 0])
    assert main(["eval", "--gt", gt, "--seg", seg, "--both-polarities"]) == 0
    assert capsys.readouterr().out.strip() == "0.0 polarity_flipped=true"


def test_eval_dimension_mismatch(tmp_path):
    gt = write(tmp_path / "gt.pgm", [0, 0, 0, 255])
    seg = write(tmp_path / "s.pgm", [0, 0])
    assert main(["eval", "--gt", gt, "--seg", seg]) != 0


# -- synth ------------------------------------------------------------------

def test_synth_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--out", str(tmp_path / d), "--count", "3", "--seed", "5"]) == 0
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_synth_noise_free_is_two_valued(tmp_path):
    bench.synth_dataset(tmp_path, count=5, size=32, noise_sigma=0, seed=2)
    for i in range(5):
        pixels = load_pgm(tmp_path / f"synth_{i:03d}.pgm").pixels
        assert set(np.unique(pixels)) == {80, 170}
        gt = load_pgm(tmp_path / f"synth_{i:03d}.gt.pgm").pixels
        assert np.array_equal(pixels == 170, gt == 255)


def test_synth_default_count(tmp_path):
    names = bench.synth_dataset(tmp_path, count=25, size=64)
    assert len(names) == 25
    assert len(list(tmp_path.glob("*.gt.pgm"))) == 25
    assert len(bench.discover_images(tmp_path)) == 25
    assert load_pgm(tmp_path / "synth_024.pgm").pixels.shape == (64, 64)


def test_synth_rejects_bad_means(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--means", "80,300"]) == 1
