import filecmp
from pathlib import Path

import numpy as np
import pytest

from isomirror import cli, graphs, plotting, synth
from isomirror.graphs import TemporalGraphSet, WeightedGraph

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(path, data_dir=None, out="out", **sections):
    lines = []
    if data_dir is not None:
        lines += ["[data]", f"dir = {data_dir}"]
    for name, body in sections.items():
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in body.items()]
    lines += ["[output]", f"dir = {out}"]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def files_in(d):
    return sorted(p.name for p in Path(d).iterdir()) if Path(d).exists() else []


@pytest.fixture(scope="module")
def planted_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("planted")
    spec = synth.read_lpp_spec(CONFIGS / "planted.ini")
    s, _ = synth.sample_lpp(spec)
    graphs.save_time_series(s, root / "data")
    return root


def toy_dir(root):
    d = root / "toy"
    d.mkdir()
    (d / "t3.tsv").write_text("3\ta\tb\t1\n3\tb\tc\t2\n", encoding="utf-8")
    (d / "t8.tsv").write_text("8\ta\tb\t1\n8\tc\ta\t1\n8\tb\tc\t5\n", encoding="utf-8")
    return d


# ---------------------------------------------------------------- stats


def test_stats_toy(tmp_path):
    cfg = write_config(tmp_path / "c.ini", toy_dir(tmp_path))
    assert cli.main(["stats", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "activity.csv").read_text() == "day,non_isolated,edges\n3,3,2\n8,3,3\n"
    assert (tmp_path / "out" / "activity.svg").read_text().lstrip().startswith("<?xml")


@pytest.mark.invariant
def test_stats_empty_directory(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    cfg = write_config(tmp_path / "c.ini", tmp_path / "empty")
    assert cli.main(["stats", "--config", str(cfg)]) != 0
    assert "no t<DAY>.tsv" in capsys.readouterr().err
    assert files_in(tmp_path / "out") == []


def test_missing_config(tmp_path):
    assert cli.main(["stats", "--config", str(tmp_path / "nope.ini")]) == 1


def test_out_override(tmp_path):
    cfg = write_config(tmp_path / "c.ini", toy_dir(tmp_path))
    assert cli.main(["stats", "--config", str(cfg), "--out", str(tmp_path / "elsewhere")]) == 0
    assert files_in(tmp_path / "elsewhere") == ["activity.csv", "activity.svg"]


# ---------------------------------------------------------------- match


def test_match_identical_graphs(tmp_path):
    rng = np.random.default_rng(0)
    a = np.triu(rng.random((9, 9)) * (rng.random((9, 9)) < 0.5), 1)
    a = a + a.T
    s = TemporalGraphSet([f"n{i}" for i in range(9)], [1, 2, 3, 4], [WeightedGraph(a)] * 4)
    graphs.save_time_series(s, tmp_path / "data")
    cfg = write_config(tmp_path / "c.ini", tmp_path / "data",
                       match={"n_random": 500, "n_random_inits": 5, "pair": "2, 3"})
    assert cli.main(["match", "--config", str(cfg)]) == 0
    rows = (tmp_path / "out" / "match_assessment.csv").read_text().splitlines()
    assert rows[0] == "pair,f_identity,f_faq,ratio"
    assert [r.split(",")[3] for r in rows[1:]] == ["1.0"] * 3
    base = (tmp_path / "out" / "match_baseline.csv").read_text().splitlines()
    assert len([ln for ln in base if not ln.startswith("#")]) == 501
    assert "# marker,pair=2-3" in base
    # identity is optimal for identical graphs: no random sample beats it
    f_i = float(next(ln for ln in base if ln.startswith("# marker,f(I)=")).split("=")[1])
    assert max(float(x) for x in base[1:501]) <= f_i
    assert files_in(tmp_path / "out") == [
        "match_assessment.csv", "match_assessment.svg", "match_baseline.csv", "match_baseline.svg",
    ]


def test_match_synthetic_row_count(tmp_path, planted_dir):
    cfg = write_config(tmp_path / "c.ini", planted_dir / "data", match={"n_random": 100, "n_random_inits": 2})
    assert cli.main(["match", "--config", str(cfg)]) == 0
    assert len((tmp_path / "out" / "match_assessment.csv").read_text().splitlines()) == 20


@pytest.mark.invariant
def test_match_bad_pair(tmp_path):
    cfg = write_config(tmp_path / "c.ini", toy_dir(tmp_path), match={"pair": "1, 7", "n_random": 10})
    assert cli.main(["match", "--config", str(cfg)]) == 1
    assert files_in(tmp_path / "out") == []


# ------------------------------------------------- mirror and changepoint


def test_mirror_then_changepoint(tmp_path, planted_dir):
    cfg = write_config(tmp_path / "c.ini", planted_dir / "data", mirror={"isomap_k": 6},
                       changepoint={"n_perm": 199})
    assert cli.main(["mirror", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    assert files_in(out) == ["distance.csv", "isomirror.csv", "isomirror.svg", "mirror.csv",
                             "mirror_summary.csv", "scree.csv"]
    summary = dict(ln.split(",") for ln in (out / "mirror_summary.csv").read_text().splitlines()[1:])
    assert summary["n_snapshots"] == "20" and summary["isomap_k"] == "6"
    assert cli.main(["changepoint", "--config", str(cfg)]) == 0
    fit = (out / "changepoint_fit.csv").read_text().splitlines()
    assert [ln.split(",")[0] for ln in fit[1:]] == ["grid", "segmented"]
    t_star = float(fit[1].split(",")[4])
    assert abs(t_star - 9.5) <= 1.5
    det = dict(ln.split(",") for ln in (out / "detector.csv").read_text().splitlines()[1:])
    assert det["detected"] == "true"


def test_mirror_identical_snapshots_flat(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.random((12, 2)) * 0.7
    a = (x @ x.T > 0.3).astype(float)
    np.fill_diagonal(a, 0)
    s = TemporalGraphSet([f"n{i}" for i in range(12)], range(6), [WeightedGraph(a)] * 6)
    graphs.save_time_series(s, tmp_path / "data")
    cfg = write_config(tmp_path / "c.ini", tmp_path / "data")
    assert cli.main(["mirror", "--config", str(cfg)]) == 0
    rows = (tmp_path / "out" / "isomirror.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)


def test_changepoint_insufficient(tmp_path, capsys):
    (tmp_path / "iso.csv").write_text("day,c1\n1,0.1\n2,0.2\n3,0.4\n4,0.3\n", encoding="utf-8")
    cfg = write_config(tmp_path / "c.ini", changepoint={"isomirror": "iso.csv"})
    assert cli.main(["changepoint", "--config", str(cfg)]) == 1
    assert "at least 5" in capsys.readouterr().err
    assert files_in(tmp_path / "out") == []


def test_changepoint_malformed_csv(tmp_path, capsys):
    (tmp_path / "iso.csv").write_text("day,c1\n1,0.1\n2,oops\n", encoding="utf-8")
    cfg = write_config(tmp_path / "c.ini", changepoint={"isomirror": "iso.csv"})
    assert cli.main(["changepoint", "--config", str(cfg)]) == 1
    assert "iso.csv:3" in capsys.readouterr().err


@pytest.mark.invariant
def test_no_partial_outputs_on_failure(tmp_path, planted_dir, monkeypatch):
    def boom(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(plotting, "isomirror_figure", boom)
    cfg = write_config(tmp_path / "c.ini", planted_dir / "data", mirror={"isomap_k": 6})
    assert cli.main(["mirror", "--config", str(cfg)]) == 1
    assert files_in(tmp_path / "out") == []


def test_rank_deficiency_reports_day(tmp_path, capsys):
    k4 = np.ones((4, 4)) - np.eye(4)
    s = TemporalGraphSet(list("abcd"), [5, 6, 7], [WeightedGraph(k4)] * 3)
    graphs.save_time_series(s, tmp_path / "data")
    cfg = write_config(tmp_path / "c.ini", tmp_path / "data")
    assert cli.main(["mirror", "--config", str(cfg)]) == 1
    assert "day 5" in capsys.readouterr().err


# ---------------------------------------------------------------- synth


@pytest.mark.invariant
def test_synth_deterministic(tmp_path):
    cfg = write_config(tmp_path / "c.ini", synth={"spec": CONFIGS / "planted.ini"})
    for name in ("a", "b"):
        assert cli.main(["synth", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    assert not filecmp.dircmp(tmp_path / "a" / "graphs", tmp_path / "b" / "graphs").diff_files
    loaded = graphs.load_time_series(tmp_path / "a" / "graphs")
    assert loaded.T == 20 and loaded.n == 100
    assert cli.main(["synth", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "3"]) == 0
    assert (tmp_path / "a" / "graphs" / "t0.tsv").read_bytes() != (tmp_path / "c" / "graphs" / "t0.tsv").read_bytes()


def test_synth_benchmark_row(tmp_path):
    cfg = write_config(tmp_path / "c.ini", mirror={"isomap_k": 6}, changepoint={"n_perm": 99})
    args = ["synth", "--config", str(cfg), "--spec", str(CONFIGS / "planted.ini"), "--benchmark", "1"]
    assert cli.main(args) == 0
    lines = (tmp_path / "out" / "benchmark.csv").read_text().splitlines()
    assert lines[0].startswith("seed,") and lines[1].startswith("0,")
    assert "# n_ok=1" in lines


def test_synth_bad_spec(tmp_path, capsys):
    (tmp_path / "bad.ini").write_text("[lpp]\nn = 10\nd = 1\ndays = 0, 1, 2\nbase_point = 0.5\n", encoding="utf-8")
    cfg = write_config(tmp_path / "c.ini")
    assert cli.main(["synth", "--config", str(cfg), "--spec", str(tmp_path / "bad.ini")]) == 1
    assert "drift_pre" in capsys.readouterr().err


# ----------------------------------------------------------- idempotence


@pytest.mark.invariant
@pytest.mark.parametrize("command", ["stats", "match", "mirror"])
def test_byte_identical_reruns(tmp_path, planted_dir, command):
    cfg = write_config(tmp_path / "c.ini", planted_dir / "data", mirror={"isomap_k": 6},
                       match={"n_random": 200, "n_random_inits": 2})
    for name in ("a", "b"):
        assert cli.main([command, "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    names = files_in(tmp_path / "a")
    assert names and names == files_in(tmp_path / "b")
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n


@pytest.mark.invariant
def test_changepoint_rerun_identical(tmp_path):
    t = np.arange(10)
    vals = np.where(t < 5, 0.1 * t, 0.5 + 0.4 * (t - 5)) + 0.01 * np.sin(t)
    (tmp_path / "iso.csv").write_text("day,c1\n" + "".join(f"{d},{float(v)!r}\n" for d, v in zip(t, vals)))
    cfg = write_config(tmp_path / "c.ini", changepoint={"isomirror": "iso.csv", "n_perm": 99})
    for name in ("a", "b"):
        assert cli.main(["changepoint", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for n in files_in(tmp_path / "a"):
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
