import math
from pathlib import Path

import numpy as np
import pytest

from isomirror import synth
from isomirror.errors import DomainError, SpecValidationError
from isomirror.mirror import ase, dmv_hat

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="module")
def planted():
    return synth.read_lpp_spec(CONFIGS / "planted.ini")


def er_spec(n=60, days=(0, 1, 2), seed=0):
    brk = (days[0] + days[1]) / 2
    return synth.LppSpec(n, 1, days, [math.sqrt(0.5)], [0.0], [0.0], brk, 0.0, seed)


def mc_dmv(spec, t, tp, n_samples=10**6, seed=0, n_grid=3600):
    """Monte Carlo second moment of X_t - W X_t', minimized over an O(2) grid."""
    rng = np.random.default_rng(seed)
    o = spec.dispersion * rng.choice([-1.0, 1.0], size=(n_samples, spec.d))
    m = o.mean(axis=0)
    S = o.T @ o / n_samples
    ct, cp = spec.center(t), spec.center(tp)
    best = np.inf
    for th in np.linspace(0, 2 * math.pi, n_grid, endpoint=False):
        c, s = math.cos(th), math.sin(th)
        R = np.array([[c, -s], [s, c]])
        for W in (R, R @ np.diag([1.0, -1.0])):
            delta = ct - W @ cp
            IW = np.eye(2) - W
            M = np.outer(delta, delta) + np.outer(delta, IW @ m) + np.outer(IW @ m, delta) + IW @ S @ IW.T
            best = min(best, np.linalg.eigvalsh(M)[-1])
    return math.sqrt(best)


# ------------------------------------------------------------------ spec


def test_spec_validation():
    with pytest.raises(SpecValidationError) as exc:
        synth.LppSpec(10, 1, [0, 1, 2], [0.5], [0.0], [0.0], 1.5, -0.1)
    assert exc.value.field == "dispersion"
    with pytest.raises(SpecValidationError):
        synth.LppSpec(10, 1, [0, 1, 2], [0.5], [0.0], [0.0], 2.0)
    with pytest.raises(SpecValidationError):
        synth.LppSpec(10, 2, [0, 1, 2], [0.5], [0.0, 0], [0.0, 0], 1.0)
    with pytest.raises(SpecValidationError):
        synth.sample_lpp(synth.LppSpec(10, 1, [0, 1, 2], [1.2], [0.0], [0.0], 1.0))


def test_center_piecewise(planted):
    assert np.allclose(planted.center(0), [0.5, 0])
    assert np.allclose(planted.center(9.5), [0.5 + 9.5 * 0.0103, 0])
    assert np.allclose(planted.center(19), [0.5 + 9.5 * 0.0103 + 9.5 * 0.0309, 0])


# -------------------------------------------------------------- sampling


def test_er_density():
    s, _ = synth.sample_lpp(er_spec(n=200))
    m = 200 * 199 // 2
    se = math.sqrt(0.25 / m)
    for a in s.graphs:
        dens = np.triu(a.adjacency, 1).sum() / m
        assert abs(dens - 0.5) < 3 * se


def test_sampling_deterministic(planted):
    s1, t1 = synth.sample_lpp(planted)
    s2, t2 = synth.sample_lpp(planted)
    assert s1 == s2
    assert all(np.array_equal(a.matrix, b.matrix) for a, b in zip(t1, t2))
    s3, _ = synth.sample_lpp(planted.with_seed(1))
    assert not s1 == s3


@pytest.mark.invariant
def test_sample_invariants(planted):
    s, truth = synth.sample_lpp(planted)
    assert s.T == 20 and s.n == 100 and s.days == planted.days
    for g in s.graphs:
        a = g.adjacency
        assert not g.directed and np.array_equal(a, a.T) and np.all(np.diag(a) == 0)
        assert set(np.unique(a)) <= {0.0, 1.0}
    assert [lp.day for lp in truth] == list(planted.days)


@pytest.mark.invariant
def test_edge_frequencies_match_probabilities():
    # constant center: every day is an independent replicate on fixed latents
    spec = synth.LppSpec(10, 2, range(1000), [0.5, 0.3], [0, 0], [0, 0], 500.5, [0.2, 0.3], seed=11)
    s, truth = synth.sample_lpp(spec)
    X = truth[0].matrix
    P = np.clip(X @ X.T, 0, 1)
    freq = np.mean([g.adjacency for g in s.graphs], axis=0)
    iu = np.triu_indices(10, 1)
    se = np.sqrt(P[iu] * (1 - P[iu]) / 1000)
    assert np.all(np.abs(freq[iu] - P[iu]) <= 3 * np.maximum(se, 1e-12))


# -------------------------------------------------------------- true d_MV


def test_true_dmv_same_day_and_errors(planted):
    assert synth.true_dmv(planted, 3, 3) == 0.0
    with pytest.raises(DomainError):
        synth.true_dmv(planted, 3, 99)


def test_true_dmv_zero_dispersion_closed_form():
    spec = synth.LppSpec(10, 2, range(6), [0.3, 0.1], [0.05, 0.02], [-0.01, 0.06], 2.5, 0.0)
    for t, tp in [(0, 5), (1, 3), (2, 4)]:
        want = abs(np.linalg.norm(spec.center(t)) - np.linalg.norm(spec.center(tp)))
        assert synth.true_dmv(spec, t, tp) == pytest.approx(want, abs=1e-9)


def test_true_dmv_one_dimensional():
    spec = synth.LppSpec(10, 1, range(4), [0.3], [0.05], [0.1], 1.5, 0.2)
    # W = 1 leaves the shared offset out; W = -1 doubles it
    want = min(abs(spec.center(0)[0] - spec.center(3)[0]),
               math.sqrt((spec.center(0)[0] + spec.center(3)[0]) ** 2 + 4 * 0.04))
    assert synth.true_dmv(spec, 0, 3) == pytest.approx(want, abs=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("pair", [(0, 19), (4, 12)])
def test_true_dmv_monte_carlo(planted, pair):
    spec = synth.LppSpec(10, 2, planted.days, [0.4, 0.1], [0.01, 0.004], [0.03, -0.01], 9.5, [0.15, 0.25])
    mc = mc_dmv(spec, *pair)
    assert synth.true_dmv(spec, *pair) == pytest.approx(mc, rel=0.01)


def test_true_dmv_three_dimensional_upper_bounds():
    spec = synth.LppSpec(10, 3, range(5), [0.3, 0.1, 0.1], [0.02, 0.01, 0], [0.0, 0.03, 0.01], 2.5,
                         [0.1, 0.15, 0.2])
    val = synth.true_dmv(spec, 0, 4) ** 2
    rng = np.random.default_rng(0)
    ct, cp = spec.center(0), spec.center(4)
    for _ in range(500):
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert val <= synth._second_moment_norm(ct - q @ cp, spec.offset_covariance, q) + 1e-9


@pytest.mark.invariant
@pytest.mark.slow
def test_dmv_hat_consistent_at_n400(planted):
    spec = synth.LppSpec(400, planted.d, planted.days, planted.base_point, planted.drift_pre,
                         planted.drift_post, planted.break_day, planted.dispersion, seed=5)
    s, _ = synth.sample_lpp(spec)
    for t, tp in [(0, 19), (0, 10), (5, 15), (10, 19)]:
        i, j = spec.days.index(t), spec.days.index(tp)
        est = dmv_hat(ase(s.graphs[i], 2), ase(s.graphs[j], 2))
        true = synth.true_dmv(spec, t, tp)
        assert abs(est - true) / true < 0.15


# ------------------------------------------------------------- benchmark


def test_benchmark_single_row(planted):
    out = synth.pipeline_benchmark(planted, 1, isomap_k=6, n_perm=99)
    assert len(out["rows"]) == 1
    row = out["rows"][0]
    assert row["status"] == "ok" and row["seed"] == planted.seed
    assert out["summary"]["n_ok"] == 1
    assert out["summary"]["median_day_spacing"] == 1.0


def test_benchmark_records_failures():
    # T = 3 snapshots cannot be fitted; the row is kept with a failure status
    spec = er_spec(n=30)
    out = synth.pipeline_benchmark(spec, 2, n_perm=9)
    assert [r["status"].startswith("failed") for r in out["rows"]] == [True, True]
    assert out["summary"]["n_ok"] == 0


def test_benchmark_csv(tmp_path, planted):
    out = synth.pipeline_benchmark(planted, 1, isomap_k=6, n_perm=99)
    synth.write_benchmark_csv(out, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "seed,estimated_break_day,error,detected,status"
    assert any(ln.startswith("# detection_rate=") for ln in lines)


@pytest.mark.slow
def test_benchmark_null_calibration():
    spec = synth.read_lpp_spec(CONFIGS / "null.ini")
    out = synth.pipeline_benchmark(spec, 200, n_perm=199)
    assert out["summary"]["n_ok"] == 200
    assert out["summary"]["detection_rate"] <= 0.05 + 0.05


def test_truth_csv(tmp_path):
    _, truth = synth.sample_lpp(er_spec(n=3, days=(4, 5)))
    synth.write_truth_csv(truth, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "day,vertex,x1" and len(lines) == 7
    assert lines[1].startswith("4,0,0.7071")
