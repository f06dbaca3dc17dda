"""Synthetic random dot product graph time series with a planted slope change.

Each vertex carries a fixed random offset ``o_i`` (independent signs scaled
by ``dispersion``). At day ``t`` its latent position is ``center(t) + o_i``,
where the center drifts linearly with a change of velocity at ``break_day``.
Edges are independent Bernoulli draws with probability equal to the inner
product of the endpoint latent positions.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.linalg import expm

from ._io import atomic_write
from .changepoint import cusum_slope_detect, grid_breakpoint
from .errors import DomainError, IsoMirrorError, SpecValidationError
from .graphs import TemporalGraphSet, WeightedGraph
from .mirror import LatentPositions, mirror_pipeline

CLAMP_TOLERANCE = 0.05


def _vec(x, name, d=None):
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.ndim != 1:
        raise SpecValidationError(name, "must be a vector")
    if d is not None and a.size != d:
        raise SpecValidationError(name, f"expected length {d}, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise SpecValidationError(name, "non-finite entries")
    return a


@dataclass(frozen=True)
class LppSpec:
    n: int
    d: int
    days: tuple
    base_point: np.ndarray
    drift_pre: np.ndarray
    drift_post: np.ndarray
    break_day: float
    dispersion: object = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 2:
            raise SpecValidationError("n", "need at least 2 vertices")
        if int(self.d) < 1:
            raise SpecValidationError("d", "must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))
        days = tuple(int(x) for x in self.days)
        if len(days) < 2 or any(b <= a for a, b in zip(days, days[1:])):
            raise SpecValidationError("days", "need at least 2 strictly increasing days")
        object.__setattr__(self, "days", days)
        for name in ("base_point", "drift_pre", "drift_post"):
            object.__setattr__(self, name, _vec(getattr(self, name), name, self.d))
        if not days[0] < float(self.break_day) < days[-1]:
            raise SpecValidationError("break_day", f"must lie strictly inside ({days[0]}, {days[-1]})")
        object.__setattr__(self, "break_day", float(self.break_day))
        disp = np.asarray(self.dispersion, dtype=float)
        if disp.ndim == 0:
            disp = np.full(self.d, float(disp))
        disp = _vec(disp, "dispersion", self.d)
        if np.any(disp < 0):
            raise SpecValidationError("dispersion", "must be >= 0")
        object.__setattr__(self, "dispersion", disp)
        object.__setattr__(self, "seed", int(self.seed))

    def center(self, t: float) -> np.ndarray:
        return (
            self.base_point
            + self.drift_pre * min(t, self.break_day)
            + self.drift_post * max(t - self.break_day, 0.0)
        )

    @property
    def offset_covariance(self) -> np.ndarray:
        return np.diag(self.dispersion ** 2)

    def with_seed(self, seed: int) -> "LppSpec":
        return replace(self, seed=seed)


def offsets(spec: LppSpec, rng: np.random.Generator) -> np.ndarray:
    return spec.dispersion * rng.choice([-1.0, 1.0], size=(spec.n, spec.d))


def sample_lpp(spec: LppSpec):
    """Draw a time series from ``spec``.

    Returns the :class:`TemporalGraphSet` (undirected, hollow) and the ground
    truth latent positions for each day.
    """
    rng = np.random.default_rng(spec.seed)
    off = offsets(spec, rng)
    iu = np.triu_indices(spec.n, k=1)
    vertices = [f"v{i:0{len(str(spec.n - 1))}d}" for i in range(spec.n)]
    graphs, truth = [], []
    for day in spec.days:
        X = spec.center(day) + off
        P = X @ X.T
        pu = P[iu]
        if pu.min() < -CLAMP_TOLERANCE or pu.max() > 1 + CLAMP_TOLERANCE:
            raise SpecValidationError(
                "base_point/drift/dispersion",
                f"edge probabilities on day {day} span [{pu.min():.3f}, {pu.max():.3f}]",
            )
        edges = rng.random(pu.size) < np.clip(pu, 0.0, 1.0)
        a = np.zeros((spec.n, spec.n))
        a[iu] = edges
        a = a + a.T
        graphs.append(WeightedGraph(a, directed=False))
        truth.append(LatentPositions(X, day))
    return TemporalGraphSet(vertices, spec.days, graphs), truth


def _second_moment_norm(delta: np.ndarray, cov: np.ndarray, W: np.ndarray) -> float:
    diff = delta[:, None]
    IW = np.eye(W.shape[0]) - W
    M = diff @ diff.T + IW @ cov @ IW.T
    return float(np.linalg.eigvalsh((M + M.T) / 2)[-1])


def _rotation2(theta: float, reflect: bool) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([1.0, -1.0]) if reflect else R


def _min_over_orthogonal(fun, d: int, rng=None) -> float:
    """Minimum of ``fun(W)`` over the orthogonal group O(d)."""
    if d == 1:
        return min(fun(np.eye(1)), fun(-np.eye(1)))
    if d == 2:
        best = math.inf
        grid = np.linspace(0, 2 * math.pi, 721)[:-1]
        step = grid[1] - grid[0]
        for reflect in (False, True):
            vals = [fun(_rotation2(th, reflect)) for th in grid]
            th0 = grid[int(np.argmin(vals))]
            res = minimize_scalar(
                lambda th: fun(_rotation2(th, reflect)),
                bounds=(th0 - step, th0 + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = min(best, min(vals), float(res.fun))
        return best
    rng = rng or np.random.default_rng(0)
    iu = np.triu_indices(d, k=1)

    def as_w(p, flip):
        S = np.zeros((d, d))
        S[iu] = p
        W = expm(S - S.T)
        return W @ flip

    best = math.inf
    for flip in (np.eye(d), np.diag([-1.0] + [1.0] * (d - 1))):
        starts = [np.zeros(len(iu[0]))] + [rng.normal(scale=1.5, size=len(iu[0])) for _ in range(8)]
        for p0 in starts:
            res = minimize(lambda p: fun(as_w(p, flip)), p0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
            best = min(best, float(res.fun))
    return best


def true_dmv(spec: LppSpec, t, t_prime) -> float:
    """Population d_MV between the latent distributions at days ``t`` and ``t_prime``.

    Offsets are shared across time, so ``X_t - W X_t' = (c_t - W c_t') + (I - W) o``
    and its second moment is ``delta delta^T + (I - W) S (I - W)^T`` with ``S``
    the offset covariance. The distance is the square root of the smallest
    spectral norm of that matrix over orthogonal ``W``.
    """
    for day in (t, t_prime):
        if day not in spec.days:
            raise DomainError(f"day {day} is not in the spec")
    if t == t_prime:
        return 0.0
    ct, cp = spec.center(t), spec.center(t_prime)
    cov = spec.offset_covariance
    value = _min_over_orthogonal(lambda W: _second_moment_norm(ct - W @ cp, cov, W), spec.d)
    return math.sqrt(max(value, 0.0))


def pipeline_benchmark(
    spec: LppSpec,
    n_seeds: int,
    ase_d: Optional[int] = None,
    mirror_m: int = 2,
    isomap_k: Optional[int] = None,
    level: float = 0.05,
    n_perm: int = 999,
) -> dict:
    """Run sample -> mirror -> breakpoint -> detector over ``n_seeds`` seeds.

    Failed replicates are recorded with ``status`` set to the error message.
    """
    if n_seeds < 1:
        raise DomainError("n_seeds must be >= 1")
    ase_d = spec.d if ase_d is None else ase_d
    spacing = float(np.median(np.diff(spec.days)))
    rows = []
    for r in range(n_seeds):
        seed = spec.seed + r
        try:
            s, _ = sample_lpp(spec.with_seed(seed))
            _, _, iso = mirror_pipeline(s, ase_d, mirror_m, isomap_k)
            fit = grid_breakpoint(iso.days, iso.values)
            det = cusum_slope_detect(iso.days, iso.values, n_perm=n_perm, level=level, seed=seed)
            rows.append({
                "seed": seed,
                "estimated_break_day": fit.t_star,
                "error": fit.t_star - spec.break_day,
                "detected": bool(det.detected),
                "status": "ok",
            })
        except IsoMirrorError as exc:
            rows.append({
                "seed": seed, "estimated_break_day": math.nan, "error": math.nan,
                "detected": False, "status": f"failed: {exc}",
            })
    ok = [row for row in rows if row["status"] == "ok"]
    errs = np.abs([row["error"] for row in ok])
    summary = {
        "n_seeds": n_seeds,
        "n_ok": len(ok),
        "median_abs_error": float(np.median(errs)) if len(ok) else math.nan,
        "within_tolerance_rate": float(np.mean(errs <= 1.5 * spacing)) if len(ok) else math.nan,
        "detection_rate": float(np.mean([row["detected"] for row in rows])),
        "median_day_spacing": spacing,
    }
    return {"rows": rows, "summary": summary}


# ------------------------------------------------------------------ I/O


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _dispersion(text: str):
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def read_lpp_spec(path) -> LppSpec:
    """Read an ``[lpp]`` section; vectors and ``days`` are comma-separated.

    ``dispersion`` is a single value or one value per latent coordinate.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise SpecValidationError("path", f"cannot read {path}")
    if "lpp" not in cp:
        raise SpecValidationError("lpp", f"{path} has no [lpp] section")
    sec = cp["lpp"]
    required = ("n", "d", "days", "base_point", "drift_pre", "drift_post", "break_day")
    for key in required:
        if key not in sec:
            raise SpecValidationError(key, "missing")
    try:
        return LppSpec(
            n=sec.getint("n"),
            d=sec.getint("d"),
            days=[int(x) for x in _floats(sec["days"])],
            base_point=_floats(sec["base_point"]),
            drift_pre=_floats(sec["drift_pre"]),
            drift_post=_floats(sec["drift_post"]),
            break_day=sec.getfloat("break_day"),
            dispersion=_dispersion(sec.get("dispersion", "0")),
            seed=sec.getint("seed", fallback=0),
        )
    except ValueError as exc:
        if isinstance(exc, SpecValidationError):
            raise
        raise SpecValidationError("lpp", str(exc)) from None


def write_truth_csv(truth, path) -> None:
    """Ground-truth latent positions as ``day,vertex,x1..xd``."""
    d = truth[0].d
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "vertex"] + [f"x{j + 1}" for j in range(d)])
        for lp in truth:
            for i, row in enumerate(lp.matrix):
                w.writerow([lp.day, i] + [repr(float(x)) for x in row])


def write_benchmark_csv(result: dict, path) -> None:
    fields = ["seed", "estimated_break_day", "error", "detected", "status"]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in result["rows"]:
            w.writerow([row["seed"], repr(row["estimated_break_day"]), repr(row["error"]),
                        str(row["detected"]).lower(), row["status"]])
        for key, value in result["summary"].items():
            fh.write(f"# {key}={value!r}\n")
