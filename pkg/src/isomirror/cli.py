"""Command line entry point: ``isomirror {stats,match,mirror,changepoint,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import changepoint as cp
from . import graphs, matching, mirror, plotting, synth
from ._io import OutputBatch
from .config import PipelineConfig, load_config
from .errors import DomainError, InsufficientDataError, IsoMirrorError

log = logging.getLogger("isomirror")


def _require_data(config: PipelineConfig):
    if config.data_dir is None:
        raise DomainError("config has no [data] dir")
    return graphs.load_time_series(config.data_dir)


def prepare_series(config: PipelineConfig, s=None):
    """Load and preprocess according to ``config``.

    Order: symmetrize, rank-transform, window, day selection, common
    component. ``component_before_select`` moves the component step ahead of
    the day selection.
    """
    s = graphs.preprocess(s if s is not None else _require_data(config))
    if config.window is not None:
        s = graphs.window_filter(s, *config.window)
    if config.component_before_select:
        s = graphs.largest_common_connected_component(s)
    if config.selected_days:
        s = graphs.select_days(s, config.selected_days)
    if not config.component_before_select:
        s = graphs.largest_common_connected_component(s)
    return s


def cmd_stats(config: PipelineConfig) -> list[Path]:
    s = _require_data(config)
    rows = graphs.activity_stats(s)
    with OutputBatch(config.output_dir) as out:
        graphs.write_activity_csv(rows, out.path("activity.csv"))
        plotting.activity_figure(rows, out.path("activity.svg"))
    return out.targets


def cmd_match(config: PipelineConfig) -> list[Path]:
    # all consecutive pairs are assessed; the window only applies to the mirror
    s = graphs.preprocess(_require_data(config))
    if s.T < 2:
        raise InsufficientDataError(s.T, 2)
    kw = dict(max_iter=config.match_max_iter, tol=config.match_tol)
    rows = matching.correspondence_assessment(s, config.match_init, seed=config.seed, **kw)

    i, j = config.match_pair or (1, 2)
    if not (1 <= i <= s.T and 1 <= j <= s.T):
        raise DomainError(f"match pair ({i}, {j}) outside 1..{s.T}")
    a, b = s.adjacency(i - 1), s.adjacency(j - 1)
    n = s.n
    markers = {
        "f(I)": matching.ofv(a, b, matching.Permutation.identity(n)),
        "f(P;b)": matching.faq_match(a, b, matching.barycenter(n), **kw).ofv,
        "f(P;I)": matching.faq_match(a, b, matching.Permutation.identity(n), **kw).ofv,
    }
    rng = np.random.default_rng(config.seed)
    random_inits = [
        matching.faq_match(a, b, matching.Permutation(rng.permutation(n)), **kw).ofv
        for _ in range(config.n_random_inits)
    ]
    markers["f(P;R) max"] = max(random_inits)
    baseline = matching.random_permutation_baseline(a, b, config.n_random, config.seed)

    with OutputBatch(config.output_dir) as out:
        matching.write_assessment_csv(rows, out.path("match_assessment.csv"))
        matching.write_baseline_csv(
            baseline, out.path("match_baseline.csv"),
            {**markers, "f(P;R) min": min(random_inits), "pair": f"{i}-{j}"},
        )
        plotting.assessment_figure(rows, out.path("match_assessment.svg"))
        plotting.baseline_figure(baseline, markers, out.path("match_baseline.svg"), random_inits)
    return out.targets


def _fits(config, days, values):
    fits = {}
    if config.changepoint in ("grid", "both"):
        fits["grid"] = cp.grid_breakpoint(days, values)
    if config.changepoint in ("segmented", "both"):
        fits["segmented"] = cp.segmented_fit(days, values)
    return fits


def cmd_mirror(config: PipelineConfig) -> list[Path]:
    s = prepare_series(config)
    D, curve, iso = mirror.mirror_pipeline(s, config.ase_d, config.mirror_m, config.isomap_k)
    fit = None
    if s.T >= cp.MIN_POINTS:
        fits = _fits(config, iso.days, iso.values)
        fit = fits.get("segmented", fits.get("grid"))
    mean_edges = float(np.mean([r[2] for r in graphs.activity_stats(s)]))
    with OutputBatch(config.output_dir) as out:
        mirror.write_scree_csv(s, out.path("scree.csv"))
        mirror.write_distance_csv(D, out.path("distance.csv"))
        mirror.write_curve_csv(curve, out.path("mirror.csv"))
        mirror.write_curve_csv(iso, out.path("isomirror.csv"))
        with out.open("mirror_summary.csv") as fh:
            fh.write("key,value\n")
            fh.write(f"n_snapshots,{s.T}\n")
            fh.write(f"n_vertices,{s.n}\n")
            fh.write(f"mean_edges,{mean_edges!r}\n")
            fh.write(f"isomap_k,{iso.k}\n")
            fh.write(f"mirror_dims,{curve.coordinates.shape[1]}\n")
        plotting.isomirror_figure(iso.days, iso.values, out.path("isomirror.svg"), fit)
    return out.targets


def cmd_changepoint(config: PipelineConfig) -> list[Path]:
    src = config.isomirror_csv or Path(config.output_dir) / "isomirror.csv"
    iso = mirror.read_isomirror_csv(src)
    if len(iso.days) < cp.MIN_POINTS:
        raise InsufficientDataError(len(iso.days), cp.MIN_POINTS)
    fits = _fits(config, iso.days, iso.values)
    det = cp.cusum_slope_detect(iso.days, iso.values, config.n_perm, config.detector_level, config.seed)
    with OutputBatch(config.output_dir) as out:
        cp.write_fit_report(fits, out.path("changepoint_fit.csv"))
        cp.write_fitted_values(iso.days, iso.values, fits, out.path("changepoint_fitted.csv"))
        cp.write_detector_report(det, out.path("detector.csv"))
    return out.targets


def cmd_synth(config: PipelineConfig, spec_path=None, benchmark=None, seed=None) -> list[Path]:
    spec_path = spec_path or config.lpp_spec
    if spec_path is None:
        raise DomainError("no LPP spec given (--spec or [synth] spec)")
    spec = synth.read_lpp_spec(spec_path)
    if seed is not None:
        spec = spec.with_seed(seed)
    s, truth = synth.sample_lpp(spec)
    n_bench = config.benchmark_seeds if benchmark is None else benchmark
    bench = None
    if n_bench:
        bench = synth.pipeline_benchmark(
            spec, n_bench, config.ase_d, config.mirror_m, config.isomap_k,
            config.detector_level, config.n_perm,
        )
    out_dir = Path(config.output_dir)
    with OutputBatch(out_dir) as out:
        synth.write_truth_csv(truth, out.path("latent_positions.csv"))
        if bench is not None:
            synth.write_benchmark_csv(bench, out.path("benchmark.csv"))
    graphs.save_time_series(s, out_dir / "graphs")
    return out.targets + [out_dir / "graphs"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isomirror",
        description="Iso-mirror estimation and change point detection for time series of networks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "stats": "vertex and edge counts per snapshot",
        "match": "assess the given vertex correspondence with FAQ graph matching",
        "mirror": "distance matrix, mirror and iso-mirror",
        "changepoint": "breakpoint fit and slope-change test on an iso-mirror CSV",
        "synth": "sample a synthetic time series (optionally benchmark the pipeline)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        if name == "synth":
            p.add_argument("--spec", help="LPP spec file (overrides [synth] spec)")
            p.add_argument("--benchmark", type=int, help="number of benchmark seeds")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = load_config(args.config).with_overrides(args.out, args.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "synth":
                written = cmd_synth(config, args.spec, args.benchmark, args.seed)
            else:
                written = COMMANDS[args.command](config)
    except (IsoMirrorError, OSError) as exc:
        print(f"isomirror {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        log.info("wrote %s", path)
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "match": cmd_match,
    "mirror": cmd_mirror,
    "changepoint": cmd_changepoint,
    "synth": cmd_synth,
}

if __name__ == "__main__":
    sys.exit(main())
