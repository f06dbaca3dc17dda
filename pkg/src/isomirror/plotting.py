"""SVG figures for the command-line reports.

Output is deterministic: the SVG id salt is fixed and no creation date is
embedded, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "isomirror",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (6.4, 3.6),
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def activity_figure(rows, path):
    days = [r[0] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(days, [r[1] for r in rows], "o-", ms=3, color="C0", label="non-isolated vertices")
        ax.set_xlabel("day")
        ax.set_ylabel("non-isolated vertices", color="C0")
        ax2 = ax.twinx()
        ax2.plot(days, [r[2] for r in rows], "s-", ms=3, color="C1", label="edges")
        ax2.set_ylabel("edges", color="C1")
        ax2.spines["right"].set_visible(True)
        _save(fig, path)


def assessment_figure(rows, path):
    """Objective values for the given correspondence and FAQ, and their ratio."""
    pairs = [r[0] for r in rows]
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.0))
        top.plot(pairs, [r[1] for r in rows], "o-", ms=3, label="f(I)")
        top.plot(pairs, [r[2] for r in rows], "x--", ms=4, label="f(FAQ)")
        top.set_ylabel("objective value")
        top.legend(frameon=False)
        bottom.plot(pairs, [r[3] for r in rows], "o-", ms=3, color="C2")
        bottom.axhline(1.0, color="0.6", lw=0.8)
        bottom.set_ylabel("f(FAQ) / f(I)")
        bottom.set_xlabel("pair (i, i+1)")
        _save(fig, path)


def baseline_figure(values, markers, path, random_init_values=()):
    """Histogram of random-permutation objective values with reference markers."""
    values = np.asarray(values, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.hist(values, bins=60, color="0.75", edgecolor="0.5", lw=0.3, label="random R")
        for i, (name, v) in enumerate(markers.items()):
            ax.axvline(v, color=f"C{i}", lw=1.2, ls="-" if i == 0 else "--", label=name)
        for v in random_init_values:
            ax.axvline(v, color="C5", lw=0.4, alpha=0.3)
        ax.set_xlabel("objective value")
        ax.set_ylabel("count")
        ax.legend(frameon=False, fontsize=7)
        _save(fig, path)


def isomirror_figure(days, values, path, fit=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(days, values, "o", ms=4, color="C0", label="iso-mirror")
        if fit is not None:
            ax.plot(days, fit.fitted, "-", color="C3", lw=1.2, label="segmented fit")
            ax.axvline(fit.t_star, color="C3", ls=":", lw=1.0)
            ax.annotate(f"t* = {fit.t_star:g}", (fit.t_star, ax.get_ylim()[1]),
                        xytext=(3, -10), textcoords="offset points", fontsize=8, color="C3")
        ax.set_xlabel("day")
        ax.set_ylabel("iso-mirror")
        ax.legend(frameon=False)
        _save(fig, path)
