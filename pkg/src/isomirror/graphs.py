"""Time series of weighted graphs: data model, edge-list I/O and preprocessing.

A :class:`TemporalGraphSet` holds ``T`` snapshots on a shared, ordered vertex
list. Snapshots are stored as dense ``n x n`` adjacency matrices; the networks
this package targets have a few hundred vertices at most.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.stats import rankdata

from ._io import atomic_write
from .errors import DegenerateInputError, DomainError, DuplicateEdgeError, ParseError

_FILE_RE = re.compile(r"^t(-?\d+)\.tsv$")


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    adjacency: np.ndarray
    directed: bool = True

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"adjacency must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("adjacency has non-finite entries")
        if np.any(a < 0):
            raise DomainError("edge weights must be non-negative")
        if np.any(np.diag(a) != 0):
            raise DomainError("self-loops are not allowed (diagonal must be zero)")
        if not self.directed and not np.array_equal(a, a.T):
            raise DomainError("undirected graph must have a symmetric adjacency")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(
            self.adjacency, other.adjacency
        )

    def induced(self, index) -> "WeightedGraph":
        index = np.asarray(index, dtype=int)
        return WeightedGraph(self.adjacency[np.ix_(index, index)], self.directed)


@dataclass(frozen=True, eq=False)
class TemporalGraphSet:
    vertices: tuple
    days: tuple
    graphs: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(str(v) for v in self.vertices))
        object.__setattr__(self, "days", tuple(int(d) for d in self.days))
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if len(self.days) != len(self.graphs):
            raise DomainError("days and graphs must have equal length")
        if len(set(self.vertices)) != len(self.vertices):
            raise DomainError("vertex identifiers must be unique")
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise DomainError("days must be strictly increasing")
        n = len(self.vertices)
        for day, g in zip(self.days, self.graphs):
            if g.n != n:
                raise DomainError(f"snapshot for day {day} has order {g.n}, expected {n}")

    @property
    def T(self) -> int:
        return len(self.days)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def __len__(self):
        return self.T

    def __eq__(self, other):
        if not isinstance(other, TemporalGraphSet):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.days == other.days
            and all(a == b for a, b in zip(self.graphs, other.graphs))
        )

    def adjacency(self, i: int) -> np.ndarray:
        return self.graphs[i].adjacency

    def map(self, fn) -> "TemporalGraphSet":
        return TemporalGraphSet(self.vertices, self.days, [fn(g) for g in self.graphs])

    def restrict(self, index) -> "TemporalGraphSet":
        """Keep only the vertices at positions ``index`` (in that order)."""
        index = np.asarray(index, dtype=int)
        verts = [self.vertices[i] for i in index]
        return TemporalGraphSet(verts, self.days, [g.induced(index) for g in self.graphs])

    def take(self, positions) -> "TemporalGraphSet":
        positions = list(positions)
        return TemporalGraphSet(
            self.vertices,
            [self.days[i] for i in positions],
            [self.graphs[i] for i in positions],
        )


# ---------------------------------------------------------------- I/O


def _parse_file(path: Path, file_day: int):
    edges = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(path, line_no, f"expected 4 tab-separated fields, got {len(parts)}")
            day_s, u, v, w_s = (p.strip() for p in parts)
            try:
                day = int(day_s)
            except ValueError:
                raise ParseError(path, line_no, f"invalid day {day_s!r}") from None
            try:
                w = float(w_s)
            except ValueError:
                raise ParseError(path, line_no, f"invalid weight {w_s!r}") from None
            if not u or not v:
                raise ParseError(path, line_no, "empty vertex identifier")
            if day != file_day:
                raise ParseError(path, line_no, f"day {day} does not match file day {file_day}")
            if not np.isfinite(w):
                raise ParseError(path, line_no, f"non-finite weight {w_s!r}")
            if w < 0:
                raise DomainError(f"{path}:{line_no}: negative weight {w}")
            if u == v:
                raise DomainError(f"{path}:{line_no}: self-loop on vertex {u!r}")
            if (u, v) in edges:
                raise DuplicateEdgeError(path, line_no, f"duplicate edge ({day}, {u}, {v})")
            edges[(u, v)] = w
    return edges


def load_time_series(path) -> TemporalGraphSet:
    """Read a directory of ``t<DAY>.tsv`` edge lists.

    The vertex order comes from ``vertices.txt`` when present, otherwise it is
    the lexicographically sorted union of all ids seen in the edge lists.
    Every snapshot is loaded as a directed graph; absent edges have weight 0.
    """
    root = Path(path)
    if not root.is_dir():
        raise ParseError(root, 0, "not a directory")
    files = []
    for entry in os.listdir(root):
        m = _FILE_RE.match(entry)
        if m:
            files.append((int(m.group(1)), root / entry))
    if not files:
        raise ParseError(root, 0, "no t<DAY>.tsv files found")
    files.sort()

    per_day = [(day, _parse_file(p, day)) for day, p in files]

    vfile = root / "vertices.txt"
    if vfile.exists():
        with open(vfile, encoding="utf-8") as fh:
            vertices = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        known = set(vertices)
        for day, edges in per_day:
            for u, v in edges:
                for x in (u, v):
                    if x not in known:
                        raise ParseError(vfile, 0, f"vertex {x!r} (day {day}) missing from vertices.txt")
    else:
        ids = set()
        for _, edges in per_day:
            for u, v in edges:
                ids.add(u)
                ids.add(v)
        vertices = sorted(ids)

    pos = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    graphs = []
    for _, edges in per_day:
        a = np.zeros((n, n))
        for (u, v), w in edges.items():
            a[pos[u], pos[v]] = w
        graphs.append(WeightedGraph(a, directed=True))
    return TemporalGraphSet(vertices, [d for d, _ in per_day], graphs)


def save_time_series(s: TemporalGraphSet, path) -> None:
    """Write ``s`` in the format read by :func:`load_time_series`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with atomic_write(root / "vertices.txt") as fh:
        for v in s.vertices:
            fh.write(f"{v}\n")
    for day, g in zip(s.days, s.graphs):
        a = g.adjacency
        with atomic_write(root / f"t{day}.tsv") as fh:
            fh.write("# day\tsource\ttarget\tweight\n")
            for i, j in zip(*np.nonzero(a)):
                fh.write(f"{day}\t{s.vertices[i]}\t{s.vertices[j]}\t{float(a[i, j])!r}\n")


# ------------------------------------------------------- preprocessing


def symmetrize(g: WeightedGraph) -> WeightedGraph:
    a = g.adjacency
    return WeightedGraph((a + a.T) / 2.0, directed=False)


def rank_transform(g: WeightedGraph) -> WeightedGraph:
    """Replace nonzero weights by ``rank / (m + 1)``, ties averaged.

    Ranks are taken over the ``m`` nonzero upper-triangular entries.
    """
    a = g.adjacency
    if g.directed and not np.array_equal(a, a.T):
        raise DomainError("rank_transform expects an undirected graph; symmetrize first")
    iu = np.triu_indices(g.n, k=1)
    w = a[iu]
    nz = w > 0
    m = int(nz.sum())
    out = np.zeros_like(a)
    if m:
        vals = np.zeros_like(w)
        vals[nz] = rankdata(w[nz], method="average") / (m + 1)
        out[iu] = vals
        out = out + out.T
    return WeightedGraph(out, directed=False)


def window_filter(s: TemporalGraphSet, lo: int, hi: int) -> TemporalGraphSet:
    if lo > hi:
        raise DomainError(f"empty window [{lo}, {hi}]")
    keep = [i for i, d in enumerate(s.days) if lo <= d <= hi]
    if not keep:
        raise DegenerateInputError(f"no snapshots with day in [{lo}, {hi}]")
    return s.take(keep)


def select_days(s: TemporalGraphSet, days: Sequence[int]) -> TemporalGraphSet:
    """Keep exactly the snapshots whose day is listed in ``days``."""
    index = {d: i for i, d in enumerate(s.days)}
    missing = [d for d in days if d not in index]
    if missing:
        raise DegenerateInputError(f"requested days not present: {missing}")
    if not days:
        raise DegenerateInputError("empty day selection")
    return s.take(sorted(index[d] for d in set(days)))


def _largest_component(a: np.ndarray) -> np.ndarray:
    """Local indices of the largest connected component (ties -> lowest index)."""
    ncomp, labels = connected_components(a > 0, directed=False)
    if ncomp == 1:
        return np.arange(a.shape[0])
    sizes = np.bincount(labels)
    # labels are assigned in order of first appearance, so argmax picks the
    # component that contains the lowest-index vertex among the largest ones
    return np.flatnonzero(labels == int(np.argmax(sizes)))


def largest_common_connected_component(s: TemporalGraphSet) -> TemporalGraphSet:
    """Restrict every snapshot to a common vertex set on which all are connected.

    Start from the vertices that are non-isolated in every snapshot, then
    repeatedly drop vertices outside each snapshot's largest connected
    component until nothing changes.
    """
    mats = [np.maximum(g.adjacency, g.adjacency.T) for g in s.graphs]
    keep = np.ones(s.n, dtype=bool)
    for a in mats:
        keep &= a.sum(axis=1) > 0
    current = np.flatnonzero(keep)
    while True:
        if current.size < 2:
            raise DegenerateInputError(
                f"no common connected component with at least 2 vertices (found {current.size})"
            )
        changed = False
        for a in mats:
            sub = a[np.ix_(current, current)]
            lcc = _largest_component(sub)
            if lcc.size < current.size:
                current = current[lcc]
                changed = True
                if current.size < 2:
                    break
        if not changed:
            break
    return s.restrict(current)


def activity_stats(s: TemporalGraphSet) -> list[tuple[int, int, int]]:
    """Rows of ``(day, non_isolated_count, edge_count)``.

    Edges are unordered pairs with positive weight after symmetrization.
    """
    rows = []
    for day, g in zip(s.days, s.graphs):
        a = (g.adjacency + g.adjacency.T) > 0
        rows.append((day, int(a.any(axis=1).sum()), int(np.triu(a, k=1).sum())))
    return rows


def write_activity_csv(rows, path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "non_isolated", "edges"])
        w.writerows(rows)


def preprocess(s: TemporalGraphSet) -> TemporalGraphSet:
    """Symmetrize then rank-transform every snapshot."""
    return s.map(lambda g: rank_transform(symmetrize(g)))
