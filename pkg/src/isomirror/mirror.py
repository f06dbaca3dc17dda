"""Spectral mirror estimation.

Snapshots are embedded with adjacency spectral embedding, compared with the
Procrustes-aligned spectral-norm distance, and the resulting distance matrix
is turned into a curve with classical MDS. ISOMAP on that curve gives the
one-dimensional iso-mirror.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, shortest_path

from ._io import atomic_write
from .errors import ConnectivityError, DomainError, InsufficientDataError, ParseError, RankDeficiencyError
from .graphs import TemporalGraphSet, WeightedGraph


@dataclass(frozen=True)
class LatentPositions:
    matrix: np.ndarray
    day: Optional[int] = None
    eigenvalues: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class DistanceMatrix:
    matrix: np.ndarray
    days: tuple


@dataclass(frozen=True)
class MirrorCurve:
    coordinates: np.ndarray
    days: tuple
    eigenvalues: np.ndarray
    reduced: bool = False


@dataclass(frozen=True)
class IsoMirror:
    values: np.ndarray
    days: tuple
    k: int = 0


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's first non-negligible entry is positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if big.size and col[big[0]] < 0:
            out[:, j] = -col
    return out


def _as_array(A) -> np.ndarray:
    return A.adjacency if isinstance(A, WeightedGraph) else np.asarray(A, dtype=float)


def ase(A, d: int, day=None) -> LatentPositions:
    """Adjacency spectral embedding from the ``d`` largest positive eigenpairs."""
    a = _as_array(A)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise DomainError("ase expects a symmetric square matrix")
    if d < 1:
        raise DomainError("embedding dimension must be >= 1")
    evals, evecs = np.linalg.eigh(a)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    tol = a.shape[0] * np.finfo(float).eps * max(abs(evals[0]), abs(evals[-1]), 1.0)
    n_pos = int(np.sum(evals > tol))
    if n_pos < d:
        raise RankDeficiencyError(n_pos, d, day)
    u = _fix_signs(evecs[:, :d])
    return LatentPositions(u * np.sqrt(evals[:d]), day, evals[:d].copy())


def scree(A, k: int = 10) -> np.ndarray:
    """Largest ``k`` eigenvalues of ``A`` in descending order."""
    evals = np.linalg.eigvalsh(_as_array(A))[::-1]
    return evals[:k]


def procrustes_align(X, Y) -> np.ndarray:
    """Orthogonal ``W`` minimizing ``||X - Y W||_F``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise DomainError(f"shape mismatch {X.shape} vs {Y.shape}")
    u, _, vt = np.linalg.svd(Y.T @ X)
    return u @ vt


def _matrix_of(X) -> np.ndarray:
    return X.matrix if isinstance(X, LatentPositions) else np.asarray(X, dtype=float)


def dmv_hat(X, Y) -> float:
    """Estimated d_MV distance: ``sigma_max(X - Y W) / sqrt(n)`` with Procrustes ``W``."""
    x, y = _matrix_of(X), _matrix_of(Y)
    if x.shape != y.shape:
        raise DomainError(f"shape mismatch {x.shape} vs {y.shape}")
    if np.array_equal(x, y):
        return 0.0
    w = procrustes_align(x, y)
    return float(np.linalg.norm(x - y @ w, 2) / math.sqrt(x.shape[0]))


def embed_all(s: TemporalGraphSet, d: int) -> list[LatentPositions]:
    return [ase(g, d, day) for day, g in zip(s.days, s.graphs)]


def distance_matrix(s, d: int = 2) -> DistanceMatrix:
    """Pairwise ``dmv_hat`` between the ASEs of all snapshots.

    ``s`` is a :class:`TemporalGraphSet` or a list of :class:`LatentPositions`.
    """
    if isinstance(s, TemporalGraphSet):
        emb = embed_all(s, d)
        days = s.days
    else:
        emb = list(s)
        days = tuple(e.day for e in emb)
    T = len(emb)
    D = np.zeros((T, T))
    for i in range(T):
        for j in range(i + 1, T):
            D[i, j] = D[j, i] = dmv_hat(emb[i], emb[j])
    return DistanceMatrix(D, tuple(days))


def cmds(D, m: int = 2) -> MirrorCurve:
    """Classical MDS keeping the top ``m`` positive eigenpairs.

    When fewer than ``m`` positive eigenvalues exist the available components
    are returned, ``reduced`` is set and a warning is issued.
    """
    if isinstance(D, DistanceMatrix):
        mat, days = D.matrix, D.days
    else:
        mat = np.asarray(D, dtype=float)
        days = tuple(range(mat.shape[0]))
    if m < 1:
        raise DomainError("m must be >= 1")
    T = mat.shape[0]
    J = np.eye(T) - np.full((T, T), 1.0 / T)
    B = -0.5 * J @ (mat * mat) @ J
    B = (B + B.T) / 2
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    tol = T * np.finfo(float).eps * max(abs(evals[0]), abs(evals[-1]), 0.0)
    pos = int(np.sum(evals > max(tol, 1e-300)))
    keep = min(m, pos)
    reduced = keep < m
    if reduced:
        warnings.warn(
            f"cmds: only {pos} positive eigenvalue(s), returning {keep} of {m} components",
            RuntimeWarning,
            stacklevel=2,
        )
    vecs = _fix_signs(evecs[:, :keep])
    coords = vecs * np.sqrt(evals[:keep])
    coords = coords - coords.mean(axis=0)
    return MirrorCurve(coords, tuple(days), evals[:keep].copy(), reduced)


def knn_graph(points: np.ndarray, k: int) -> np.ndarray:
    """Symmetric k-NN graph as a dense matrix; ``inf`` marks absent edges."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    T = pts.shape[0]
    dist = np.sqrt(np.maximum(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1), 0.0))
    G = np.full((T, T), np.inf)
    k = min(k, T - 1)
    for i in range(T):
        order = np.argsort(dist[i], kind="stable")
        nbrs = [j for j in order if j != i][:k]
        G[i, nbrs] = dist[i, nbrs]
    G = np.minimum(G, G.T)
    np.fill_diagonal(G, np.inf)
    return G


def _n_components(G: np.ndarray) -> int:
    ncomp, _ = connected_components(np.isfinite(G), directed=False)
    return int(ncomp)


def auto_k(points, k_min: int = 2) -> int:
    """Smallest ``k >= k_min`` whose symmetric k-NN graph is connected."""
    T = len(points)
    for k in range(k_min, max(T, k_min + 1)):
        if _n_components(knn_graph(points, k)) == 1:
            return k
    return max(T - 1, 1)


def geodesic_distances(points, k: int) -> np.ndarray:
    G = knn_graph(points, k)
    ncomp = _n_components(G)
    if ncomp > 1:
        raise ConnectivityError(ncomp, k)
    graph = csgraph_from_dense(G, null_value=np.inf)
    return shortest_path(graph, method="D", directed=False)


def _orient(values: np.ndarray, days: Sequence) -> np.ndarray:
    t = np.asarray(days, dtype=float)
    slope = np.polyfit(t, values, 1)[0] if np.ptp(t) > 0 else 0.0
    return -values if slope < 0 else values


def isomap(curve, k: Optional[int] = None, m: int = 1):
    """ISOMAP re-parametrization of a mirror curve.

    ``k=None`` selects the smallest connected neighbourhood size (at least 2).
    With ``m == 1`` an :class:`IsoMirror` oriented to increase with day is
    returned; otherwise the :class:`MirrorCurve` of the geodesic MDS.
    """
    if isinstance(curve, MirrorCurve):
        pts, days = curve.coordinates, curve.days
    else:
        pts = np.asarray(curve, dtype=float)
        days = tuple(range(pts.shape[0]))
    if pts.ndim == 1:
        pts = pts[:, None]
    T = pts.shape[0]
    if T < 3:
        raise InsufficientDataError(T, 3)
    if pts.shape[1] == 0:
        pts = np.zeros((T, 1))
    if k is None:
        k = auto_k(pts)
    if k < 1:
        raise DomainError("k must be >= 1")
    geo = geodesic_distances(pts, k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        emb = cmds(DistanceMatrix(geo, tuple(days)), m)
    if m != 1:
        return emb
    values = emb.coordinates[:, 0] if emb.coordinates.shape[1] else np.zeros(T)
    values = _orient(values - values.mean(), days)
    return IsoMirror(values, tuple(days), k)


def mirror_pipeline(s: TemporalGraphSet, d: int = 2, m: int = 2, k: Optional[int] = None):
    """Distance matrix, mirror and iso-mirror of a preprocessed time series."""
    D = distance_matrix(s, d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        curve = cmds(D, m)
    iso = isomap(curve, k, 1)
    return D, curve, iso


# -------------------------------------------------------------- CSV I/O


def write_distance_csv(D: DistanceMatrix, path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day"] + list(D.days))
        for day, row in zip(D.days, D.matrix):
            w.writerow([day] + [repr(float(x)) for x in row])


def read_distance_csv(path) -> DistanceMatrix:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    days = tuple(int(x) for x in rows[0][1:])
    mat = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return DistanceMatrix(mat, days)


def write_curve_csv(curve, path) -> None:
    """Write a MirrorCurve or IsoMirror as ``day,c1[,c2,...]``."""
    if isinstance(curve, IsoMirror):
        coords = np.asarray(curve.values)[:, None]
    else:
        coords = curve.coordinates
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day"] + [f"c{j + 1}" for j in range(coords.shape[1])])
        for day, row in zip(curve.days, coords):
            w.writerow([day] + [repr(float(x)) for x in row])


def read_isomirror_csv(path) -> IsoMirror:
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or rows[0][0] != "day":
        raise ParseError(path, 1, "expected a header starting with 'day'")
    days, values = [], []
    for line_no, r in enumerate(rows[1:], start=2):
        try:
            days.append(int(float(r[0])))
            values.append(float(r[1]))
        except (ValueError, IndexError):
            raise ParseError(path, line_no, f"cannot read day and value from {r!r}") from None
    return IsoMirror(np.array(values), tuple(days))


def write_scree_csv(s: TemporalGraphSet, path, k: int = 10) -> None:
    k = min(k, s.n)
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day"] + [f"ev{j + 1}" for j in range(k)])
        for day, g in zip(s.days, s.graphs):
            w.writerow([day] + [repr(float(x)) for x in scree(g, k)])
