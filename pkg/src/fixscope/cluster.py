"""Single-linkage clustering with cophenetic validation and an
inconsistency-based automatic cutoff.

Single linkage is computed from the minimum spanning tree of the point
set: sorting MST edges by (weight, smaller index, larger index) and
replaying them through a union-find gives the merge history with a fully
documented tie-break, and cut memberships that are invariant to input
row permutations.  A streaming variant computes distances on the fly for
corpora too large to hold a condensed distance matrix.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CondensedDistances",
    "Dendrogram",
    "Merge",
    "ClusterAssignment",
    "TriageLabel",
    "AllZeroError",
    "UnknownClusterError",
    "pairwise_distances",
    "single_linkage",
    "single_linkage_rows",
    "cophenetic_coefficient",
    "cophenetic_coefficient_rows",
    "cophenetic_distances",
    "inconsistency_coefficients",
    "select_cutoff",
    "cut_clusters",
    "sample_cluster",
    "dendrogram_to_json",
]


class AllZeroError(ValueError):
    """Every inconsistency coefficient is zero; no cutoff exists."""


class UnknownClusterError(KeyError):
    """Requested cluster id is not in the assignment."""


class TriageLabel(enum.Enum):
    BUG_FIX = "BUG-FIX"
    FIX_INDUCED = "FIX-INDUCED"
    REFACTORING = "REFACTORING"
    UNREVIEWED = "UNREVIEWED"


@dataclass(frozen=True)
class CondensedDistances:
    """Upper triangle of the pairwise Euclidean distance matrix."""

    values: np.ndarray
    n: int

    def index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return self.n * i - i * (i + 1) // 2 + (j - i - 1)

    def get(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return float(self.values[self.index(i, j)])


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge history; leaf ids are row indices, merge k creates id n+k."""

    n_leaves: int
    merges: tuple[Merge, ...]

    def link_children(self, k: int) -> tuple[int, int]:
        merge = self.merges[k]
        return merge.left, merge.right

    def leaf_members(self) -> dict[int, list[int]]:
        """Members of every node id (leaves and merge products)."""
        members: dict[int, list[int]] = {i: [i] for i in range(self.n_leaves)}
        for k, merge in enumerate(self.merges):
            members[self.n_leaves + k] = members[merge.left] + members[merge.right]
        return members


@dataclass
class ClusterAssignment:
    """Retained clusters plus the per-item assignment (None = unclustered)."""

    clusters: dict[int, tuple] = field(default_factory=dict)
    assignment: dict = field(default_factory=dict)
    min_size: int = 1


def pairwise_distances(matrix) -> CondensedDistances:
    """Condensed Euclidean distances over the matrix rows."""
    rows = np.asarray(getattr(matrix, "values", matrix), dtype=np.float64)
    n = rows.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    pos = 0
    for i in range(n - 1):
        diff = rows[i + 1:] - rows[i]
        seg = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        out[pos:pos + seg.shape[0]] = seg
        pos += seg.shape[0]
    return CondensedDistances(values=out, n=n)


def _prim_mst(n: int, row_of) -> list[tuple[float, int, int]]:
    """MST edges via Prim's scan; deterministic under equal weights."""
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_from = np.full(n, -1, dtype=np.int64)
    in_tree[0] = True
    current = 0
    edges: list[tuple[float, int, int]] = []
    for _ in range(n - 1):
        row = row_of(current)
        better = (~in_tree) & (row < best)
        best[better] = row[better]
        best_from[better] = current
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))  # ties resolve to the smallest index
        i, j = int(best_from[nxt]), nxt
        edges.append((float(best[nxt]), min(i, j), max(i, j)))
        in_tree[nxt] = True
        best[nxt] = np.inf
        current = nxt
    return edges


def _dendrogram_from_mst(n: int, edges: list[tuple[float, int, int]]) -> Dendrogram:
    edges = sorted(edges)  # (weight, smaller index, larger index)
    cluster_id = list(range(n))
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sizes = {i: 1 for i in range(n)}
    merges: list[Merge] = []
    for k, (weight, i, j) in enumerate(edges):
        ri, rj = find(i), find(j)
        left, right = sorted((cluster_id[ri], cluster_id[rj]))
        size = sizes[cluster_id[ri]] + sizes[cluster_id[rj]]
        merges.append(Merge(left=left, right=right, height=weight, size=size))
        parent[rj] = ri
        cluster_id[ri] = n + k
        sizes[n + k] = size
    return Dendrogram(n_leaves=n, merges=tuple(merges))


def single_linkage(distances: CondensedDistances) -> Dendrogram:
    """Merge history under single linkage with documented tie-breaking."""
    n = distances.n
    if n == 1:
        return Dendrogram(n_leaves=1, merges=())

    def row_of(i: int) -> np.ndarray:
        row = np.empty(n)
        row[i] = np.inf
        for j in range(n):
            if j != i:
                row[j] = distances.values[distances.index(i, j)]
        return row

    return _dendrogram_from_mst(n, _prim_mst(n, row_of))


def single_linkage_rows(rows: np.ndarray) -> Dendrogram:
    """Streaming variant: distances computed per row, O(n) extra memory."""
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if n == 1:
        return Dendrogram(n_leaves=1, merges=())

    def row_of(i: int) -> np.ndarray:
        diff = rows - rows[i]
        row = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        row[i] = np.inf
        return row

    return _dendrogram_from_mst(n, _prim_mst(n, row_of))


def cophenetic_distances(dendrogram: Dendrogram) -> CondensedDistances:
    """Merge height at which each leaf pair first joins."""
    n = dendrogram.n_leaves
    out = np.zeros(n * (n - 1) // 2, dtype=np.float64)
    cond = CondensedDistances(values=out, n=n)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for k, merge in enumerate(dendrogram.merges):
        left, right = members[merge.left], members[merge.right]
        for a in left:
            for b in right:
                out[cond.index(a, b)] = merge.height
        members[n + k] = left + right
    return cond


def cophenetic_coefficient(dendrogram: Dendrogram, distances: CondensedDistances) -> float:
    """Pearson correlation between original and cophenetic distances.

    Returns NaN when the correlation is undefined (all original distances
    equal), which callers report as a degenerate-input flag.
    """
    orig = distances.values
    coph = cophenetic_distances(dendrogram).values
    if orig.size < 2:
        return float("nan")
    orig_dev = orig - orig.mean()
    coph_dev = coph - coph.mean()
    denom = math.sqrt(float(orig_dev @ orig_dev) * float(coph_dev @ coph_dev))
    if denom == 0.0:
        return float("nan")
    return float(orig_dev @ coph_dev) / denom


def cophenetic_coefficient_rows(dendrogram: Dendrogram, rows: np.ndarray) -> float:
    """Streaming Pearson between original and cophenetic distances.

    Walks every pair exactly once (grouped by the merge that first joins
    it), recomputing original distances from the rows, so no condensed
    matrix is materialized.
    """
    rows = np.asarray(rows, dtype=np.float64)
    n = dendrogram.n_leaves
    if n < 3:
        return float("nan") if n < 2 else 1.0
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    count = 0
    sx = sy = sxx = syy = sxy = 0.0
    for k, merge in enumerate(dendrogram.merges):
        left, right = members.pop(merge.left), members.pop(merge.right)
        h = merge.height
        for a in left:
            diff = rows[right] - rows[a]
            dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            count += dists.size
            sx += float(dists.sum())
            sxx += float((dists * dists).sum())
            sy += h * dists.size
            syy += h * h * dists.size
            sxy += h * float(dists.sum())
        members[n + k] = left + right
    var_x = sxx - sx * sx / count
    var_y = syy - sy * sy / count
    denom = math.sqrt(var_x * var_y)
    if denom <= 0.0:
        return float("nan")
    return (sxy - sx * sy / count) / denom


def inconsistency_coefficients(dendrogram: Dendrogram, depth: int = 2) -> np.ndarray:
    """Per-link standardized height relative to the links up to ``depth``
    levels below (sample standard deviation; zero spread gives zero)."""
    n = dendrogram.n_leaves
    heights = [m.height for m in dendrogram.merges]
    coefs = np.zeros(len(dendrogram.merges))
    for k in range(len(dendrogram.merges)):
        stack = [(k, depth)]
        window: list[float] = []
        while stack:
            link, levels = stack.pop()
            window.append(heights[link])
            if levels > 1:
                for child in dendrogram.link_children(link):
                    if child >= n:
                        stack.append((child - n, levels - 1))
        if len(window) < 2:
            continue
        mean = sum(window) / len(window)
        var = sum((h - mean) ** 2 for h in window) / (len(window) - 1)
        std = math.sqrt(var)
        if std > 0:
            coefs[k] = (heights[k] - mean) / std
    return coefs


def select_cutoff(coefficients: np.ndarray) -> float:
    """Left edge of the highest-valued nonempty histogram bin.

    Bin width follows the Freedman-Diaconis rule, falling back to Scott's
    rule when the interquartile range is zero.
    """
    vals = np.asarray(coefficients, dtype=np.float64)
    if vals.size == 0 or np.all(vals == 0.0):
        raise AllZeroError("all inconsistency coefficients are zero")
    vmin, vmax = float(vals.min()), float(vals.max())
    if vmin == vmax:
        return vmax
    n = vals.size
    iqr = float(np.percentile(vals, 75) - np.percentile(vals, 25))
    width = 2.0 * iqr / n ** (1.0 / 3.0)
    if width <= 0.0:
        width = 3.49 * float(np.std(vals, ddof=1)) / n ** (1.0 / 3.0)
    if width <= 0.0:
        return vmax
    nbins = max(1, math.ceil((vmax - vmin) / width))
    idx = min(int((vmax - vmin) / width), nbins - 1)
    return vmin + idx * width


def cut_clusters(
    dendrogram: Dendrogram,
    coefficients: np.ndarray,
    cutoff: float,
    min_size: int,
    labels: list | None = None,
) -> ClusterAssignment:
    """Maximal subtrees whose links all fall below the cutoff.

    Subtrees smaller than ``min_size`` are left unclustered.  Cluster ids
    are the dendrogram node ids of the subtree roots.
    """
    n = dendrogram.n_leaves
    labels = labels if labels is not None else list(range(n))
    members = dendrogram.leaf_members()
    subtree_max = list(coefficients)
    for k in range(len(dendrogram.merges)):
        for child in dendrogram.link_children(k):
            if child >= n:
                subtree_max[k] = max(subtree_max[k], subtree_max[child - n])

    raw: dict[int, list[int]] = {}

    def emit(node_id: int):
        if node_id < n:
            raw[node_id] = [node_id]
            return
        k = node_id - n
        if subtree_max[k] < cutoff:
            raw[node_id] = members[node_id]
            return
        left, right = dendrogram.link_children(k)
        emit(left)
        emit(right)

    if dendrogram.merges:
        emit(n + len(dendrogram.merges) - 1)
    elif n == 1:
        raw[0] = [0]

    result = ClusterAssignment(min_size=min_size)
    result.assignment = {labels[i]: None for i in range(n)}
    for cluster_id, leaf_ids in sorted(raw.items()):
        if len(leaf_ids) < min_size:
            continue
        tagged = tuple(labels[i] for i in sorted(leaf_ids))
        result.clusters[cluster_id] = tagged
        for item in tagged:
            result.assignment[item] = cluster_id
    return result


def sample_cluster(assignment: ClusterAssignment, cluster_id: int,
                   n: int = 5, seed: int = 0) -> list:
    """Uniform sample without replacement, deterministic under the seed."""
    try:
        members = assignment.clusters[cluster_id]
    except KeyError:
        raise UnknownClusterError(cluster_id) from None
    ordered = sorted(members)
    if len(ordered) <= n:
        return ordered
    return random.Random(seed).sample(ordered, n)


def dendrogram_to_json(dendrogram: Dendrogram) -> str:
    doc = {
        "n_leaves": dendrogram.n_leaves,
        "merges": [
            {"left": m.left, "right": m.right, "height": m.height, "size": m.size}
            for m in dendrogram.merges
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
