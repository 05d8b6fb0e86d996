"""Rank-based relevance testing of context features per cluster.

Each cluster's feature values are compared against a control group by a
two-group rank test with midranks and tie correction; a feature is
relevant when its two-sided p-value falls under the significance level.
The control group defaults to the whole dataset excluding the tested
cluster's members (disjoint groups are required for a joint ranking); a
flag restores the literal whole-dataset control for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from fixscope.context import CATEGORIES, categorize

__all__ = [
    "DunnResult",
    "SummaryStats",
    "FeatureRecord",
    "ContextRelevanceMatrix",
    "dunn_test",
    "summary_stats",
    "relevance_matrix",
]

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


@dataclass(frozen=True)
class DunnResult:
    feature: str
    z: float
    p: float
    relevant: bool


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    cv: float
    cv_defined: bool
    quantiles: dict[float, float]


@dataclass(frozen=True)
class FeatureRecord:
    cluster_id: object
    feature: str
    category: str
    z: float
    p: float
    relevant: bool
    summary: SummaryStats


@dataclass
class ContextRelevanceMatrix:
    """17 category rows x cluster columns, with per-feature detail."""

    cluster_ids: list
    cells: dict[tuple[str, object], bool] = field(default_factory=dict)
    records: list[FeatureRecord] = field(default_factory=list)
    alpha: float = 0.05
    control_mode: str = "exclusive"

    @property
    def categories(self) -> tuple[str, ...]:
        return CATEGORIES

    def relevant(self, category: str, cluster_id) -> bool:
        return self.cells.get((category, cluster_id), False)


def dunn_test(cluster_values, control_values, alpha: float = 0.05,
              feature: str = "") -> DunnResult:
    """Two-group rank test with midranks and tie correction.

    Degenerate pools (every value identical, or zero rank variance) give
    z = 0 and p = 1.
    """
    group1 = np.asarray(cluster_values, dtype=np.float64)
    group2 = np.asarray(control_values, dtype=np.float64)
    if group1.size == 0 or group2.size == 0:
        raise ValueError("both groups must be nonempty")
    pooled = np.concatenate([group1, group2])
    total = pooled.size
    if np.all(pooled == pooled[0]):
        return DunnResult(feature, 0.0, 1.0, False)
    ranks = rankdata(pooled, method="average")
    mean1 = float(ranks[:group1.size].mean())
    mean2 = float(ranks[group1.size:].mean())
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts)) / (
        12.0 * (total - 1))
    variance = (total * (total + 1) / 12.0 - tie_term) * (
        1.0 / group1.size + 1.0 / group2.size)
    if variance <= 0.0:
        return DunnResult(feature, 0.0, 1.0, False)
    z = (mean1 - mean2) / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))  # == 2 * (1 - Phi(|z|))
    return DunnResult(feature, z, p, p < alpha)


def summary_stats(values) -> SummaryStats:
    """Mean, coefficient of variation, and linear-interpolation quantiles."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sequence")
    mean = float(arr.mean())
    std = float(arr.std(ddof=0))
    if mean == 0.0:
        cv, cv_defined = float("nan"), False
    else:
        cv, cv_defined = std / mean, True
    quantiles = {q: float(np.quantile(arr, q)) for q in QUANTILE_LEVELS}
    return SummaryStats(mean=mean, cv=cv, cv_defined=cv_defined, quantiles=quantiles)


def relevance_matrix(
    clusters: dict,
    triage: dict,
    context_data: dict,
    alpha: float = 0.05,
    control_mode: str = "exclusive",
    bonferroni: bool = False,
) -> ContextRelevanceMatrix:
    """Per-cluster, per-feature relevance against the control group.

    ``clusters`` maps cluster id to member hunk ids, ``triage`` maps
    cluster id to a triage label string, and ``context_data`` maps hunk id
    to its flattened context features.  Only clusters triaged BUG-FIX are
    tested; a category cell is true when any of its member features is
    relevant.
    """
    if control_mode not in ("exclusive", "inclusive"):
        raise ValueError(f"unknown control mode {control_mode!r}")
    bugfix_ids = [cid for cid in sorted(clusters, key=str)
                  if triage.get(cid) == "BUG-FIX"]
    all_hunks = sorted(context_data)
    feature_names = sorted({name for values in context_data.values()
                            for name in values})
    result = ContextRelevanceMatrix(cluster_ids=bugfix_ids, alpha=alpha,
                                    control_mode=control_mode)
    effective_alpha = alpha / len(feature_names) if (bonferroni and feature_names) else alpha
    for cid in bugfix_ids:
        members = [h for h in clusters[cid] if h in context_data]
        if not members:
            continue
        member_set = set(members)
        if control_mode == "exclusive":
            control_hunks = [h for h in all_hunks if h not in member_set]
        else:
            control_hunks = all_hunks
        if not control_hunks:
            continue
        for feature in feature_names:
            cluster_vals = [context_data[h].get(feature, 0.0) for h in members]
            control_vals = [context_data[h].get(feature, 0.0) for h in control_hunks]
            test = dunn_test(cluster_vals, control_vals, alpha=effective_alpha,
                             feature=feature)
            category = categorize(feature)
            record = FeatureRecord(
                cluster_id=cid, feature=feature, category=category,
                z=test.z, p=test.p, relevant=test.relevant,
                summary=summary_stats(cluster_vals))
            result.records.append(record)
            if test.relevant:
                result.cells[(category, cid)] = True
    return result
