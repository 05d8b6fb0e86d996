"""Acceptance suite: one test per criterion, each printing a summary line.

Each criterion runs at its stated tolerance and within its runtime budget;
the summary block at the end of the pytest run lists PASS/FAIL per
criterion.  Criterion 7 requires the externally published feature
matrices and is skipped with a notice when they are unreachable.
"""

from __future__ import annotations

import csv
import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import diff_texts, record_acceptance, single_hunk
from test_properties import edit_case, fingerprints

from fixscope.cluster import (
    cophenetic_coefficient,
    cut_clusters,
    inconsistency_coefficients,
    pairwise_distances,
    single_linkage,
)
from fixscope.democorpus import build_demo_corpus
from fixscope.diffing import ChangeLabel, DiffNode, Hunk, extract_hunks
from fixscope.features import WeightConfig, hunk_feature_vector
from fixscope.grammar import SourceSpan
from fixscope.pipeline import Pipeline, PipelineConfig, run_pipeline
from fixscope.stats import dunn_test


class Budget:
    def __init__(self, criterion: str, seconds: float):
        self.criterion = criterion
        self.seconds = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        if exc_type is None:
            if elapsed > self.seconds:
                record_acceptance(
                    f"{self.criterion}: FAIL (runtime {elapsed:.1f}s over "
                    f"{self.seconds:.0f}s budget)")
                raise AssertionError(
                    f"{self.criterion} exceeded runtime budget: {elapsed:.1f}s")
            record_acceptance(f"{self.criterion}: PASS ({elapsed:.2f}s)")
        else:
            record_acceptance(f"{self.criterion}: FAIL ({exc_type.__name__})")
        return False


@pytest.fixture(scope="module")
def demo_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance-corpus")
    return build_demo_corpus(root)


def chain_hunk(height: int) -> Hunk:
    def node(kind, role, children=()):
        made = DiffNode(kind=kind, role=role, text="", label=ChangeLabel.PLUS,
                        span=SourceSpan(1, 0, 1, 0), eff_start=1, eff_end=1,
                        children=list(children))
        for child in made.children:
            child.parent = made
        return made

    tip = node("Name", "If-Test")
    current = tip
    for _ in range(height):
        current = node("If", "If-Body", children=[current])
    return Hunk(id="chain", labeled_roots=(current,), context_chain=(),
                line_window=SourceSpan(1, 0, 1, 0))


class TestCriterion1WeightFidelity:
    def test_worked_example_and_integer_exactness(self):
        with Budget("criterion 1 (weight-rule fidelity)", 1.0):
            illustration = WeightConfig(w_type=1e3, w_role=1e3, r=10.0, c=0.1)
            # an `if` added inside an existing if-body, with no nesting:
            # full weight for the node, one order lower for its role
            base = "if ready:\n    keep = 1\n"
            single = ("if ready:\n    keep = 1\n"
                      "    if primary:\n        flag = 2\n")
            hunk = single_hunk(base, single)
            vec = hunk_feature_vector(hunk, illustration).entries
            assert vec["add_If"] == 1000.0
            assert vec["add_If-Body_If"] == 100.0
            # the same change with another `if` nested one level deeper:
            # the inner node accumulates exactly one order of magnitude less
            nested = ("if ready:\n    keep = 1\n"
                      "    if primary:\n        if backup:\n            flag = 2\n")
            vec = hunk_feature_vector(single_hunk(base, nested), illustration).entries
            assert vec["add_If"] == 1000.0 + 100.0
            assert vec["add_If-Body_If"] == 100.0 + 10.0

            # defaults: node-type features are exact integers through the
            # level-15 assumption; role features carry the extra 1/10 and
            # are exact integers through level 14, landing exactly on 0.1
            # at level 15
            for height in range(1, 15):
                entries = hunk_feature_vector(chain_hunk(height)).entries
                for name, value in entries.items():
                    assert value == int(value), (height, name, value)
            deepest = hunk_feature_vector(chain_hunk(15)).entries
            assert deepest["add_If"] == int(deepest["add_If"])
            assert deepest["add_Name"] == 1.0
            assert deepest["add_If-Test_Name"] == 0.1


class TestCriterion2ClusteringOracles:
    def test_linkage_cophenetic_inconsistency_vs_bruteforce(self):
        with Budget("criterion 2 (clustering oracle equivalence)", 30.0):
            rng = random.Random(20240209)
            datasets = 0
            while datasets < 110:
                n = rng.randint(2, 10)
                pts = [[rng.uniform(0, 10) for _ in range(rng.randint(1, 4))]
                       for _ in range(n)]
                width = len(pts[0])
                pts = [row[:width] + [0.0] * (width - len(row)) for row in pts]
                datasets += 1
                distances = pairwise_distances(np.asarray(pts))
                dendrogram = single_linkage(distances)

                mine = [m.height for m in dendrogram.merges]
                theirs = sorted(h for h, _, _ in oracles.bruteforce_single_linkage(pts))
                assert all(abs(a - b) < 1e-9 for a, b in zip(mine, theirs))

                coph = cophenetic_coefficient(dendrogram, distances)
                coph_oracle = oracles.bruteforce_cophenetic_coefficient(pts)
                if math.isnan(coph_oracle):
                    assert math.isnan(coph)
                else:
                    assert abs(coph - coph_oracle) < 1e-9

                coefs = inconsistency_coefficients(dendrogram, depth=2)
                triples = [(m.left, m.right, m.height) for m in dendrogram.merges]
                ref = oracles.bruteforce_inconsistency(n, triples, depth=2)
                assert all(abs(a - b) < 1e-9 for a, b in zip(coefs, ref))


class TestCriterion3DunnOracle:
    def test_oracle_equivalence_and_null_calibration(self):
        with Budget("criterion 3 (rank-test oracle and calibration)", 60.0):
            rng = random.Random(77)
            cases = 0
            while cases < 120:
                n1 = rng.randint(1, 12)
                n2 = rng.randint(5, 60)
                g1 = [float(rng.randint(0, 8)) for _ in range(n1)]
                g2 = [float(rng.randint(0, 8)) for _ in range(n2)]
                if all(v == g1[0] for v in g1 + g2):
                    continue
                cases += 1
                mine = dunn_test(g1, g2)
                z_ref, p_ref = oracles.bruteforce_dunn(g1, g2)
                assert abs(mine.z - z_ref) < 1e-9
                assert abs(mine.p - p_ref) < 1e-9

            sims = 1000
            hits = 0
            alpha = 0.05
            for _ in range(sims):
                g1 = [rng.random() for _ in range(25)]
                g2 = [rng.random() for _ in range(75)]
                if dunn_test(g1, g2, alpha=alpha).relevant:
                    hits += 1
            rate = hits / sims
            standard_error = math.sqrt(alpha * (1 - alpha) / sims)
            assert abs(rate - alpha) <= 2 * standard_error, rate


class TestCriterion4HunkRuleProperties:
    def test_generated_edit_scripts(self):
        with Budget("criterion 4 (hunk-rule properties)", 60.0):

            @given(edit_case())
            @settings(max_examples=80, deadline=None)
            def run_case(case):
                before, after = case
                forward = diff_texts(before, after)
                hunks = extract_hunks(forward)

                roots = forward.labeled_roots()
                assigned = [r for h in hunks for r in h.labeled_roots]
                assert len(assigned) == len(roots)
                assert {id(r) for r in assigned} == {id(r) for r in roots}

                for first, second in zip(hunks, hunks[1:]):
                    gap = min(rb.eff_start - ra.eff_end
                              for ra in first.labeled_roots
                              for rb in second.labeled_roots)
                    assert gap > 3

                for hunk in hunks:
                    for node in hunk.context_chain:
                        assert node.label is ChangeLabel.UNCHANGED

                backward = diff_texts(after, before)

                def collect(enhanced, label):
                    return [n for n in enhanced.root.walk() if n.label is label]

                assert fingerprints(collect(forward, ChangeLabel.PLUS)) == \
                    fingerprints(collect(backward, ChangeLabel.MINUS))
                assert fingerprints(collect(forward, ChangeLabel.MINUS)) == \
                    fingerprints(collect(backward, ChangeLabel.PLUS))

            run_case()


class TestCriterion5SyntheticRecovery:
    def test_planted_families_recovered(self, demo_corpus, tmp_path):
        with Budget("criterion 5 (synthetic end-to-end recovery)", 120.0):
            config = PipelineConfig(
                source_mode="git", source_path=demo_corpus["repo"],
                min_cluster_size=10, output_dir=str(tmp_path / "out"))
            report = run_pipeline(config)
            assert len(report.clusters) >= 3

            truth = demo_corpus["truth"]
            clusters = Pipeline(config).load_clusters()
            for family in ("add-kwarg", "wrap-if", "dict-entry"):
                # dominant cluster: the one holding most of this family
                def family_hits(members):
                    return sum(1 for h in members
                               if truth.get(h.split(":")[0]) == family)

                dominant = max(clusters.values(), key=family_hits)
                purity = family_hits(dominant) / len(dominant)
                assert purity >= 0.90, (family, purity)


class TestCriterion6Determinism:
    def test_cached_demo_corpus_runs_byte_identical(self, demo_corpus, tmp_path):
        with Budget("criterion 6 (determinism)", 120.0):
            config = PipelineConfig(
                source_mode="git", source_path=demo_corpus["repo"],
                min_cluster_size=10, output_dir=str(tmp_path / "out"))

            def snapshot():
                return {
                    path.name: path.read_bytes()
                    for path in sorted(Path(config.output_dir).glob("*.*"))
                    if path.suffix in (".csv", ".jsonl", ".md", ".json")
                    and not path.name.endswith(".manifest.json")
                }

            run_pipeline(config)
            first = snapshot()
            run_pipeline(config, force=True)
            second = snapshot()
            assert first.keys() == second.keys()
            for name, blob in first.items():
                assert blob == second[name], name


DATASET_ENV = "FIXSCOPE_PUBLISHED_DATASET"
DATASET_URL = "https://figshare.com/s/7ae9d7dade9e8df62683"

PUBLISHED_EXPECTATIONS = {
    "nova": {"cutoff": 1.15, "min_size": 15, "clusters": 46, "cophenetic": 0.87},
    "neutron": {"cutoff": 1.1, "min_size": 10, "clusters": 22, "cophenetic": 0.86},
    "cinder": {"cutoff": 1.15, "min_size": 15, "clusters": 43, "cophenetic": 0.90},
}


def _load_published_matrix(path: Path) -> np.ndarray:
    with path.open() as handle:
        reader = csv.reader(handle)
        header = next(reader)
        start = 1 if header and header[0].lower() in ("hunk_id", "id", "") else 0
        rows = [[float(cell) for cell in row[start:]] for row in reader]
    return np.asarray(rows, dtype=np.float64)


def _dataset_page_reachable() -> bool:
    try:
        import requests

        return requests.head(DATASET_URL, timeout=5,
                             allow_redirects=True).status_code < 500
    except Exception:
        return False


class TestCriterion7PublishedDataset:
    def test_recluster_published_matrices(self, tmp_path):
        dataset_dir = os.environ.get(DATASET_ENV, "")
        if not dataset_dir:
            network = ("share page reachable; download the matrices manually"
                       if _dataset_page_reachable()
                       else "network/dataset unreachable from here")
            reason = (f"criterion 7 (published-dataset recheck): SKIPPED — "
                      f"{network}; set {DATASET_ENV} to a directory holding "
                      f"nova.csv/neutron.csv/cinder.csv from {DATASET_URL}")
            record_acceptance(reason)
            pytest.skip(reason)
        base = Path(dataset_dir)
        missing = [name for name in PUBLISHED_EXPECTATIONS
                   if not (base / f"{name}.csv").exists()]
        if missing:
            reason = (f"criterion 7 (published-dataset recheck): SKIPPED — "
                      f"missing matrices: {missing}")
            record_acceptance(reason)
            pytest.skip(reason)
        with Budget("criterion 7 (published-dataset recheck)", 3600.0):
            for name, expected in PUBLISHED_EXPECTATIONS.items():
                rows = _load_published_matrix(base / f"{name}.csv")
                distances = pairwise_distances(rows)
                dendrogram = single_linkage(distances)
                coph = cophenetic_coefficient(dendrogram, distances)
                assert abs(coph - expected["cophenetic"]) <= 0.01, name
                coefs = inconsistency_coefficients(dendrogram, depth=2)
                assignment = cut_clusters(dendrogram, coefs, expected["cutoff"],
                                          expected["min_size"])
                assert len(assignment.clusters) == expected["clusters"], name
