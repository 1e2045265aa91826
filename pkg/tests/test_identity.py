import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deidkit import (
    DataError,
    FaceDescriptor,
    centroid,
    cluster_separation,
    distance_table,
    euclidean_distance,
    intra_stats,
    pca_embed_2d,
    roc,
    verify_identity,
)


def desc(id_, subset, vec):
    return FaceDescriptor(id=id_, subset=subset, vector=np.asarray(vec, dtype=np.float64))


class TestDistanceBasics:
    def test_identical_vectors(self):
        v = np.arange(5.0)
        assert euclidean_distance(v, v) == 0.0

    def test_orthogonal_unit_vectors(self):
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        assert euclidean_distance(e1, e2) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_matches_manual_recomputation(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=128), rng.normal(size=128)
        manual = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert euclidean_distance(a, b) == pytest.approx(manual, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            euclidean_distance(np.zeros(3), np.zeros(4))


class TestCentroid:
    def test_single_descriptor_is_itself(self):
        v = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(centroid([desc("a", "s", v)]), v)

    def test_symmetric_pair_cancels(self):
        v = np.array([2.0, -1.0])
        assert np.array_equal(centroid([desc("a", "s", v), desc("b", "s", -v)]), np.zeros(2))

    def test_hand_computed_triangle(self):
        members = [desc("a", "s", [0, 0]), desc("b", "s", [2, 0]), desc("c", "s", [1, 3])]
        assert np.array_equal(centroid(members), np.array([1.0, 1.0]))

    def test_empty_set_errors(self):
        with pytest.raises(DataError):
            centroid([])


class TestIntraStats:
    def test_identical_members(self):
        members = [desc(str(i), "s", [1.0, 1.0]) for i in range(4)]
        stats = intra_stats("s", members)
        assert stats.intra_mean == 0.0
        assert stats.intra_std == 0.0

    def test_two_points_distance_two(self):
        members = [desc("a", "s", [0.0, 0.0]), desc("b", "s", [2.0, 0.0])]
        stats = intra_stats("s", members)
        assert stats.intra_mean == pytest.approx(1.0, abs=1e-12)
        assert stats.intra_std == pytest.approx(0.0, abs=1e-12)


class TestDistanceTable:
    def test_identical_swapped_and_original_subsets(self):
        rng = np.random.default_rng(1)
        vecs = rng.normal(size=(3, 8))
        by_subset = {
            "swapped_F": [desc(f"s{i}", "swapped_F", vecs[i]) for i in range(3)],
            "original_F": [desc(f"o{i}", "original_F", vecs[i]) for i in range(3)],
        }
        pairing = {f"s{i}": f"o{i}" for i in range(3)}
        report = distance_table(by_subset, pairing, target_subset="original_F")
        swapped_row = next(r for r in report.rows if r.subset == "swapped_F")
        assert swapped_row.to_original == (0.0, 0.0)

    def test_hand_computed_two_subset_table(self):
        by_subset = {
            "original_F": [desc("o0", "original_F", [0, 0]),
                           desc("o1", "original_F", [2, 0]),
                           desc("o2", "original_F", [1, 3])],
            "swapped_F": [desc("s0", "swapped_F", [10, 0]),
                          desc("s1", "swapped_F", [12, 0]),
                          desc("s2", "swapped_F", [11, 3])],
            "original_A": [desc("a0", "original_A", [11, 1])],
        }
        pairing = {"s0": "o0", "s1": "o1", "s2": "o2"}
        report = distance_table(by_subset, pairing, target_subset="original_A")
        rows = {r.subset: r for r in report.rows}

        intra_mean = (2 * math.sqrt(2) + 2) / 3  # dists to centroid (1,1): sqrt2, sqrt2, 2
        assert rows["original_F"].intra[0] == pytest.approx(intra_mean, abs=1e-12)
        assert rows["swapped_F"].intra[0] == pytest.approx(intra_mean, abs=1e-12)
        assert rows["original_F"].to_original is None

        assert rows["swapped_F"].to_original == (pytest.approx(10.0), pytest.approx(0.0))
        to_avg_orig = (math.sqrt(82) + math.sqrt(122) + math.sqrt(104)) / 3
        assert rows["swapped_F"].to_avg_original[0] == pytest.approx(to_avg_orig, abs=1e-12)
        to_target = (math.sqrt(2) + math.sqrt(2) + 2) / 3
        assert rows["swapped_F"].to_avg_target[0] == pytest.approx(to_target, abs=1e-12)
        assert rows["original_A"].to_avg_target == (0.0, 0.0)

    def test_intra_column_matches_standalone_intra_stats(self):
        rng = np.random.default_rng(2)
        by_subset = {
            "swapped_F": [desc(f"s{i}", "swapped_F", rng.normal(size=16)) for i in range(5)],
            "original_F": [desc(f"o{i}", "original_F", rng.normal(size=16)) for i in range(5)],
        }
        pairing = {f"s{i}": f"o{i}" for i in range(5)}
        report = distance_table(by_subset, pairing, target_subset="original_F")
        for row in report.rows:
            stats = intra_stats(row.subset, by_subset[row.subset])
            assert row.intra == (stats.intra_mean, stats.intra_std)

    def test_missing_pairing_reports_unmatched_ids(self):
        by_subset = {
            "swapped_F": [desc("s0", "swapped_F", [0.0])],
            "original_F": [desc("o0", "original_F", [0.0])],
        }
        with pytest.raises(DataError) as err:
            distance_table(by_subset, {}, target_subset="original_F")
        assert "s0" in str(err.value)

    def test_unknown_target(self):
        by_subset = {"a": [desc("x", "a", [0.0])], "b": [desc("y", "b", [0.0])]}
        with pytest.raises(DataError):
            distance_table(by_subset, {}, target_subset="nope")


class TestVerify:
    def test_zero_distance_matches(self):
        assert verify_identity(np.zeros(4), np.zeros(4))

    def test_boundary_is_a_non_match(self):
        assert not verify_identity(np.array([0.6, 0.0]), np.zeros(2), threshold=0.6)

    def test_observed_cross_subject_distance_rejected(self):
        # 0.756 was the mean original-to-target distance in the motivating data
        assert not verify_identity(np.array([0.756]), np.array([0.0]))

    def test_invariant_under_joint_rotation(self):
        rng = np.random.default_rng(3)
        d, c = rng.normal(size=8), rng.normal(size=8)
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        assert verify_identity(d, c) == verify_identity(q @ d, q @ c)


class TestRoc:
    def test_perfect_separation(self):
        assert roc([0.1, 0.2, 0.3], [0.5, 0.6]).auc == pytest.approx(1.0)

    def test_identical_lists_are_chance(self):
        assert roc([0.1, 0.2, 0.3], [0.1, 0.2, 0.3]).auc == pytest.approx(0.5)

    def test_interleaved_example(self):
        curve = roc([0.1, 0.2], [0.15, 0.3])
        assert curve.auc == pytest.approx(0.75, abs=1e-15)

    def test_curve_is_monotone(self):
        rng = np.random.default_rng(4)
        curve = roc(list(rng.uniform(0, 1, 50)), list(rng.uniform(0.2, 1.2, 70)))
        fars = [p[0] for p in curve.points]
        tars = [p[1] for p in curve.points]
        assert fars == sorted(fars)
        assert tars == sorted(tars)
        assert 0.0 <= curve.auc <= 1.0

    def test_empty_list_errors(self):
        with pytest.raises(DataError):
            roc([], [0.1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_swapping_roles_complements_auc(seed):
    rng = np.random.default_rng(seed)
    genuine = list(rng.uniform(0, 1, 20))
    impostor = list(rng.uniform(0, 1, 30))
    assert roc(genuine, impostor).auc == pytest.approx(1 - roc(impostor, genuine).auc, abs=1e-12)


class TestPcaEmbed:
    def test_planar_points_preserve_pairwise_distances(self):
        rng = np.random.default_rng(5)
        plane = rng.normal(size=(20, 2))
        basis, _ = np.linalg.qr(rng.normal(size=(16, 2)))
        high = plane @ basis.T + rng.normal(size=16)  # embedded plane plus offset
        embedded = pca_embed_2d([desc(str(i), "s", high[i]) for i in range(20)])
        for i in range(20):
            for j in range(i + 1, 20):
                expect = np.linalg.norm(plane[i] - plane[j])
                got = np.linalg.norm(embedded[i] - embedded[j])
                assert got == pytest.approx(expect, abs=1e-9)

    def test_all_identical_points_error(self):
        members = [desc(str(i), "s", np.ones(8)) for i in range(5)]
        with pytest.raises(DataError):
            pca_embed_2d(members)

    def test_translation_invariant_embedding(self):
        rng = np.random.default_rng(6)
        vecs = rng.normal(size=(10, 12))
        base = pca_embed_2d([desc(str(i), "s", vecs[i]) for i in range(10)])
        shifted = pca_embed_2d([desc(str(i), "s", vecs[i] + 7.5) for i in range(10)])
        assert np.allclose(base, shifted, atol=1e-9)


class TestClusterSeparation:
    def test_identical_subsets_are_not_separated(self):
        rng = np.random.default_rng(7)
        vecs = rng.normal(size=(4, 8))
        members = [desc(str(i), "a", vecs[i]) for i in range(4)]
        clone = [desc(str(i), "b", vecs[i]) for i in range(4)]
        assert cluster_separation({"a": members, "b": clone}) == pytest.approx(0.0)

    def test_zero_radius_singletons_fully_separated(self):
        subsets = {"a": [desc("a", "a", [0.0, 0.0])], "b": [desc("b", "b", [1.0, 0.0])]}
        assert cluster_separation(subsets) == math.inf

    def test_well_planted_clusters_exceed_one(self):
        from deidkit.synth import gen_descriptor_clusters, table1_cluster_spec

        spec, _ = table1_cluster_spec(count=100)
        by_subset = {}
        for d in gen_descriptor_clusters(spec, seed=0):
            by_subset.setdefault(d.subset, []).append(d)
        assert cluster_separation(by_subset) > 1.0
