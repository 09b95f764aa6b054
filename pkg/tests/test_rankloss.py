import numpy as np
import pytest

from colgenhash.data import QueryNeighborhood
from colgenhash.rankloss import (
    RankScoreKind,
    brute_force_most_violated,
    inference_objective,
    label_loss,
    most_violated_auc,
    most_violated_ndcg,
    most_violated_sndcg,
    score_auc,
    score_ndcg,
    score_sndcg,
)

GT = QueryNeighborhood(100, (0, 1), (2, 3))


def random_instance(rng, p_max=3, n_max=3, p_fixed=None, n_fixed=None):
    p = p_fixed or int(rng.integers(1, p_max + 1))
    n = n_fixed or int(rng.integers(1, n_max + 1))
    ids = rng.permutation(np.arange(200))[: p + n]
    gt = QueryNeighborhood(500, tuple(int(i) for i in ids[:p]), tuple(int(i) for i in ids[p:]))
    scores = {int(i): float(rng.uniform(-2, 2)) for i in ids}
    return gt, scores


class TestScores:
    def test_auc_perfect(self):
        assert score_auc([0, 1, 2, 3], GT) == 1.0

    def test_auc_mixed(self):
        # relevant at positions 1 and 3: 3 of 4 pairs ordered correctly
        assert score_auc([0, 2, 1, 3], GT) == 0.75

    def test_auc_reversed(self):
        assert score_auc([2, 3, 0, 1], GT) == 0.0

    def test_ndcg_hand_value(self):
        # K=3, relevant at positions 1 and 3: (1 + 1/log2 3) / (1 + 1 + 1/log2 3)
        got = score_ndcg([0, 2, 1, 3], GT, K=3)
        assert got == pytest.approx(1.63093 / 2.63093, abs=1e-4)
        assert got == pytest.approx(0.6199, abs=1e-3)

    def test_ndcg_top_all_relevant(self):
        assert score_ndcg([0, 1, 2, 3], GT, K=2) == 1.0

    def test_ndcg_top_all_irrelevant(self):
        assert score_ndcg([2, 3, 0, 1], GT, K=2) == 0.0

    def test_sndcg_all_first(self):
        fam = {0: [0, 2, 3], 1: [1, 2, 3]}
        assert score_sndcg(fam, GT) == 1.0

    def test_sndcg_single_relevant_second(self):
        gt = QueryNeighborhood(9, (0,), (1, 2))
        assert score_sndcg({0: [1, 0, 2]}, gt) == pytest.approx(1 / np.log2(3), abs=1e-9)
        assert score_sndcg({0: [1, 0, 2]}, gt) == pytest.approx(0.6309, abs=1e-3)

    def test_sndcg_relevant_last(self):
        gt = QueryNeighborhood(9, (0,), (1, 2, 3))
        assert score_sndcg({0: [1, 2, 3, 0]}, gt) == pytest.approx(1 / np.log2(5))

    def test_coverage_mismatch_rejected(self):
        with pytest.raises(ValueError):
            score_auc([0, 1, 2], GT)
        with pytest.raises(ValueError):
            score_ndcg([0, 1, 2, 9], GT, K=2)
        with pytest.raises(ValueError):
            score_sndcg({0: [0, 2, 3]}, GT)  # missing ranking for relevant 1


class TestLabelLoss:
    def test_zero_on_perfect(self):
        assert label_loss(RankScoreKind("auc"), [0, 1, 2, 3], GT) == 0.0
        assert label_loss(RankScoreKind("ndcg", K=2), [0, 1, 2, 3], GT) == 0.0
        assert label_loss(RankScoreKind("sndcg"), {0: [0, 2, 3], 1: [1, 2, 3]}, GT) == 0.0

    def test_one_on_reversed_auc(self):
        assert label_loss(RankScoreKind("auc"), [2, 3, 0, 1], GT) == 1.0

    def test_ndcg_complement(self):
        got = label_loss(RankScoreKind("ndcg", K=3), [0, 2, 1, 3], GT)
        assert got == pytest.approx(0.3801, abs=1e-3)

    def test_auc_loss_is_flipped_pair_fraction(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            gt, _ = random_instance(rng)
            cands = sorted(gt.relevant) + sorted(gt.irrelevant)
            y = np.array(cands)
            rng.shuffle(y)
            loss = label_loss(RankScoreKind("auc"), y, gt)
            pos = {int(v): i for i, v in enumerate(y)}
            flipped = sum(pos[j] > pos[k] for j in gt.relevant for k in gt.irrelevant)
            total = len(gt.relevant) * len(gt.irrelevant)
            assert loss == pytest.approx(flipped / total)
            assert (loss > 0) == (flipped > 0)


class TestMostViolatedAUC:
    def test_zero_weights_reverse_everything(self):
        scores = {i: 0.0 for i in range(4)}
        y = most_violated_auc(scores, GT)
        assert label_loss(RankScoreKind("auc"), y, GT) == 1.0
        np.testing.assert_array_equal(y, [2, 3, 0, 1])

    def test_large_margins_keep_truth(self):
        scores = {0: 2.0, 1: 1.9, 2: 0.0, 3: -1.0}
        y = most_violated_auc(scores, GT)
        kind = RankScoreKind("auc")
        assert inference_objective(y, scores, GT, kind) == pytest.approx(0.0)
        assert score_auc(y, GT) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(20)
        kind = RankScoreKind("auc")
        for _ in range(100):
            gt, scores = random_instance(rng)
            fast = inference_objective(most_violated_auc(scores, gt), scores, gt, kind)
            slow = inference_objective(
                brute_force_most_violated(scores, gt, kind), scores, gt, kind
            )
            assert fast == pytest.approx(slow, abs=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(21)
        kind = RankScoreKind("auc")
        for _ in range(20):
            gt, scores = random_instance(rng)
            y = most_violated_auc(scores, gt)
            obj = inference_objective(y, scores, gt, kind)
            shifted = {i: s + 13.7 for i, s in scores.items()}
            y2 = most_violated_auc(shifted, gt)
            assert inference_objective(y2, shifted, gt, kind) == pytest.approx(obj, abs=1e-9)


class TestMostViolatedNDCG:
    def test_zero_weights_reverse_everything(self):
        scores = {i: 0.0 for i in range(4)}
        y = most_violated_ndcg(scores, GT, K=4)
        assert set(np.asarray(y)[:2].tolist()) == {2, 3}

    def test_huge_margins_keep_truth(self):
        # K <= |X+| so the true ranking scores exactly 1 and nothing profits
        scores = {0: 50.0, 1: 49.0, 2: 0.0, 3: -1.0}
        kind = RankScoreKind("ndcg", K=2)
        y = most_violated_ndcg(scores, GT, K=2)
        assert inference_objective(y, scores, GT, kind) == pytest.approx(0.0)
        assert score_ndcg(y, GT, K=2) == 1.0

    def test_loss_floor_when_cutoff_exceeds_relevant_count(self):
        # with K > |X+| even the perfect ranking cannot reach score 1; the
        # most-violated objective then sits exactly at that floor
        scores = {0: 50.0, 1: 49.0, 2: 0.0, 3: -1.0}
        kind = RankScoreKind("ndcg", K=4)
        y = most_violated_ndcg(scores, GT, K=4)
        z = 1 + 1 + 1 / np.log2(3) + 1 / np.log2(4)
        floor = 1.0 - 2.0 / z
        assert inference_objective(y, scores, GT, kind) == pytest.approx(floor, abs=1e-12)

    def test_matches_brute_force_3x4(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            gt, scores = random_instance(rng, p_fixed=3, n_fixed=4)
            K = int(rng.integers(1, 8))
            kind = RankScoreKind("ndcg", K=K)
            fast = inference_objective(most_violated_ndcg(scores, gt, K), scores, gt, kind)
            slow = inference_objective(
                brute_force_most_violated(scores, gt, kind), scores, gt, kind
            )
            assert fast == pytest.approx(slow, abs=1e-10)


class TestMostViolatedSNDCG:
    def test_zero_weights_place_relevant_last(self):
        scores = {i: 0.0 for i in range(4)}
        fam = most_violated_sndcg(scores, GT)
        for i in (0, 1):
            assert fam[i][-1] == i

    def test_high_scores_place_relevant_first(self):
        scores = {0: 9.0, 1: 8.0, 2: 0.0, 3: 0.1}
        fam = most_violated_sndcg(scores, GT)
        kind = RankScoreKind("sndcg")
        assert fam[0][0] == 0 and fam[1][0] == 1
        assert inference_objective(fam, scores, GT, kind) == pytest.approx(0.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(23)
        kind = RankScoreKind("sndcg")
        for _ in range(100):
            gt, scores = random_instance(rng, p_max=3, n_max=4)
            fast = most_violated_sndcg(scores, gt)
            slow = brute_force_most_violated(scores, gt, kind)
            f = inference_objective(fast, scores, gt, kind)
            s = inference_objective(slow, scores, gt, kind)
            assert f == s


class TestBruteForce:
    def test_single_pair_enumeration(self):
        gt = QueryNeighborhood(9, (0,), (1,))
        scores = {0: 0.1, 1: 0.4}
        kind = RankScoreKind("auc")
        y = brute_force_most_violated(scores, gt, kind)
        assert sorted(np.asarray(y).tolist()) == [0, 1]

    def test_refuses_large_instances(self):
        gt = QueryNeighborhood(999, tuple(range(7)), tuple(range(7, 14)))
        scores = {i: 0.0 for i in range(14)}
        with pytest.raises(ValueError):
            brute_force_most_violated(scores, gt, RankScoreKind("auc"))

    def test_dominates_every_enumerated_ranking(self):
        import itertools
        rng = np.random.default_rng(24)
        kind = RankScoreKind("ndcg", K=3)
        for _ in range(10):
            gt, scores = random_instance(rng, p_max=2, n_max=2)
            cands = sorted(gt.relevant) + sorted(gt.irrelevant)
            if len(cands) < 3:
                continue
            best = inference_objective(
                brute_force_most_violated(scores, gt, kind), scores, gt, kind
            )
            for perm in itertools.permutations(cands):
                val = inference_objective(np.array(perm), scores, gt, kind)
                assert best >= val - 1e-12
