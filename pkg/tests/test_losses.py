"""Objective values, analytic gradients, and shared loss properties."""
from __future__ import annotations

import math

import numpy as np
import pytest

from synalign.losses import (
    LOSS_KINDS,
    LossParams,
    circle_loss,
    cosine_loss,
    default_params,
    infonce_loss,
    lifted_structure_loss,
    loss_registry,
    ms_loss,
    nca_loss,
    triplet_loss,
)
from synalign.errors import UnknownLossKindError
from synalign.metric import MinedPairs, mine_hard_pairs, similarity_matrix, sphere_distances

from conftest import manual_bundle, random_bundle


def sets(*pairs_per_anchor) -> MinedPairs:
    """MinedPairs from literal (positives, negatives) tuples."""
    pos = [np.asarray(p, dtype=np.int64) for p, _ in pairs_per_anchor]
    neg = [np.asarray(n, dtype=np.int64) for _, n in pairs_per_anchor]
    return MinedPairs(positives=pos, negatives=neg, margin=0.2)


def empty_sets(b: int) -> MinedPairs:
    return sets(*([[], []] for _ in range(b)))


def boundary_distance(kind: str, bundle, pairs, params) -> float:
    """Distance to the nearest hinge/clamp nondifferentiability."""
    S = bundle.S
    D = sphere_distances(S)
    closest = math.inf
    for i in range(S.shape[0]):
        pos, neg = pairs.positives[i], pairs.negatives[i]
        if kind == "cosine" and len(neg):
            closest = min(closest, np.abs(S[i, neg] - params.margin).min())
        if kind == "triplet" and len(pos) and len(neg):
            hinges = D[i, pos][:, None] - D[i, neg][None, :] + params.margin
            closest = min(closest, np.abs(hinges).min(), D[i, pos].min(), D[i, neg].min())
        if kind == "circle":
            if len(neg):
                closest = min(closest, np.abs(S[i, neg] + params.m).min())
            if len(pos):
                closest = min(closest, np.abs(1.0 + params.m - S[i, pos]).min())
    if kind == "lifted_structure":
        neg_sum = [np.exp(params.alpha - D[i, pairs.negatives[i]]).sum() for i in range(S.shape[0])]
        for i in range(S.shape[0]):
            for p in pairs.positives[i]:
                z = neg_sum[i] + neg_sum[int(p)]
                if z > 0:
                    closest = min(closest, abs(D[i, int(p)] + np.log(z)), D[i, int(p)])
    return closest


ALL_LOSSES = {
    "multi_similarity": ms_loss,
    "cosine": cosine_loss,
    "triplet": triplet_loss,
    "nca": nca_loss,
    "lifted_structure": lifted_structure_loss,
    "infonce": infonce_loss,
    "circle": circle_loss,
}


def fd_check(kind, raw, labels, h=1e-6, tol=1e-4):
    """Central-difference oracle over every raw-embedding coordinate."""
    fn = ALL_LOSSES[kind]
    params = default_params(kind)
    bundle = similarity_matrix(raw, labels)
    pairs = mine_hard_pairs(bundle, 0.2)
    if boundary_distance(kind, bundle, pairs, params) < 1e-3:
        return None
    out = fn(bundle, pairs, params)
    worst = 0.0
    for i in range(raw.shape[0]):
        for j in range(raw.shape[1]):
            bump = np.zeros_like(raw)
            bump[i, j] = h
            vp = fn(similarity_matrix(raw + bump, labels), pairs, params).value
            vm = fn(similarity_matrix(raw - bump, labels), pairs, params).value
            fd = (vp - vm) / (2 * h)
            analytic = out.grad_embeddings[i, j]
            worst = max(worst, abs(analytic - fd) / max(1.0, abs(analytic), abs(fd)))
    assert worst <= tol, f"{kind}: fd mismatch {worst:.3e}"
    return worst


class TestMsLoss:
    def test_empty_sets_zero(self, rng):
        _, _, bundle = random_bundle(rng, b=4)
        out = ms_loss(bundle, empty_sets(4), default_params("multi_similarity"))
        assert out.value == 0.0
        assert not out.grad_embeddings.any()

    def test_single_positive_at_offset(self):
        params = default_params("multi_similarity")
        S = np.array([[1.0, params.epsilon], [params.epsilon, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = ms_loss(bundle, sets(([1], []), ([], [])), params)
        per_anchor = out.value * 2
        assert abs(per_anchor - math.log(2) / 50) <= 1e-12
        assert abs(per_anchor - 0.013863) <= 1e-6

    def test_single_negative_at_offset(self):
        params = default_params("multi_similarity")
        S = np.array([[1.0, params.epsilon], [params.epsilon, 1.0]])
        bundle = manual_bundle(S, ["A", "B"])
        out = ms_loss(bundle, sets(([], [1]), ([], [])), params)
        per_anchor = out.value * 2
        assert abs(per_anchor - math.log(2) / 2) <= 1e-12
        assert abs(per_anchor - 0.346574) <= 1e-6

    def test_gradient_tight(self, rng):
        raw, labels, _ = random_bundle(rng, b=16, d=8)
        worst = fd_check("multi_similarity", raw, labels, tol=1e-6)
        assert worst is not None

    def test_sign_of_similarity_response(self):
        # Raising a positive similarity lowers the loss; raising a
        # negative similarity raises it.
        params = default_params("multi_similarity")
        labels = ["A", "A", "B"]
        mined = sets(([1], [2]), ([], []), ([], []))

        def value(s_ip, s_in):
            S = np.array([[1.0, s_ip, s_in], [s_ip, 1.0, 0.0], [s_in, 0.0, 1.0]])
            return ms_loss(manual_bundle(S, labels), mined, params).value

        assert value(0.62, 0.3) < value(0.6, 0.3)
        assert value(0.6, 0.32) > value(0.6, 0.3)


class TestCosineLoss:
    def test_perfect_separation_zero(self):
        S = np.array([[1.0, 1.0, -0.5], [1.0, 1.0, -0.5], [-0.5, -0.5, 1.0]])
        bundle = manual_bundle(S, ["A", "A", "B"])
        out = cosine_loss(bundle, sets(([1], [2]), ([0], [2]), ([], [0, 1])), default_params("cosine"))
        assert out.value == 0.0

    def test_single_positive_at_zero(self):
        S = np.array([[1.0, 0.0], [0.0, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = cosine_loss(bundle, sets(([1], []), ([], [])), default_params("cosine"))
        assert abs(out.value - 1.0) <= 1e-12

    def test_gradient(self, rng):
        for trial in range(8):
            raw, labels, _ = random_bundle(rng, b=12, d=6)
            if fd_check("cosine", raw, labels, tol=1e-6) is not None:
                return
        pytest.fail("no boundary-clean batch found")


class TestTripletLoss:
    def test_inactive_hinge_example(self):
        raw = np.array([[1.0, 0.0], [0.8, 0.6], [0.6, 0.8]])
        bundle = similarity_matrix(raw, ["A", "A", "B"])
        out = triplet_loss(bundle, sets(([1], [2]), ([], []), ([], [])), default_params("triplet"))
        assert out.value == 0.0  # 0.6325 - 0.8944 + 0.2 < 0

    def test_identical_embeddings_contribute_margin(self):
        params = default_params("triplet")
        raw = np.tile([0.3, 0.4], (4, 1))
        bundle = similarity_matrix(raw, ["A", "A", "B", "B"])
        mined = sets(([1], [2, 3]), ([0], [2, 3]), ([3], [0, 1]), ([2], [0, 1]))
        out = triplet_loss(bundle, mined, params)
        assert abs(out.value - params.margin) <= 1e-9

    def test_gradient(self, rng):
        for trial in range(8):
            raw, labels, _ = random_bundle(rng, b=12, d=6)
            if fd_check("triplet", raw, labels, tol=1e-5) is not None:
                return
        pytest.fail("no boundary-clean batch found")


class TestNcaLoss:
    def test_single_positive_no_negatives(self):
        S = np.array([[1.0, 0.4], [0.4, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = nca_loss(bundle, sets(([1], []), ([], [])), default_params("nca"))
        assert abs(out.value) <= 1e-15
        assert np.allclose(out.grad_embeddings, 0.0, atol=1e-15)

    def test_symmetric_softmax(self):
        S = np.array([[1.0, 0.3, 0.3], [0.3, 1.0, 0.0], [0.3, 0.0, 1.0]])
        bundle = manual_bundle(S, ["A", "A", "B"])
        out = nca_loss(bundle, sets(([1], [2]), ([], []), ([], [])), default_params("nca"))
        assert abs(out.value - math.log(2) / 3) <= 1e-12

    def test_gradient(self, rng):
        raw, labels, _ = random_bundle(rng, b=16, d=8)
        assert fd_check("nca", raw, labels, tol=1e-6) is not None


class TestLiftedStructureLoss:
    def test_pair_without_negatives_skipped(self):
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = lifted_structure_loss(bundle, sets(([1], []), ([0], [])), default_params("lifted_structure"))
        assert out.value == 0.0

    def test_nonpositive_hinge_zero(self):
        # Positive pair identical (D=0) and negatives antipodal (D=2):
        # J = 0 + log(2 e^{alpha-2}) < 0 for alpha=0.5.
        raw = np.array([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
        bundle = similarity_matrix(raw, ["A", "A", "B"])
        out = lifted_structure_loss(bundle, sets(([1], [2]), ([0], [2]), ([], [])), default_params("lifted_structure"))
        assert out.value == 0.0

    def test_gradient(self, rng):
        for trial in range(8):
            raw, labels, _ = random_bundle(rng, b=12, d=6)
            if fd_check("lifted_structure", raw, labels, tol=1e-5) is not None:
                return
        pytest.fail("no boundary-clean batch found")


class TestInfonceLoss:
    def test_balanced_pair_log2(self):
        S = np.array([[1.0, 0.4, 0.4], [0.4, 1.0, 0.0], [0.4, 0.0, 1.0]])
        bundle = manual_bundle(S, ["A", "A", "B"])
        out = infonce_loss(bundle, sets(([1], [2]), ([], []), ([], [])), default_params("infonce"))
        assert abs(out.value - math.log(2)) <= 1e-12

    def test_anchor_without_negatives_skipped(self):
        S = np.array([[1.0, 0.4], [0.4, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = infonce_loss(bundle, sets(([1], []), ([], [])), default_params("infonce"))
        assert out.value == 0.0

    def test_gradient(self, rng):
        raw, labels, _ = random_bundle(rng, b=16, d=8)
        assert fd_check("infonce", raw, labels, tol=1e-6) is not None


class TestCircleLoss:
    def test_anchor_missing_side_contributes_zero(self):
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        bundle = manual_bundle(S, ["A", "A"])
        out = circle_loss(bundle, sets(([1], []), ([], [])), default_params("circle"))
        assert out.value == 0.0

    def test_clamp_boundary_hand_value(self):
        params = default_params("circle")
        m = params.m
        # Anchor 0: two negatives at S = -m, two positives at S = 1 + m;
        # both self-weights clamp to zero so all exponents vanish.
        S = np.full((5, 5), 0.0)
        np.fill_diagonal(S, 1.0)
        S[0, 1] = S[0, 2] = 1.0 + m
        S[0, 3] = S[0, 4] = -m
        bundle = manual_bundle(S, ["A", "A", "A", "B", "C"])
        out = circle_loss(bundle, sets(([1, 2], [3, 4]), *([[], []] for _ in range(4))), params)
        assert abs(out.value - math.log(1 + 4) / 5) <= 1e-12

    def test_gradient(self, rng):
        for trial in range(8):
            raw, labels, _ = random_bundle(rng, b=12, d=6)
            if fd_check("circle", raw, labels, tol=1e-5) is not None:
                return
        pytest.fail("no boundary-clean batch found")


class TestRegistry:
    def test_ms_defaults(self):
        fn = loss_registry("multi_similarity")
        assert (fn.params.alpha, fn.params.beta, fn.params.epsilon) == (2.0, 50.0, 0.5)

    def test_infonce_default_tau(self):
        assert loss_registry("infonce").params.tau == 0.07

    def test_triplet_default_margin(self):
        assert loss_registry("triplet").params.margin == 0.2

    def test_other_defaults(self):
        assert loss_registry("nca").params.scale == 20.0
        assert loss_registry("lifted_structure").params.alpha == 0.5
        assert loss_registry("circle").params.m == 0.25
        assert loss_registry("circle").params.gamma == 256.0
        assert loss_registry("cosine").params.margin == 0.0

    def test_unknown_kind(self):
        with pytest.raises(UnknownLossKindError):
            loss_registry("bogus")

    def test_registry_has_seven_kinds(self):
        assert len(LOSS_KINDS) == 7


class TestSharedProperties:
    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_zero_when_all_sets_empty(self, kind, rng):
        _, _, bundle = random_bundle(rng, b=6)
        out = ALL_LOSSES[kind](bundle, empty_sets(6), default_params(kind))
        assert out.value == 0.0
        assert not out.grad_embeddings.any()

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_permutation_invariance(self, kind, rng):
        raw, labels, bundle = random_bundle(rng, b=10, d=6)
        pairs = mine_hard_pairs(bundle, 0.2)
        out = ALL_LOSSES[kind](bundle, pairs, default_params(kind))
        perm = rng.permutation(10)
        bundle_p = similarity_matrix(raw[perm], [labels[i] for i in perm])
        pairs_p = mine_hard_pairs(bundle_p, 0.2)
        out_p = ALL_LOSSES[kind](bundle_p, pairs_p, default_params(kind))
        assert abs(out.value - out_p.value) <= 1e-9
        assert np.allclose(out_p.grad_embeddings, out.grad_embeddings[perm], atol=1e-9)

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_scale_invariance(self, kind, rng):
        raw, labels, bundle = random_bundle(rng, b=10, d=6)
        pairs = mine_hard_pairs(bundle, 0.2)
        value = ALL_LOSSES[kind](bundle, pairs, default_params(kind)).value
        scaled = similarity_matrix(3.7 * raw, labels)
        value_scaled = ALL_LOSSES[kind](scaled, pairs, default_params(kind)).value
        assert abs(value - value_scaled) <= 1e-9

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_nonnegative_where_required(self, kind, rng):
        if kind not in ("multi_similarity", "triplet", "lifted_structure", "circle"):
            pytest.skip("sign not constrained")
        for seed in range(5):
            gen = np.random.default_rng(seed)
            _, _, bundle = random_bundle(gen, b=12, d=6)
            pairs = mine_hard_pairs(bundle, 0.2)
            assert ALL_LOSSES[kind](bundle, pairs, default_params(kind)).value >= 0.0
