"""Pairwise metric-learning objectives with exact analytic gradients.

Seven objectives share one calling convention: value plus gradient with
respect to the raw (pre-normalization) batch embeddings, computed by
chaining d(loss)/dS through S = U·Uᵀ and the row normalization. All
log-sum-exp terms are max-shifted so values agree across implementations
to high precision.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import UnknownLossKindError
from .metric import MinedPairs, SimilarityBundle, sphere_distances

# Distances below this are treated as exactly on the sqrt singularity;
# the subgradient there is taken as zero.
_DIST_FLOOR = 1e-9


@dataclass(frozen=True)
class LossParams:
    """Per-objective hyper-parameters; each kind reads only its own fields."""

    kind: str = "multi_similarity"
    alpha: float = 2.0
    beta: float = 50.0
    epsilon: float = 0.5
    margin: float = 0.2
    scale: float = 20.0
    tau: float = 0.07
    m: float = 0.25
    gamma: float = 256.0


@dataclass
class LossOutput:
    value: float
    grad_embeddings: np.ndarray  # (B, d), w.r.t. raw embeddings


def _grad_to_raw(bundle: SimilarityBundle, dS: np.ndarray) -> np.ndarray:
    """Push d(loss)/dS through U·Uᵀ and the row normalization."""
    U = bundle.unit_embeddings
    g_unit = (dS + dS.T) @ U
    radial = np.einsum("ij,ij->i", g_unit, U)
    return (g_unit - radial[:, None] * U) / bundle.norms[:, None]


def _zero_output(bundle: SimilarityBundle) -> LossOutput:
    return LossOutput(value=0.0, grad_embeddings=np.zeros_like(bundle.unit_embeddings))


def _log1p_sum_exp(x: np.ndarray) -> tuple[float, np.ndarray]:
    """Stable log(1 + Σ e^{x_j}) and its gradient weights e^{x_j}/(1+Σ)."""
    m = max(0.0, float(x.max()))
    exps = np.exp(x - m)
    total = np.exp(-m) + exps.sum()
    return m + np.log(total), exps / total


def ms_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Multi-Similarity objective over mined positive and negative sets.

    Per anchor: (1/alpha)·log(1 + Σ_n e^{alpha(S_in − eps)}) +
    (1/beta)·log(1 + Σ_p e^{−beta(S_ip − eps)}), averaged over the batch.
    """
    if params.alpha <= 0 or params.beta <= 0:
        raise ValueError("alpha and beta must be > 0")
    S = bundle.S
    b = S.shape[0]
    dS = np.zeros_like(S)
    total = 0.0
    for i in range(b):
        neg = pairs.negatives[i]
        pos = pairs.positives[i]
        if len(neg):
            value, weights = _log1p_sum_exp(params.alpha * (S[i, neg] - params.epsilon))
            total += value / params.alpha
            dS[i, neg] += weights / b
        if len(pos):
            value, weights = _log1p_sum_exp(-params.beta * (S[i, pos] - params.epsilon))
            total += value / params.beta
            dS[i, pos] -= weights / b
    if total == 0.0:
        return _zero_output(bundle)
    return LossOutput(value=total / b, grad_embeddings=_grad_to_raw(bundle, dS))


def cosine_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Mean (1 − S_ip) over positive pairs plus mean hinge on negatives."""
    if not -1.0 <= params.margin <= 1.0:
        raise ValueError("margin must lie in [-1, 1]")
    S = bundle.S
    b = S.shape[0]
    n_pos = pairs.total_positives()
    n_neg = pairs.total_negatives()
    if n_pos == 0 and n_neg == 0:
        return _zero_output(bundle)
    dS = np.zeros_like(S)
    value = 0.0
    for i in range(b):
        pos = pairs.positives[i]
        neg = pairs.negatives[i]
        if n_pos and len(pos):
            value += (1.0 - S[i, pos]).sum() / n_pos
            dS[i, pos] -= 1.0 / n_pos
        if n_neg and len(neg):
            over = S[i, neg] - params.margin
            active = over > 0
            value += over[active].sum() / n_neg
            dS[i, neg[active]] += 1.0 / n_neg
    return LossOutput(value=value, grad_embeddings=_grad_to_raw(bundle, dS))


def triplet_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Max-margin hinge over the per-anchor cartesian triplet set."""
    if params.margin < 0:
        raise ValueError("margin must be >= 0")
    S = bundle.S
    b = S.shape[0]
    D = sphere_distances(S)
    n_triplets = sum(len(pairs.positives[i]) * len(pairs.negatives[i]) for i in range(b))
    if n_triplets == 0:
        return _zero_output(bundle)
    dD = np.zeros_like(D)
    value = 0.0
    for a in range(b):
        pos = pairs.positives[a]
        neg = pairs.negatives[a]
        if not len(pos) or not len(neg):
            continue
        hinge = D[a, pos][:, None] - D[a, neg][None, :] + params.margin
        active = hinge > 0
        value += hinge[active].sum()
        dD[a, pos] += active.sum(axis=1) / n_triplets
        dD[a, neg] -= active.sum(axis=0) / n_triplets
    value /= n_triplets
    dS = np.where(D > _DIST_FLOOR, -dD / np.maximum(D, _DIST_FLOOR), 0.0)
    return LossOutput(value=value, grad_embeddings=_grad_to_raw(bundle, dS))


def nca_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Scaled-softmax neighbourhood loss: −log of positive mass per anchor."""
    if params.scale <= 0:
        raise ValueError("scale must be > 0")
    S = bundle.S
    b = S.shape[0]
    s = params.scale
    dS = np.zeros_like(S)
    total = 0.0
    touched = False
    for i in range(b):
        pos = pairs.positives[i]
        if not len(pos):
            continue
        touched = True
        neg = pairs.negatives[i]
        cand = np.concatenate([pos, neg]) if len(neg) else pos
        logits = s * S[i, cand]
        w = np.exp(logits - logits.max())
        z = w.sum()
        zp = w[: len(pos)].sum()
        total += np.log(z) - np.log(zp)
        dS[i, cand] += s * w / z / b
        dS[i, pos] -= s * w[: len(pos)] / zp / b
    if not touched:
        return _zero_output(bundle)
    return LossOutput(value=total / b, grad_embeddings=_grad_to_raw(bundle, dS))


def _unordered_positive_pairs(pairs: MinedPairs) -> list[tuple[int, int]]:
    seen: set[tuple[int, int]] = set()
    for i, pos in enumerate(pairs.positives):
        for p in pos:
            seen.add((min(i, int(p)), max(i, int(p))))
    return sorted(seen)


def lifted_structure_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Squared-hinge lifted embedding over unordered mined positive pairs.

    J_ij = D_ij + log(Σ_{k∈N_i} e^{alpha−D_ik} + Σ_{l∈N_j} e^{alpha−D_jl});
    pairs where neither endpoint has negatives contribute zero.
    """
    S = bundle.S
    D = sphere_distances(S)
    pos_pairs = _unordered_positive_pairs(pairs)
    if not pos_pairs:
        return _zero_output(bundle)
    # Exponents alpha − D are bounded above by alpha, so no shift needed.
    neg_exp = [np.exp(params.alpha - D[i, pairs.negatives[i]]) for i in range(S.shape[0])]
    neg_sum = np.asarray([e.sum() for e in neg_exp])
    dD = np.zeros_like(D)
    total = 0.0
    denom = 2.0 * len(pos_pairs)
    for i, j in pos_pairs:
        z = neg_sum[i] + neg_sum[j]
        if z == 0.0:
            continue
        jij = D[i, j] + np.log(z)
        if jij <= 0.0:
            continue
        total += jij * jij
        coeff = 2.0 * jij / denom
        dD[i, j] += coeff
        if len(pairs.negatives[i]):
            dD[i, pairs.negatives[i]] -= coeff * neg_exp[i] / z
        if len(pairs.negatives[j]):
            dD[j, pairs.negatives[j]] -= coeff * neg_exp[j] / z
    if total == 0.0:
        return _zero_output(bundle)
    dS = np.where(D > _DIST_FLOOR, -dD / np.maximum(D, _DIST_FLOOR), 0.0)
    return LossOutput(value=total / denom, grad_embeddings=_grad_to_raw(bundle, dS))


def infonce_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Temperature softmax contrast of each positive against the anchor's negatives."""
    if params.tau <= 0:
        raise ValueError("tau must be > 0")
    S = bundle.S
    b = S.shape[0]
    inv_tau = 1.0 / params.tau
    n_pairs = sum(
        len(pairs.positives[i]) for i in range(b) if len(pairs.negatives[i])
    )
    if n_pairs == 0:
        return _zero_output(bundle)
    dS = np.zeros_like(S)
    total = 0.0
    for i in range(b):
        pos = pairs.positives[i]
        neg = pairs.negatives[i]
        if not len(pos) or not len(neg):
            continue
        x_pos = inv_tau * S[i, pos]
        x_neg = inv_tau * S[i, neg]
        shift = max(x_pos.max(), x_neg.max())
        e_pos = np.exp(x_pos - shift)
        e_neg = np.exp(x_neg - shift)
        neg_total = e_neg.sum()
        for idx, p in enumerate(pos):
            denom = e_pos[idx] + neg_total
            total -= np.log(e_pos[idx] / denom)
            q_pos = e_pos[idx] / denom
            dS[i, p] -= inv_tau * (1.0 - q_pos) / n_pairs
            dS[i, neg] += inv_tau * (e_neg / denom) / n_pairs
    return LossOutput(value=total / n_pairs, grad_embeddings=_grad_to_raw(bundle, dS))


def circle_loss(bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams) -> LossOutput:
    """Self-weighted circle objective over anchors with both sets nonempty.

    Weights a_n = max(0, S_in + m) and a_p = max(0, 1 + m − S_ip) are part
    of the value, so the gradient differentiates through them.
    """
    if params.gamma <= 0:
        raise ValueError("gamma must be > 0")
    S = bundle.S
    b = S.shape[0]
    m = params.m
    gamma = params.gamma
    dS = np.zeros_like(S)
    total = 0.0
    touched = False
    for i in range(b):
        pos = pairs.positives[i]
        neg = pairs.negatives[i]
        if not len(pos) or not len(neg):
            continue
        touched = True
        s_neg = S[i, neg]
        s_pos = S[i, pos]
        a_neg = np.maximum(0.0, s_neg + m)
        a_pos = np.maximum(0.0, 1.0 + m - s_pos)
        x_neg = gamma * a_neg * (s_neg - m)
        x_pos = -gamma * a_pos * (s_pos - (1.0 - m))
        mn, mp = x_neg.max(), x_pos.max()
        e_neg = np.exp(x_neg - mn)
        e_pos = np.exp(x_pos - mp)
        c = mn + mp + np.log(e_neg.sum()) + np.log(e_pos.sum())
        total += np.logaddexp(0.0, c)
        w = np.exp(-np.logaddexp(0.0, -c))  # sigmoid(c)
        dx_neg = np.where(s_neg + m > 0, gamma * 2.0 * s_neg, 0.0)
        dx_pos = np.where(1.0 + m - s_pos > 0, -2.0 * gamma * (1.0 - s_pos), 0.0)
        dS[i, neg] += w * (e_neg / e_neg.sum()) * dx_neg / b
        dS[i, pos] += w * (e_pos / e_pos.sum()) * dx_pos / b
    if not touched:
        return _zero_output(bundle)
    return LossOutput(value=total / b, grad_embeddings=_grad_to_raw(bundle, dS))


_DISPATCH = {
    "multi_similarity": ms_loss,
    "cosine": cosine_loss,
    "triplet": triplet_loss,
    "nca": nca_loss,
    "lifted_structure": lifted_structure_loss,
    "infonce": infonce_loss,
    "circle": circle_loss,
}

LOSS_KINDS: tuple[str, ...] = tuple(_DISPATCH)


def default_params(kind: str) -> LossParams:
    """Published default hyper-parameters for a loss kind."""
    if kind not in _DISPATCH:
        raise UnknownLossKindError(kind, LOSS_KINDS)
    base = LossParams(kind=kind)
    if kind == "cosine":
        return replace(base, margin=0.0)
    if kind == "lifted_structure":
        return replace(base, alpha=0.5)
    return base


@dataclass(frozen=True)
class LossFunction:
    """A loss kind bound to default parameters; callable like the raw op."""

    kind: str
    params: LossParams

    def __call__(
        self, bundle: SimilarityBundle, pairs: MinedPairs, params: LossParams | None = None
    ) -> LossOutput:
        return _DISPATCH[self.kind](bundle, pairs, params if params is not None else self.params)


def loss_registry(kind: str) -> LossFunction:
    """Look up a loss by kind with its defaults pre-filled."""
    if kind not in _DISPATCH:
        raise UnknownLossKindError(kind, LOSS_KINDS)
    return LossFunction(kind=kind, params=default_params(kind))
