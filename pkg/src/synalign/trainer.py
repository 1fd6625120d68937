"""Training loops: batching, mining, loss, backprop, AdamW updates.

Runs are bit-deterministic given (seed, data, config): epoch shuffles
derive from the run seed, and every numeric path is single-threaded
numpy with a fixed reduction order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import EncoderModel, ParamGrads, backward_batch, encode_batch
from .errors import EmptyPairListError, NonFiniteGradientError
from .losses import LossParams, default_params, loss_registry
from .metric import all_pairs, mine_hard_pairs, similarity_matrix
from .ontology import MentionSet, Ontology
from .pairgen import PairList, batch_iter, generate_finetune_pairs


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-5
    weight_decay: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 1
    batch_pairs: int = 256
    loss: LossParams = field(default_factory=lambda: default_params("multi_similarity"))
    mining_enabled: bool = True
    mining_lambda: float = 0.2
    pair_cap: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.batch_pairs < 2:
            raise ValueError("batch_pairs must be >= 2")


@dataclass
class OptimizerState:
    """First/second moment accumulators mirroring the model tensors."""

    step: int
    m_embedding: np.ndarray
    m_weight: np.ndarray
    m_bias: np.ndarray
    v_embedding: np.ndarray
    v_weight: np.ndarray
    v_bias: np.ndarray

    @staticmethod
    def zeros_like(model: EncoderModel) -> "OptimizerState":
        return OptimizerState(
            step=0,
            m_embedding=np.zeros_like(model.embedding_table),
            m_weight=np.zeros_like(model.proj_weight),
            m_bias=np.zeros_like(model.proj_bias),
            v_embedding=np.zeros_like(model.embedding_table),
            v_weight=np.zeros_like(model.proj_weight),
            v_bias=np.zeros_like(model.proj_bias),
        )

    def tensors(self) -> tuple[np.ndarray, ...]:
        """Serialization order used by the checkpoint format."""
        return (
            self.m_embedding,
            self.m_weight,
            self.m_bias,
            self.v_embedding,
            self.v_weight,
            self.v_bias,
        )

    @staticmethod
    def from_raw(raw: tuple[int, list[np.ndarray]]) -> "OptimizerState":
        step, tensors = raw
        return OptimizerState(step, *tensors)


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    loss: float
    pos_pairs: int
    neg_pairs: int


@dataclass
class TrainLog:
    records: list[TrainRecord] = field(default_factory=list)

    def append(self, iteration: int, loss: float, pos_pairs: int, neg_pairs: int) -> None:
        self.records.append(TrainRecord(iteration, loss, pos_pairs, neg_pairs))

    def losses(self) -> np.ndarray:
        return np.asarray([r.loss for r in self.records])

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iteration,loss,pos_pairs,neg_pairs\n")
            for r in self.records:
                fh.write(f"{r.iteration},{r.loss!r},{r.pos_pairs},{r.neg_pairs}\n")


def adamw_step(
    model: EncoderModel,
    grads: ParamGrads,
    state: OptimizerState,
    config: TrainConfig,
    iteration: int = 0,
) -> tuple[EncoderModel, OptimizerState]:
    """One decoupled-weight-decay Adam update, in place.

    Bias-corrected moments drive the update; weight decay applies to the
    embedding table and projection weight but not the bias. Raises
    :class:`NonFiniteGradientError` before touching any state.
    """
    named = (
        ("embedding_table", model.embedding_table, grads.embedding_table, state.m_embedding, state.v_embedding, True),
        ("proj_weight", model.proj_weight, grads.proj_weight, state.m_weight, state.v_weight, True),
        ("proj_bias", model.proj_bias, grads.proj_bias, state.m_bias, state.v_bias, False),
    )
    for name, _, grad, _, _, _ in named:
        if not np.isfinite(grad).all():
            raise NonFiniteGradientError(iteration, name)
    state.step += 1
    t = state.step
    lr = config.learning_rate
    b1, b2 = config.adam_beta1, config.adam_beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for _, theta, grad, m, v, decay in named:
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * np.square(grad)
        update = (m / bias1) / (np.sqrt(v / bias2) + config.adam_eps)
        if decay and config.weight_decay != 0.0:
            update = update + config.weight_decay * theta
        theta -= lr * update
        if __debug__:
            assert np.isfinite(theta).all(), "parameters left finite range"
    return model, state


def _epoch_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1, np.uint64)[0])


def pretrain(
    pairs: PairList,
    model: EncoderModel,
    config: TrainConfig,
    state: OptimizerState | None = None,
) -> tuple[EncoderModel, TrainLog]:
    """Self-alignment training over a positive-pair list.

    Per batch: encode, build the similarity bundle, mine (or take all
    pairs when mining is off), evaluate the configured loss, backprop,
    and apply one AdamW step. The input model is not mutated.
    """
    if len(pairs) == 0:
        raise EmptyPairListError("positive pair list is empty")
    model = model.copy()
    state = state if state is not None else OptimizerState.zeros_like(model)
    loss_fn = loss_registry(config.loss.kind)
    log = TrainLog()
    iteration = 0
    for epoch in range(config.epochs):
        for batch in batch_iter(pairs, config.batch_pairs, _epoch_seed(config.seed, epoch)):
            outputs, cache = encode_batch(model, batch.names)
            bundle = similarity_matrix(outputs, batch.labels)
            if config.mining_enabled:
                mined = mine_hard_pairs(bundle, config.mining_lambda)
            else:
                mined = all_pairs(batch.labels)
            out = loss_fn(bundle, mined, config.loss)
            grads = backward_batch(model, cache, out.grad_embeddings)
            adamw_step(model, grads, state, config, iteration)
            log.append(iteration, out.value, mined.total_positives(), mined.total_negatives())
            iteration += 1
    return model, log


def finetune(
    mentions: MentionSet,
    ontology: Ontology,
    model: EncoderModel,
    config: TrainConfig,
) -> tuple[EncoderModel, TrainLog]:
    """Task adaptation: pair mentions with their gold synonyms, then train."""
    pairs = generate_finetune_pairs(mentions, ontology, cap=config.pair_cap, seed=config.seed)
    if config.epochs == 0:
        return model.copy(), TrainLog()
    return pretrain(pairs, model, config)
