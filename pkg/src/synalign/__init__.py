"""Self-alignment metric learning for synonym dictionaries.

Train a compact character-n-gram encoder so that names sharing a concept
id cluster on the unit sphere, then link free-text mentions by exact
nearest-neighbour search over the embedded dictionary.
"""
from .encoder import (
    EncoderConfig,
    EncoderModel,
    encode_batch,
    init_model,
    load_checkpoint,
    save_checkpoint,
    tokenize,
)
from .linker import EvalReport, LinkIndex, Prediction, build_index, evaluate, export_embeddings, topk
from .losses import LOSS_KINDS, LossOutput, LossParams, default_params, loss_registry
from .metric import MinedPairs, SimilarityBundle, all_pairs, mine_hard_pairs, similarity_matrix
from .ontology import (
    MentionSet,
    Ontology,
    SynonymRecord,
    load_dictionary,
    load_mentions,
    normalize_name,
)
from .pairgen import (
    MiniBatch,
    PairList,
    PositivePair,
    batch_iter,
    generate_finetune_pairs,
    generate_pairs,
    read_pairs,
    write_pairs,
)
from .synth import SyntheticSpec, generate
from .trainer import OptimizerState, TrainConfig, TrainLog, adamw_step, finetune, pretrain

__version__ = "0.1.0"

__all__ = [
    "EncoderConfig",
    "EncoderModel",
    "EvalReport",
    "LinkIndex",
    "LossOutput",
    "LossParams",
    "LOSS_KINDS",
    "MentionSet",
    "MinedPairs",
    "MiniBatch",
    "Ontology",
    "OptimizerState",
    "PairList",
    "PositivePair",
    "Prediction",
    "SimilarityBundle",
    "SynonymRecord",
    "SyntheticSpec",
    "TrainConfig",
    "TrainLog",
    "adamw_step",
    "all_pairs",
    "batch_iter",
    "build_index",
    "default_params",
    "encode_batch",
    "evaluate",
    "export_embeddings",
    "finetune",
    "generate",
    "generate_finetune_pairs",
    "generate_pairs",
    "init_model",
    "load_checkpoint",
    "load_dictionary",
    "load_mentions",
    "loss_registry",
    "mine_hard_pairs",
    "normalize_name",
    "pretrain",
    "read_pairs",
    "save_checkpoint",
    "similarity_matrix",
    "tokenize",
    "topk",
    "write_pairs",
]
