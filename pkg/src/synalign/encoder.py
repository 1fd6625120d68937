"""Trainable character-n-gram hashing encoder.

A name is padded with boundary markers, cut into character n-grams,
each hashed into one of V buckets (64-bit FNV-1a), embedded, mean
pooled, and sent through a learned affine projection. Forward and
backward passes are exact and written out by hand so the whole training
path stays differentiable without a framework.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointFormatError, ShapeMismatchError

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_MAGIC = b"SAPE"
_FORMAT_VERSION = 1
# magic, version, ngram_n, vocab_buckets, embed_dim, max_tokens, init_scale, seed
_HEADER = struct.Struct("<4sIIQIIdQ")


@dataclass(frozen=True)
class EncoderConfig:
    ngram_n: int = 3
    vocab_buckets: int = 100_000
    embed_dim: int = 64
    max_tokens: int = 25
    init_scale: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ngram_n < 1 or self.vocab_buckets < 1 or self.embed_dim < 1 or self.max_tokens < 1:
            raise ValueError("ngram_n, vocab_buckets, embed_dim, max_tokens must all be >= 1")


@dataclass
class EncoderModel:
    """Mutable parameter bundle; shapes are pinned by the config."""

    config: EncoderConfig
    embedding_table: np.ndarray  # (V, d)
    proj_weight: np.ndarray  # (d, d)
    proj_bias: np.ndarray  # (d,)

    def copy(self) -> "EncoderModel":
        return EncoderModel(
            config=self.config,
            embedding_table=self.embedding_table.copy(),
            proj_weight=self.proj_weight.copy(),
            proj_bias=self.proj_bias.copy(),
        )


@dataclass
class ForwardCache:
    """Per-batch workspace the backward pass replays."""

    token_ids: list[np.ndarray]
    pooled: np.ndarray  # (B, d)
    outputs: np.ndarray  # (B, d)


@dataclass
class ParamGrads:
    embedding_table: np.ndarray
    proj_weight: np.ndarray
    proj_bias: np.ndarray


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def tokenize(name: str, config: EncoderConfig) -> np.ndarray:
    """Hash a name's character n-grams into bucket ids.

    The name is padded as ``^name$``; if the padded string is shorter
    than n (empty name), the padded string itself is the single n-gram.
    The id list is truncated to ``max_tokens``.
    """
    padded = f"^{name}$"
    n = config.ngram_n
    if len(padded) < n:
        grams = [padded]
    else:
        grams = [padded[i : i + n] for i in range(len(padded) - n + 1)]
    grams = grams[: config.max_tokens]
    ids = [fnv1a_64(g.encode("utf-8")) % config.vocab_buckets for g in grams]
    return np.asarray(ids, dtype=np.int64)


def init_model(config: EncoderConfig) -> EncoderModel:
    """Draw parameters uniform(-init_scale, +init_scale); bias starts at zero."""
    rng = np.random.default_rng(config.seed)
    scale = config.init_scale
    v, d = config.vocab_buckets, config.embed_dim
    return EncoderModel(
        config=config,
        embedding_table=rng.uniform(-scale, scale, size=(v, d)),
        proj_weight=rng.uniform(-scale, scale, size=(d, d)),
        proj_bias=np.zeros(d),
    )


def encode_batch(model: EncoderModel, names: list[str]) -> tuple[np.ndarray, ForwardCache]:
    """Embed each name independently: mean of token embeddings, then W·x + b.

    The projection runs per name (matvec, not batched GEMM) so a name's
    embedding is bit-identical regardless of batch composition.
    """
    if not names:
        raise ValueError("names must be nonempty")
    d = model.config.embed_dim
    token_ids = [tokenize(name, model.config) for name in names]
    pooled = np.empty((len(names), d))
    outputs = np.empty((len(names), d))
    for i, ids in enumerate(token_ids):
        pooled[i] = model.embedding_table[ids].mean(axis=0)
        outputs[i] = model.proj_weight @ pooled[i] + model.proj_bias
    return outputs, ForwardCache(token_ids=token_ids, pooled=pooled, outputs=outputs)


def backward_batch(model: EncoderModel, cache: ForwardCache, grad_f: np.ndarray) -> ParamGrads:
    """Chain-rule gradients for all parameters given d(loss)/d(outputs).

    The embedding gradient is dense with only touched rows nonzero;
    repeated bucket ids within a name accumulate by summation.
    """
    b, d = cache.outputs.shape
    if grad_f.shape != (b, d):
        raise ShapeMismatchError(f"grad_f shape {grad_f.shape} != outputs shape {(b, d)}")
    grad_bias = grad_f.sum(axis=0)
    grad_weight = grad_f.T @ cache.pooled
    grad_pooled = grad_f @ model.proj_weight
    grad_emb = np.zeros_like(model.embedding_table)
    for i, ids in enumerate(cache.token_ids):
        np.add.at(grad_emb, ids, grad_pooled[i] / len(ids))
    return ParamGrads(embedding_table=grad_emb, proj_weight=grad_weight, proj_bias=grad_bias)


def _expect(fh, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise CheckpointFormatError(f"truncated checkpoint: expected {size} bytes for {what}")
    return data


def _write_tensor(fh, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_tensor(fh, shape: tuple[int, ...], what: str) -> np.ndarray:
    count = int(np.prod(shape))
    data = _expect(fh, count * 8, what)
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)


def save_checkpoint(model: EncoderModel, path: str, optimizer_state=None) -> None:
    """Write a versioned binary checkpoint; bit-exact round-trips.

    Layout: magic ``SAPE``, format version, config fields, then each
    tensor as row-major little-endian float64. A trailing flag marks an
    optional optimizer-state section (step counter plus first/second
    moments in parameter order) used for resumable training.
    """
    cfg = model.config
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                _MAGIC,
                _FORMAT_VERSION,
                cfg.ngram_n,
                cfg.vocab_buckets,
                cfg.embed_dim,
                cfg.max_tokens,
                cfg.init_scale,
                cfg.seed,
            )
        )
        _write_tensor(fh, model.embedding_table)
        _write_tensor(fh, model.proj_weight)
        _write_tensor(fh, model.proj_bias)
        if optimizer_state is None:
            fh.write(struct.pack("<B", 0))
        else:
            fh.write(struct.pack("<BQ", 1, optimizer_state.step))
            for tensor in optimizer_state.tensors():
                _write_tensor(fh, tensor)


def load_checkpoint(path: str, with_optimizer: bool = False):
    """Read a checkpoint; returns the model, or (model, state-or-None).

    ``state`` is an opaque (step, tensors) tuple consumed by the trainer.
    """
    with open(path, "rb") as fh:
        header = _expect(fh, _HEADER.size, "header")
        magic, version, ngram_n, vocab_buckets, embed_dim, max_tokens, init_scale, seed = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise CheckpointFormatError(f"bad magic bytes {magic!r}")
        if version != _FORMAT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        config = EncoderConfig(
            ngram_n=ngram_n,
            vocab_buckets=vocab_buckets,
            embed_dim=embed_dim,
            max_tokens=max_tokens,
            init_scale=init_scale,
            seed=seed,
        )
        v, d = vocab_buckets, embed_dim
        model = EncoderModel(
            config=config,
            embedding_table=_read_tensor(fh, (v, d), "embedding_table"),
            proj_weight=_read_tensor(fh, (d, d), "proj_weight"),
            proj_bias=_read_tensor(fh, (d,), "proj_bias"),
        )
        (has_optimizer,) = struct.unpack("<B", _expect(fh, 1, "optimizer flag"))
        raw_state = None
        if has_optimizer:
            (step,) = struct.unpack("<Q", _expect(fh, 8, "optimizer step"))
            shapes = [(v, d), (d, d), (d,)]
            tensors = [_read_tensor(fh, s, "optimizer moment") for s in shapes + shapes]
            raw_state = (step, tensors)
        if fh.read(1):
            raise CheckpointFormatError("trailing bytes after checkpoint payload")
    if with_optimizer:
        return model, raw_state
    return model
