"""Flat key=value run configuration shared by the CLI commands.

Precedence is defaults < config file < command-line overrides, and every
run persists its fully resolved configuration next to its outputs so a
result can always be reproduced from the emitted file alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .encoder import EncoderConfig
from .errors import ConfigError
from .losses import LossParams, LOSS_KINDS, default_params
from .trainer import TrainConfig

# Loss hyper-parameter keys default to the registry values for the
# selected kind; None means "not explicitly set".
_LOSS_PARAM_KEYS = ("alpha", "beta", "epsilon", "margin", "scale", "tau", "m", "gamma")


@dataclass
class RunConfig:
    ngram_n: int = 3
    vocab_buckets: int = 100_000
    embed_dim: int = 64
    max_tokens: int = 25
    init_scale: float = 0.05
    learning_rate: float = 2e-5
    weight_decay: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 1
    batch_pairs: int = 256
    mining_enabled: bool = True
    mining_lambda: float = 0.2
    pair_cap: int = 50
    loss: str = "multi_similarity"
    alpha: float | None = None
    beta: float | None = None
    epsilon: float | None = None
    margin: float | None = None
    scale: float | None = None
    tau: float | None = None
    m: float | None = None
    gamma: float | None = None
    seed: int = 0
    explicit: set[str] = field(default_factory=set, repr=False, compare=False)

    def set_key(self, key: str, raw: str) -> None:
        """Parse and assign one key=value entry; unknown keys are rejected."""
        spec = {f.name: f for f in fields(self) if f.name != "explicit"}
        if key not in spec:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            if key == "loss":
                if raw not in LOSS_KINDS:
                    raise ValueError(f"unknown loss kind {raw!r}")
                value: object = raw
            elif key == "mining_enabled":
                if raw not in ("true", "false"):
                    raise ValueError("expected true or false")
                value = raw == "true"
            elif key in ("ngram_n", "vocab_buckets", "embed_dim", "max_tokens", "epochs", "batch_pairs", "pair_cap", "seed"):
                value = int(raw)
            else:
                value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        setattr(self, key, value)
        self.explicit.add(key)

    def loss_params(self) -> LossParams:
        """Registry defaults for the selected kind, plus explicit overrides."""
        params = default_params(self.loss)
        overrides = {
            key: getattr(self, key) for key in _LOSS_PARAM_KEYS if getattr(self, key) is not None
        }
        return replace(params, **overrides) if overrides else params

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            ngram_n=self.ngram_n,
            vocab_buckets=self.vocab_buckets,
            embed_dim=self.embed_dim,
            max_tokens=self.max_tokens,
            init_scale=self.init_scale,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            epochs=self.epochs,
            batch_pairs=self.batch_pairs,
            loss=self.loss_params(),
            mining_enabled=self.mining_enabled,
            mining_lambda=self.mining_lambda,
            pair_cap=self.pair_cap,
            seed=self.seed,
        )

    def resolved_lines(self) -> list[str]:
        """All keys with their final values, loss params fully filled in."""
        params = self.loss_params()
        out = []
        for f in fields(self):
            if f.name == "explicit":
                continue
            value = getattr(self, f.name)
            if f.name in _LOSS_PARAM_KEYS:
                value = getattr(params, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            out.append(f"{f.name}={text}")
        return out

    def write_resolved(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.resolved_lines()) + "\n")


def load_config(path: str) -> RunConfig:
    """Parse a flat key=value file; '#' lines and blank lines are ignored."""
    config = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh.read().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected key=value")
            key, _, raw = stripped.partition("=")
            try:
                config.set_key(key.strip(), raw.strip())
            except ConfigError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from exc
    return config


def apply_overrides(config: RunConfig, overrides: tuple[str, ...]) -> RunConfig:
    """Apply repeatable ``key=value`` command-line overrides in order."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        config.set_key(key.strip(), raw.strip())
    return config
