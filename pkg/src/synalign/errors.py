"""Exception hierarchy shared by all synalign modules.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit-code contract: 1 usage, 2 data, 3 numeric.
"""
from __future__ import annotations


class SynalignError(Exception):
    """Base class for all synalign errors."""

    exit_code = 2


class UsageError(SynalignError):
    """Invalid invocation: bad flag value, unknown config key, bad loss kind."""

    exit_code = 1


class DataError(SynalignError):
    """Malformed or unusable input data."""

    exit_code = 2


class NumericError(SynalignError):
    """Degenerate numeric state (non-finite values, zero vectors, bad shapes)."""

    exit_code = 3


class MalformedLineError(DataError):
    """A delimited input line does not match the expected layout."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class EmptyFileError(DataError):
    """An input file produced zero usable records."""


class EmptyGoldSetError(DataError):
    """A mention line carries no gold concept identifiers."""

    def __init__(self, path: str, line_no: int):
        super().__init__(f"{path}:{line_no}: empty gold concept set")
        self.path = path
        self.line_no = line_no


class UnknownConceptError(DataError):
    """A mention's gold concept is absent from the reference dictionary."""

    def __init__(self, mention_index: int, cui: str):
        super().__init__(f"mention {mention_index}: gold concept {cui!r} not in dictionary")
        self.mention_index = mention_index
        self.cui = cui


class EmptyPairListError(DataError):
    """Training was requested on an empty positive-pair list."""


class EmptyMentionSetError(DataError):
    """Evaluation was requested on an empty mention set."""


class CheckpointFormatError(DataError):
    """A checkpoint file is truncated, has bad magic bytes, or a bad version."""


class UnknownLossKindError(UsageError):
    """Requested loss kind is not in the registry."""

    def __init__(self, kind: str, known: tuple[str, ...]):
        super().__init__(f"unknown loss kind {kind!r}; expected one of {', '.join(known)}")
        self.kind = kind


class ConfigError(UsageError):
    """A run-config file or override could not be parsed."""


class ZeroVectorError(NumericError):
    """An embedding row has (near-)zero norm and cannot be L2-normalized."""


class NonFiniteGradientError(NumericError):
    """A gradient tensor contains NaN or infinity."""

    def __init__(self, iteration: int, tensor: str):
        super().__init__(f"non-finite gradient in {tensor} at iteration {iteration}")
        self.iteration = iteration
        self.tensor = tensor


class ShapeMismatchError(NumericError):
    """Tensor shapes disagree with the model configuration."""
