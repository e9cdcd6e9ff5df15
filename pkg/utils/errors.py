"""
Exception hierarchy shared by every package of the toolkit.

Library code raises these; only the command-line front end catches them.
"""


class LdgcnError(ValueError):
    """Base class for all toolkit errors."""


class ParseError(LdgcnError):
    """Malformed PENMAN input. `offset` is a byte offset into the UTF-8 text."""

    def __init__(self, message: str, offset: int = -1):
        self.offset = offset
        if offset >= 0:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class SerializeError(LdgcnError):
    pass


class ShapeError(LdgcnError):
    pass


class UsageError(LdgcnError):
    pass


class ConfigError(LdgcnError):
    pass


class OptimError(LdgcnError):
    pass


class VocabError(LdgcnError):
    pass


class EvalError(LdgcnError):
    pass


class CheckpointError(LdgcnError):
    pass


class TrainError(LdgcnError):
    """Training aborted; carries where it happened for diagnostics."""

    def __init__(self, message: str, epoch: int, example_id: int):
        self.epoch = epoch
        self.example_id = example_id
        super().__init__(f"{message} (epoch {epoch}, example {example_id})")


class DataError(LdgcnError):
    """Unreadable or malformed dataset file; the message names the path."""
