"""Exception types shared across the package.

Argument misuse raises plain ValueError. The two classes below separate
problems with input data from problems during model/correction fitting,
so the CLI can map them to distinct exit codes.
"""


class DataError(Exception):
    """Input data is malformed, empty, degenerate, or misaligned."""


class TrainingError(Exception):
    """Model training or correction fitting failed (divergence, rank deficiency)."""
