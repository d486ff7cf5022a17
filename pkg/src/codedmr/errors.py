"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A model, allocation, or job parameter is outside its valid range."""


class EdgeListError(ValueError):
    """An edge-list file could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConsistencyError(RuntimeError):
    """An internal invariant was violated (bad inputs to encode, incomplete
    shuffle delivery, or a load-dominance check that should never fail)."""


class DecodeError(RuntimeError):
    """A receiver could not reconcile received messages with the table layout
    it reconstructed from the allocation and graph."""

    def __init__(self, message: str, group=None, sender=None, column=None):
        parts = [message]
        if group is not None:
            parts.append(f"group={tuple(group)}")
        if sender is not None:
            parts.append(f"sender={sender}")
        if column is not None:
            parts.append(f"column={column}")
        super().__init__(" ".join(parts))
        self.group = tuple(group) if group is not None else None
        self.sender = sender
        self.column = column
