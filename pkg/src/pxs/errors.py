"""Exception hierarchy shared across the package."""


class PxsError(Exception):
    pass


class ValidationError(PxsError, ValueError):
    """A grid or task violates its structural invariants."""


class FormatError(PxsError, ValueError):
    def __init__(self, task_id, field, message):
        self.task_id = task_id
        self.field = field
        super().__init__(f"task {task_id!r}, field {field!r}: {message}")


class ContractError(PxsError, ValueError):
    """A caller broke an operation's precondition."""


class ParseError(PxsError):
    """Token sequence does not decode to a grid.

    ``kind`` is one of ``ragged``, ``empty``, ``alphabet-misuse``,
    ``unterminated`` or ``oversize``.
    """

    def __init__(self, kind, message=""):
        self.kind = kind
        super().__init__(f"{kind}: {message}" if message else kind)


class TransportError(PxsError):
    pass


class ProtocolError(PxsError):
    pass


class ScoringError(PxsError):
    pass


class DegenerateEnsembleError(PxsError, ValueError):
    pass
