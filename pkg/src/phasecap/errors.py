"""Exception hierarchy. Every error raised on purpose by the package derives from PhaseCapError."""


class PhaseCapError(Exception):
    pass


class InvalidInput(PhaseCapError, ValueError):
    pass


class NotPositiveSemidefinite(PhaseCapError, ValueError):
    pass


class NotPositiveDefinite(PhaseCapError, ValueError):
    pass


class InvalidBlocks(PhaseCapError, ValueError):
    pass


class DegenerateForm(PhaseCapError, ValueError):
    pass


class IngestError(PhaseCapError, ValueError):
    """Malformed point-cloud source. ``row``/``column`` are 1-based when known."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateScatter(PhaseCapError, ValueError):
    pass


class GeneralPositionFailure(PhaseCapError, RuntimeError):
    pass


class TooLarge(PhaseCapError, ValueError):
    pass


class FlowOverflow(PhaseCapError, OverflowError):
    pass
