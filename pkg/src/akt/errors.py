"""Exception types shared across the workbench."""


class AktError(Exception):
    """Base class for all workbench errors."""


class DuplicateName(AktError):
    pass


class UnknownObject(AktError):
    pass


class UnknownAction(AktError):
    pass


class ParseError(AktError):
    """Malformed document. Carries the 1-based line number and the offending field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f" (line {line}" + (f", field {field!r}" if field else "") + ")" if line else ""
        super().__init__(message + where)


class InconsistentLabel(AktError):
    pass


class EmptyDataset(AktError):
    pass


class Untrained(AktError):
    pass


class NotExecutable(AktError):
    """Raised when an action's procedure flow has boxes without a taught controller
    or trigger threshold. ``boxes`` lists the offending flow positions."""

    def __init__(self, boxes: list[int]):
        self.boxes = list(boxes)
        super().__init__(f"boxes not executable: {self.boxes}")


class SensorMissing(AktError):
    def __init__(self, channel):
        self.channel = channel
        super().__init__(f"no sensor reading for channel {channel}")


class DegenerateVariance(AktError):
    pass


class InsufficientData(AktError):
    pass


class NotMatched(AktError):
    pass


class TriggerTimeout(AktError):
    def __init__(self, box_index: int, ticks: int):
        self.box_index = box_index
        self.ticks = ticks
        super().__init__(f"box {box_index} never triggered within {ticks} ticks")


class ExpectFailed(AktError):
    def __init__(self, tick: int, expected, actual):
        self.tick = tick
        self.expected = expected
        self.actual = actual
        super().__init__(f"expectation failed at tick {tick}: expected {expected!r}, got {actual!r}")


class Overlap(AktError):
    pass


class IndexOutOfRange(AktError):
    pass
