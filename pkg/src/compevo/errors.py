"""Exception hierarchy shared across the package."""


class CompevoError(Exception):
    """Base class for all package errors."""


class DataError(CompevoError):
    """Problems with input data (missing cells, shapes, degenerate targets)."""


class ConfigError(CompevoError):
    """Invalid experiment or optimizer configuration."""


class DegenerateData(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SingleClass(DataError):
    pass


class EmptyClass(DataError):
    pass


class MissingValue(DataError):
    def __init__(self, row: int, col: int):
        super().__init__(f"missing value at row {row}, column {col}")
        self.row = row
        self.col = col


class NonNumericCell(DataError):
    def __init__(self, row: int, col: int, value: str):
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {col}")
        self.row = row
        self.col = col


class UnknownColumn(DataError):
    pass


class StratificationImpossible(DataError):
    pass


class EmptyCatalog(ConfigError):
    pass


class ArityMismatch(CompevoError):
    pass


class PointBeyondReference(CompevoError):
    def __init__(self, index: int, point):
        super().__init__(f"point {index} {tuple(point)} does not lie strictly below the reference")
        self.index = index
        self.point = point


class ParseError(CompevoError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class BudgetTooSmall(ConfigError):
    pass
