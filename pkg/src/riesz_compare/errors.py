"""Exception hierarchy shared by all modules."""


class RieszError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(RieszError, ValueError):
    pass


class SchemaError(RieszError, KeyError):
    """A required CSV column is missing."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(column)

    def __str__(self) -> str:
        return f"missing column {self.column!r}"


class ParseError(RieszError, ValueError):
    """A CSV cell could not be parsed as a number."""

    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r} as a number")


class FunctionalMismatchError(RieszError, ValueError):
    """The dataset lacks the fields the functional needs."""


class ShapeError(RieszError, ValueError):
    pass


class NumericError(RieszError, ValueError):
    pass


class DegenerateColumnError(RieszError, ValueError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Gram diagonal entry {index} is zero; coordinate {index} cannot be updated")


class DegenerateFunctionalError(RieszError, ValueError):
    pass


class DivergenceError(RieszError, RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite objective at epoch {epoch}")


class DegenerateNetworkError(RieszError, RuntimeError):
    pass
