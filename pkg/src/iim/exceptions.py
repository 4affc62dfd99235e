"""Exception hierarchy shared by the library and the CLI."""


class IIMError(Exception):
    """Base class for all errors raised by this package."""


class DataError(IIMError):
    """Input data cannot be used (parse, structure, schema problems)."""


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None:
            message = f"row {row}, column {column}: {message}"
        super().__init__(message)


class StructureError(DataError):
    pass


class SchemaError(DataError):
    pass


class NoCompleteTuplesError(DataError):
    def __init__(self, message="no complete tuples"):
        super().__init__(message)


class PlanError(DataError):
    """A masking plan would leave nothing to learn from."""


class ImputationError(DataError):
    pass


class NumericError(IIMError):
    """A linear system stayed singular after the ridge fallback."""
