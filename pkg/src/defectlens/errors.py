"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
1 for usage/config problems, 2 for data problems, 3 for training failures.
"""

from __future__ import annotations


class DefectLensError(Exception):
    exit_code = 1


class ConfigError(DefectLensError):
    exit_code = 1


class NonDifferentiableModel(ConfigError):
    pass


class DataError(DefectLensError):
    exit_code = 2


class MissingColumn(DataError):
    def __init__(self, name: str):
        super().__init__(f"missing column: {name}")
        self.name = name


class NonNumericCell(DataError):
    def __init__(self, row: int, column: str, value: str = ""):
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")
        self.row = row
        self.column = column


class EmptyTable(DataError):
    pass


class NegativeCount(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class WidthMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class InconsistentWidth(DataError):
    pass


class SingleClass(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class EmptyBackground(DataError):
    pass


class TooManyFeatures(DataError):
    pass


class TrainingError(DefectLensError):
    exit_code = 3


class NonFiniteLoss(TrainingError):
    pass
