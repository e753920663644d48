"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""

import numpy as np


class FastCVError(Exception):
    exit_code = 1


class ArgumentError(FastCVError, ValueError):
    exit_code = 2


class ParseError(ArgumentError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularityError(FastCVError, np.linalg.LinAlgError):
    exit_code = 4

    def __init__(self, message, rcond=None):
        self.rcond = rcond
        super().__init__(message)


class SingularFoldError(SingularityError):
    def __init__(self, fold, rcond=None):
        self.fold = fold
        msg = f"(I - H_Te) is singular for fold {fold}"
        if rcond is not None:
            msg += f" (reciprocal condition estimate {rcond:.3e})"
        super().__init__(msg, rcond)


class DegenerateClassError(FastCVError, ValueError):
    exit_code = 4


class DegenerateFoldError(DegenerateClassError):
    def __init__(self, fold, missing):
        self.fold = fold
        self.missing = tuple(int(c) for c in missing)
        super().__init__(
            f"training set of fold {fold} lacks class(es) {list(self.missing)}"
        )


class NumericalDegeneracyError(FastCVError, ArithmeticError):
    exit_code = 4


class UndefinedMetricError(FastCVError, ValueError):
    exit_code = 4
