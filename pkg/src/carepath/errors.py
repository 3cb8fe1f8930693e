"""Shared exception types.

``DataError`` covers malformed or inconsistent input (bad codes, broken CSV
rows, impossible configuration).  ``NumericError`` covers estimation
failures: non-convergence, degenerate systems, statistics that are undefined
on the given data.  The command-line interface maps the two families to
distinct exit codes.
"""


class DataError(ValueError):
    pass


class NumericError(RuntimeError):
    pass
