"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ItlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ItlError):
    pass


class ParseError(ItlError):
    """A CSV or config file does not follow its documented schema."""

    def __init__(self, path: str, row: int | None, column: str | None, message: str):
        self.path = path
        self.row = row
        self.column = column
        where = path
        if row is not None:
            where += f", row {row}"
        if column is not None:
            where += f", column {column!r}"
        super().__init__(f"{where}: {message}")


class NetworkValidationError(ItlError):
    """Raised when an operation needs a prep-complete network and gets something else."""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(str(v) for v in report.violations[:5])
        more = "" if len(report.violations) <= 5 else f" (+{len(report.violations) - 5} more)"
        super().__init__(f"network failed validation: {lines}{more}")


class ConnectivityError(ItlError):
    """The network is not a single connected component where one is required."""

    def __init__(self, components: list[frozenset[str]]):
        self.components = components
        sizes = ", ".join(str(len(c)) for c in components)
        super().__init__(f"network has {len(components)} components (sizes {sizes})")


class LocationError(ItlError):
    pass


class ImputationError(ItlError):
    pass


class InterfaceMismatchError(ItlError):
    pass


class SolverError(ItlError):
    pass


class ImputationWarning(UserWarning):
    """A value was imputed from a fallback donor pool."""
