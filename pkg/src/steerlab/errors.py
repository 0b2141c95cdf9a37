"""Exception hierarchy.

Each class maps onto one CLI exit code (see :mod:`steerlab.cli`).
"""


class SteerlabError(Exception):
    """Base class for all package errors."""


class DomainError(SteerlabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InputError(SteerlabError, ValueError):
    """Malformed or incomplete input data (files, configs, records)."""


class ParseError(InputError):
    """A document failed schema validation; ``location`` names the offending key."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class CompletenessError(DomainError):
    """A tomography set is not informationally complete."""


class ResourceError(SteerlabError):
    """A size budget (qubits, hidden strategies) was exceeded."""


class SolverError(SteerlabError):
    """The SDP solver failed to reach its stopping criteria."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SearchError(SteerlabError):
    """An outer optimisation loop found no feasible point."""

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)
