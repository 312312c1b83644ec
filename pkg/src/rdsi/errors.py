"""Exception hierarchy shared across the library and the CLI.

Each class maps to one CLI exit status so that callers can tell apart
malformed inputs, violated modelling assumptions, infeasible
configurations, and blown resource caps.
"""


class RdsiError(Exception):
    """Base class for all library errors."""

    exit_status = 1
    kind = "error"


class InvalidInstanceError(RdsiError):
    """Input data is structurally broken (bad shapes, negative mass, ...)."""

    exit_status = 2
    kind = "parse"


class AssumptionError(RdsiError):
    """A modelling precondition fails (zero-distortion assumption, domain)."""

    exit_status = 3
    kind = "assumption"


class InfeasibleError(RdsiError):
    """No admissible solution exists for the requested targets/config."""

    exit_status = 4
    kind = "infeasible"


class ResourceCapError(RdsiError):
    """A combinatorial or memory cap would be exceeded."""

    exit_status = 5
    kind = "cap"
