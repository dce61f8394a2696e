# exceptions.py
"""Errors raised across the toolkit. Everything derives from LiModelError so the
CLI can turn any of them into a one-line message."""


class LiModelError(Exception):
    """Base class for every error raised by this package."""


class InvalidValue(LiModelError, ValueError):
    """A parameter or configuration value failed validation."""


class UnknownKey(LiModelError):
    """A config file or override named a key that does not exist."""


class MissingRequired(LiModelError):
    """A required setting (e.g. the subcommand) was not supplied."""


class NoConvergence(LiModelError):
    """Newton polishing failed from every seed of a terminal rectangle,
    or the search region never captured a root."""


class RootCountUnstable(LiModelError):
    """The winding number along a contour did not settle under refinement,
    usually because a root sits on or very near the contour."""


class SingularEigenproblem(LiModelError):
    """The eigenvector normalisation denominator vanished."""


class NoSignChange(LiModelError):
    """A bracketing search was asked to find a sign change that is not there."""


class SimulationDiverged(LiModelError):
    """A NaN or Inf appeared in the simulated fields."""


class AllCensored(LiModelError):
    """Every replicate ended without crossing the detection threshold."""


class IoFailure(LiModelError):
    """Writing or reading an output file failed."""


def invalid_value_from(err, what: str) -> InvalidValue:
    """Turn a pydantic ValidationError into an InvalidValue naming the bad fields."""
    problems = "; ".join(
        f"{'.'.join(str(part) for part in e['loc']) or what}: {e['msg']}" for e in err.errors()
    )
    return InvalidValue(f"Invalid {what}: {problems}")
