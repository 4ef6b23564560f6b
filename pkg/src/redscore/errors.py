"""Exception types shared across the package."""


class RedscoreError(Exception):
    """Base class for all redscore errors."""


class BundleFormatError(RedscoreError, ValueError):
    """A binary bundle or stats cache file is malformed."""


class DataError(RedscoreError, ValueError):
    """A record file, manifest, or dataset violates an invariant."""


class JoinError(RedscoreError, ValueError):
    """Strict join validation found missing embedding keys."""

    def __init__(self, report):
        self.report = report
        misses = ", ".join(f"{s}/{c}" for s, c, _ in report.misses[:5])
        more = "" if len(report.misses) <= 5 else f" (+{len(report.misses) - 5} more)"
        super().__init__(f"{len(report.misses)} missing embedding keys: {misses}{more}")


class DegenerateDataError(RedscoreError, ValueError):
    """Covariance factorization failed even at the maximum jitter."""


class InfeasibleGridError(RedscoreError, ValueError):
    """No weight triple satisfies the grid constraints."""
