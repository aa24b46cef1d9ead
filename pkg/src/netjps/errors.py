"""Exception types shared across the package.

Every error raised by the library derives from :class:`NetjpsError`; the
``code`` attribute is a stable machine-readable tag that the CLI maps to a
distinct exit status.
"""


class NetjpsError(Exception):
    code = "error"


class InputError(NetjpsError):
    """Rejected input: bad edge records, malformed CSV rows, shape errors."""

    code = "input"


class ConfigError(NetjpsError):
    """Run-configuration parse or validation failure (names field and line)."""

    code = "config"


class UnboundColumnError(ConfigError):
    """A bound column name does not exist in the ingested table."""

    code = "unbound-column"


class DomainError(NetjpsError):
    """Value outside a mathematical domain (nonpositive scale, log of <= 0, ...)."""

    code = "domain"


class DegenerateSampleError(DomainError):
    """Sample statistic undefined, e.g. skewness of a zero-variance sample."""

    code = "degenerate-sample"


class NoRootError(NetjpsError):
    """Root finder could not bracket a sign change."""

    code = "no-root"


class SingularDesignError(NetjpsError):
    """Rank-deficient regression design; ``columns`` names the offending set."""

    code = "singular-design"

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DegenerateNormalizerError(NetjpsError):
    """Trade-normalized exposure requested on a period with no nonzero weights."""

    code = "degenerate-normalizer"


class DegenerateExposureError(NetjpsError):
    """All exposures identical: the joint treatment model is unidentified."""

    code = "degenerate-exposure"


class BootstrapError(NetjpsError):
    """Too many bootstrap replicates failed; carries failure diagnostics."""

    code = "bootstrap-failed"

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = tuple(failures)
