"""Exception types shared across the package."""


class BlockbootError(Exception):
    """Base class for all package errors."""


class DomainMismatchError(BlockbootError, ValueError):
    """Operands live on different grids or carry different weights."""


class EmptyInputError(BlockbootError, ValueError):
    """An operation received an empty sample or zero-length input."""


class PlanMismatchError(BlockbootError, ValueError):
    """A block plan is inconsistent with the sample it is applied to."""


class InsufficientSampleError(BlockbootError, ValueError):
    """The sample is too short for the requested statistic."""


class UnsupportedStatisticError(BlockbootError, TypeError):
    """The requested reduction does not apply to this kind of replicates."""


class ConfigError(BlockbootError, ValueError):
    """Invalid process, kernel, or experiment configuration."""


class CvmSpecError(BlockbootError, ValueError):
    """Invalid goodness-of-fit specification (weights or hypothesized CDF)."""
