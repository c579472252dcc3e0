"""Exception types shared across the library."""


class FactlineError(Exception):
    """Base class for all library errors."""


class ValidationError(FactlineError):
    """A value violates a documented invariant (bad distribution, bad record, ...)."""


class ConfigurationError(FactlineError):
    """A configuration value is out of its allowed range."""


class NoTemporalAnchor(FactlineError):
    """No event in the claim or evidence carries a date."""


class MissingEmbedding(FactlineError):
    """A sidecar embedding file has no row for the requested (event, token)."""


class OracleError(FactlineError):
    """The order-consistency oracle could not match a claim event to the timeline."""


class CategoryUnsatisfiable(FactlineError):
    """A timeline cannot supply the requested category (overlap/recurrence) sample."""


class PerturbationImpossible(FactlineError):
    """No permutation of the sampled events violates the order oracle."""


class CorruptionImpossible(FactlineError):
    """The vocabulary offers no alternative object for a relation."""


class GraphError(FactlineError):
    """Autodiff graph construction failed (shape mismatch and friends)."""


class DivergenceError(FactlineError):
    """Training produced a non-finite loss or activation."""
