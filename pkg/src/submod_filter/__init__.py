"""Low-adaptivity monotone submodular maximization under a cardinality constraint."""
from .algorithms import *  # noqa: F401,F403
from .algorithms import __all__ as _alg_all
from .functions import (ConcaveModularInstance, CoverageInstance, FacilityLocationInstance,
                        canonical_coverage, load_instance, synthesize_instance,
                        validate_submodular)
from .oracle import (RoundCapExceeded, RoundLedger, ValueOracle, evaluate_batch,
                     marginal_batch)

__version__ = "0.1.0"

__all__ = list(_alg_all) + [
    "ConcaveModularInstance", "CoverageInstance", "FacilityLocationInstance",
    "canonical_coverage", "load_instance", "synthesize_instance", "validate_submodular",
    "RoundCapExceeded", "RoundLedger", "ValueOracle", "evaluate_batch", "marginal_batch",
]
