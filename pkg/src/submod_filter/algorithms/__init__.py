from .baselines import (BRUTE_FORCE_CAP, InstanceTooLarge, brute_force_opt, greedy,
                        lazy_greedy, random_baseline)
from .config import (EpochRecord, FilterRecord, RunResult, SolverConfig, default_m,
                     default_r)
from .filtering import (FilterExhausted, FilterOutcome, OptGuessGrid, amortized_filtering,
                        amortized_filtering_full, amortized_filtering_proxy,
                        filter_elements, iterative_filtering)

__all__ = [
    "BRUTE_FORCE_CAP", "InstanceTooLarge", "brute_force_opt", "greedy", "lazy_greedy",
    "random_baseline", "EpochRecord", "FilterRecord", "RunResult", "SolverConfig",
    "default_m", "default_r", "FilterExhausted", "FilterOutcome", "OptGuessGrid",
    "amortized_filtering", "amortized_filtering_full", "amortized_filtering_proxy",
    "filter_elements", "iterative_filtering",
]
