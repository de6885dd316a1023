from .criteria import (
    DesignCriterion,
    CoverageCriterion,
    MinimaxCriterion,
    EntropyCriterion,
    coverage_criterion,
    split_grid,
    split_objective,
)
from .search import SelectionResult, initial_skeleton, point_swap, annealing_temperature, simulated_annealing
from .selection import (
    METHODS,
    select,
    select_nis,
    select_sfe,
    select_sfs,
    select_seq,
    select_mnx,
    select_ent,
    optimal_split,
)
