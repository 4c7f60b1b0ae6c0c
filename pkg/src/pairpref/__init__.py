"""Active preference learning over item pairs by low-rank SPSD completion."""
from .baselines import ArmIndex, lil_ucb, naive_uniform, pairwise_se
from .elimination import EliminationState, SampleTable, run_se, successive_elimination
from .errors import (
    DataFormatError,
    DimensionError,
    InsufficientSamplesError,
    PairPrefError,
    SingularMatrixError,
)
from .model import (
    DeterministicOracle,
    PopulationModel,
    StochasticOracle,
    build_loss_matrix,
    build_reward_matrix,
    optimal_pair,
)
from .plans import PlansResult, recommend_pair, run_plans
from .rplans import RPlansResult, run_rplans, run_rplans_budget, sample_counts

__version__ = "0.1.0"
