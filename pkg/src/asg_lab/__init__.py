"""asg-lab: event-driven Monte Carlo for ancestry line counting and logistic
branching chains, with verification of their Ornstein-Uhlenbeck fluctuation
limits."""

__version__ = "0.1.0"

from .ctmc import (
    JumpRateMap,
    ModelError,
    OffsetMoves,
    Path,
    embedded_chain,
    evaluate_at,
    simulate_ctmc,
    simulate_marginals,
)
from .line_counting import (
    MoranParams,
    RescaledPath,
    drift_embedded_B,
    jump_map_B,
    moves_B,
    mu_sigma_B,
    rates_B,
    rescale_B,
    sample_stationary_B,
    stationary_B,
    stationary_oracle_B,
)
from .logistic import (
    AssumptionReport,
    LogisticParams,
    NoCarryingCapacityError,
    OffspringDistribution,
    check_assumptions,
    constant_h,
    jump_map_X,
    moran_as_logistic,
    moran_h,
    moves_X,
    moves_Z,
    mu_sigma_X,
    rates_X,
    rescale_X,
    weak_selection_Z,
)
from .moran import (
    AncestrySnapshot,
    ArrowEvent,
    GraphicalRepresentation,
    build_graphical,
    check_pathwise_duality,
    line_counts,
    moves_forward_count,
    propagate_forward,
    rates_forward_count,
    trace_asg,
)
from .ou import OUParams, ou_autocov, ou_exact_step, ou_generator, ou_sample_at, ou_stationary
from .rng import RngStream, derive_stream_seed
from .verify import (
    DualityEstimate,
    GridSpec,
    TestFunction,
    duality_cells,
    duality_check,
    empirical_autocov,
    falling_factorial_ratio,
    function_by_name,
    generator_B_rescaled,
    generator_X_rescaled,
    ks_statistic,
    paired_covariance,
    sup_generator_gap,
    function_library,
)
