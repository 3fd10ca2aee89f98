"""Gradient Gibbs measures on regular trees built from periodic boundary laws.

The package solves the q-periodic boundary-law fixed point for summable
symmetric increment potentials, turns solutions into layer-dependent walk
kernels and their mod-q fuzzy chains, computes exact finite-volume marginals
of the pinned measures and of their stationary mixtures, samples them, and
verifies the structural identities (dual representations, consistency under
volume growth, homogeneity, reversibility, correlation bounds).
"""

from .errors import (
    Diverged,
    GGMError,
    Inconclusive,
    MaxIterations,
    NonStochastic,
    NonSummable,
    OutOfWindow,
    PeriodMismatch,
    PinInsideInner,
    TailTooFat,
    UnsupportedDegree,
    UnsupportedPeriod,
    VolumeTooLarge,
)
from .model import (
    SOS,
    DiscreteGaussian,
    FiniteTreeVolume,
    GradientConfiguration,
    IncrementWindow,
    LiftedPotts,
    LiftedPottsPositive,
    PeriodicBoundaryLaw,
    Table,
    cayley_ball,
    eval_q,
    model_from_json,
    model_to_json,
    path_volume,
    total_mass,
    wrapped_row,
    wrapped_sum,
)
from .bl_solver import (
    SolveReport,
    closed_form_q2_sos,
    critical_beta,
    effective_beta,
    find_branches,
    fixed_point_solve,
    is_normalizable,
    ising_type_solve,
    residual,
)
from .chains import (
    FuzzyChain,
    LayerKernel,
    build_layer_kernel,
    check_reversibility,
    fuzzy_transform,
    mixing_profile,
    tv_distance,
)
from .measures import (
    GGMSpec,
    PinnedMeasureSpec,
    alt_ggm_prob,
    check_consistency,
    check_homogeneity,
    check_restricted_dlr,
    coupling_expectation,
    ggm_prob,
    max_dual_gap_ggm,
    max_dual_gap_pinned,
    pinned_prob_bl,
    pinned_prob_product,
    sample_ggm,
    sample_ggm_batch,
    single_bond_marginal,
    two_bond_marginal,
)
from .transfer import (
    CirculantSpec,
    clock_reduction,
    lift_potts,
    lift_potts_positive,
    potts_boundary_laws,
    potts_row,
)
from .diagnostics import (
    CounterexampleChain,
    correlation_and_bound,
    counterexample_conditional_ratio,
    decay_envelope,
    identifiability_check,
)

__version__ = "0.1.0"
