"""vamcert: viscosity-type proximal iterations in geodesic spaces, with
empirically certified quantitative rate witnesses.

The package runs damped fixed-point schemes x_{n+1} = combine(f(x_n),
T_n x_n, 1 - alpha_n) over Euclidean and metric-tree spaces, constructs the
explicit convergence/regularity/metastability witnesses the scheme admits,
and checks every witness against measured residuals.
"""

from .engine import (
    BoundConstant,
    IterationConfig,
    Trace,
    browder_point,
    compute_bound_constant,
    halpern_trace,
    run_iteration,
    w_sequence,
)
from .moduli import (
    Budget,
    BudgetExceeded,
    MetaRate,
    Modulus,
    Role,
    budget_scope,
    budgeted,
    cauchy_from_conv,
    combine_linear,
    divergence_scale,
    divergence_sum,
    divergence_tail_shift,
    lmeta_from_asreg,
    meta_dagger,
    meta_from_cauchy,
    meta_from_eps,
    meta_plus,
    meta_to_eps,
    meta_transfer,
    monus,
    sabach_shtern_bound,
    xu_rate,
)
from .operators import (
    ConstantMap,
    GeodesicPull,
    Indicator,
    ProxFamily,
    ResolventFamily,
    ScaledL1,
    ShrinkTowardRoot,
    SquaredDistance,
    check_res,
    family_eval,
    prox_eval,
    resolvent_nonexp_eval,
    tilde_T_eval,
)
from .schedules import (
    MissingWitnessError,
    Schedule,
    Witnesses,
    custom_schedule,
    derive_alpha_divergence,
    derive_lambda_witnesses,
    harmonic_schedule,
    power34_schedule,
    power_decay_schedule,
    shifted_harmonic_schedule,
)
from .spaces import Ball, Box, EuclideanSpace, TreePoint, TripodSpace, WholeSpace, check_axioms
from .verify import (
    Status,
    Verdict,
    verify_cauchy_modulus,
    verify_conv_rate,
    verify_divergence_rate,
    verify_metastability,
)

__version__ = "0.1.0"
