"""Auto-models for mixed-state observations on lattices.

Random variables that put point masses on a few atoms and a density on a
continuous interval, coupled through pairwise-interaction Markov random
fields whose local conditionals stay inside one exponential family. The
package covers the single-variable families, the lattice models, their
admissibility and cooperation diagnostics, exact Gibbs sampling, brute-force
oracles on tiny lattices, maximum pseudo-likelihood estimation, and the
motion-map isotropy pipeline.
"""

from .admissibility import (
    AdmissibilityVerdict,
    ConditionViolation,
    check_censored,
    check_mixed_exponential,
    check_model,
    check_positive_gaussian,
    check_truncated,
    worst_case_interaction_sum,
)
from .automodel import AutoModel, GeneralAutoModel, Lattice
from .errors import (
    DomainError,
    FitError,
    FormatError,
    InadmissibleParameterError,
    MixedStateError,
    NonIdentifiableError,
    ParameterError,
)
from .estimation import (
    BootstrapResult,
    FitOptions,
    FitReport,
    Parameterization,
    block_init_field,
    bootstrap_se,
    fit,
    grad_log_pseudo_likelihood,
    log_pseudo_likelihood,
    mixed_init_field,
)
from .families import (
    CensoredMixedExponential,
    MixedExponential,
    MixedGamma,
    MixedStateFamily,
    OriginalParams,
    PositiveMixedGaussian,
    TruncatedMixedExponential,
    family_from_kind,
)
from .modelio import parse_model_config, read_report, write_model_config, write_report
from .motion import (
    AnalyzeOptions,
    IsotropyReport,
    MixedHistogram,
    MotionMap,
    analyze,
    frame_difference_magnitude,
    ingest,
    mixed_histogram,
    read_pgm,
    write_pgm,
)
from .oracle import (
    ConditionalTable,
    Discretization,
    JointTable,
    conditional_fiber,
    conditional_from_joint,
    default_discretization,
    family_distribution_on_grid,
    joint_table,
    moment,
    total_variation,
)
from .sampler import (
    AllContinuous,
    AllReference,
    GibbsConfig,
    SimulationResult,
    gibbs_sweep,
    initial_field,
    simulate,
)
from .state_space import (
    Atom,
    Continuous,
    Field,
    Interval,
    MixedValue,
    StateSpace,
    field_from_csv,
    field_to_csv,
    indicator_vector,
    parse_field,
    write_field,
)

__version__ = "0.1.0"
