"""liepg: Lie-algebra-parameterized Gaussian policy optimization.

Closed-form projectors for classical matrix Lie algebras, the matrix
exponential's Frechet derivative machinery, Lie-group control environments,
Fisher/alignment diagnostics, the Lie-projected policy gradient optimizer, and
an experiment harness for smoothness, convergence, timing, and robustness
studies.
"""

from .algebra import (
    AlgebraDescriptor,
    AlgebraElement,
    AlgebraKind,
    coords_of,
    hyperbolic_witness,
    make_descriptor,
    matrix_of,
    project,
)
from .envs import (
    AnisotropyMode,
    EnvState,
    PerturbationConfig,
    Se3Env,
    So3TrackingEnv,
    StepResult,
    WitnessBandit,
    witness_g2,
    witness_gradient,
    witness_objective,
)
from .estimation import (
    FisherEstimate,
    Trajectory,
    ZeroGradientError,
    alignment,
    block_structure_check,
    estimate_fisher,
    fisher_stats,
    kantorovich_bound,
    reinforce_gradient,
)
from .expmap import (
    SmoothnessParams,
    frechet_adjoint,
    mat_exp,
    mat_exp_frechet,
    so3_exp,
    so3_log,
    theoretical_lipschitz,
)
from .optim import (
    Method,
    OptimizerConfig,
    RunRecord,
    Schedule,
    lpg_run,
    natural_gradient_run,
    radius_project,
    step_size,
)
from .policy import (
    AmbientPolicy,
    ConstantBasisFeatures,
    GaussianLiePolicy,
    OrientationScaledFeatures,
)

__version__ = "0.1.0"
