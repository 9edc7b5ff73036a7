"""Learn coupled image-evolution PDEs from image pairs by optimal control.

The evolution couples an image field u with an indicator field v; both
move under coefficient-weighted sums of the 17 fundamental translation-
and rotation-invariant differential expressions up to second order.  The
coefficients are time-dependent controls fitted to (input, output) image
pairs by adjoint-based gradient descent with conjugate-gradient directions
and a golden-section line search.
"""

from .fields import (
    DerivativeChannels,
    Field,
    GridMismatchError,
    PARTIALS,
    derivatives,
    integrate_space,
    integrate_time,
    pad,
    rotate90,
    rotate90_channels,
    shift_interior,
    time_steps,
)
from .invariants import (
    INVARIANT_COUNT,
    SWAP,
    InvariantJacobian,
    InvariantStack,
    compute_invariants,
    invariant_jacobian,
)
from .forward_solver import (
    BLOWUP_BOUND,
    BlowUpError,
    CoefficientSchedule,
    Trajectory,
    evolve,
    rhs,
    step,
)
from .adjoint_solver import AdjointTrajectory, adjoint_step, sigma_fields, solve_adjoint
from .objective import (
    GradientSchedule,
    TrainingPair,
    evaluate,
    gradient,
    gradient_check,
)
from .trainer import (
    InitializationError,
    TrainerConfig,
    TrainingReport,
    golden_search,
    initialize,
    train,
)
from .metrics import BinaryMask, f_measure, format_psnr, psnr, threshold
from .dataset_io import (
    BlurTask,
    DiffuseTask,
    IdentityTask,
    Manifest,
    NoiseTask,
    add_noise,
    diffuse,
    gaussian_blur,
    load_image,
    load_manifest,
    load_schedule,
    make_synthetic,
    save_image,
    save_manifest,
    save_schedule,
    synthetic_scenes,
)

__version__ = "0.1.0"
