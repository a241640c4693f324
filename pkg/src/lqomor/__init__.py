"""H2-optimal model order reduction for linear systems with quadratic
output maps: transfer-function evaluation, pole-residue H2 metrics,
multivariate tangential interpolation, and the fixed-point reduction
iteration, plus a discretized advection-diffusion benchmark and a
trapezoidal simulator.
"""

from .benchmarks import (
    AdvecDiffConfig,
    advection_diffusion,
    input_exp,
    input_sinc,
    random_stable_lqo,
)
from .exceptions import LqoError
from .h2 import (
    H2Breakdown,
    h2_error,
    h2_inner_product,
    h2_norm,
    h2_norm_full,
    h2_norm_quadrature,
    output_error_bound,
)
from .interpolation import (
    InterpolationData,
    InterpResiduals,
    build_v_basis,
    build_w_basis,
    petrov_galerkin_project,
    realify_bases,
    reflect_unstable_points,
    verify_h2_optimality,
    verify_interpolation,
)
from .irka import IrkaConfig, IrkaReport, init_eigs, init_imag, lqo_irka, pole_change
from .simulate import (
    SimConfig,
    Trajectory,
    relerr_l2,
    relerr_linf,
    relerr_pointwise,
    simulate,
    u_l2_norm,
)
from .systems import (
    LqoSystem,
    ReducedLqoSystem,
    SpectralData,
    eval_dG1,
    eval_dG2_contracted,
    eval_G1,
    eval_G2_contracted,
    eval_G2_full,
    is_asymptotically_stable,
    make_lqo_system,
    spectral_decompose,
)

__version__ = "0.1.0"
