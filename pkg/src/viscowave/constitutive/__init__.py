"""Constitutive kernels, responses, energy densities and speed bounds."""

from .bounds import Ball, speed_bound_generic, speed_bound_model, speed_bound_superposed
from .checks import (
    check_exponential_sufficient,
    dissipation_survey,
    exponential_kernel_F,
    find_generic_violation,
    random_model,
)
from .history import StrainHistory, random_histories
from .laws import AgingTable, ConstantLaw, ExpAging
from .models import (
    GLSM,
    AgingIso,
    AgingPlusExp,
    Elastic,
    ExpConvIso,
    ExponentialKernel,
    FractionalZener,
    GenericKernel,
    MaterialModel,
    SuperposedIntegral,
    SuperposedSum,
    fractional_zener_superposition,
    superpose_integral,
    superpose_sum,
)
from .response import (
    check_F_B,
    energy_densities_generic,
    energy_densities_model,
    fz_stress_quadrature,
    response,
    sigma_tilde,
    stress,
    work_decomposition_residual,
)


def eval_C(model, x, t, s):
    """Kernel value ``C(x, t, s)`` as a 6x6 Kelvin matrix."""
    return model.kernel(t, s, x)


def eval_Ct(model, x, t, s):
    """Partial time derivative ``C_t(x, t, s)``."""
    return model.kernel_t(t, s, x)
