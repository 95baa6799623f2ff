"""qsolsim: quantum noise of damped optical solitons via cumulant closure.

The package propagates the first- and second-order cumulants of the
discretized pulse field (a Gaussian closure of the full hierarchy) and
evaluates the standard quantum-noise observables: local uncertainty
ellipses, squeezed-thermal parameters, balanced-homodyne squeezing spectra
and spectral photon-number correlations.  A truncated-Fock-space master
equation oracle certifies the closure and the observable formulas at small
mode counts.
"""

__version__ = "0.1.0"

from .dynamics import (
    RHSCoefficients,
    photon_balance_residual,
    propagate,
    rhs,
    rhs_first_order,
    rhs_second_order,
)
from .integrator import IntegrationResult, StepControl, integrate, integrate_fixed, step
from .observables import (
    CorrelationResult,
    EllipseParams,
    LOPulse,
    SpectrumResult,
    SqueezedThermalParams,
    frequency_grid,
    intensity,
    photon_correlation,
    squeezed_thermal_params,
    squeezing_spectrum,
    uncertainty_ellipse,
)
from .params import (
    PhysicalInputs,
    ScaledParams,
    derive_scales,
    gaussian_validity_ratio,
    rhs_coefficients,
    thermal_occupation,
)
from .state import (
    CumulantDerivative,
    CumulantState,
    GridSpec,
    fundamental_soliton,
    reorder_s,
    thermal_state,
    validate,
)
from .tableaus import DORMAND_PRINCE_54, DORMAND_PRINCE_853, Tableau

__all__ = [
    "__version__",
    "CorrelationResult",
    "CumulantDerivative",
    "CumulantState",
    "DORMAND_PRINCE_54",
    "DORMAND_PRINCE_853",
    "EllipseParams",
    "GridSpec",
    "IntegrationResult",
    "LOPulse",
    "PhysicalInputs",
    "RHSCoefficients",
    "ScaledParams",
    "SpectrumResult",
    "SqueezedThermalParams",
    "StepControl",
    "Tableau",
    "derive_scales",
    "frequency_grid",
    "fundamental_soliton",
    "gaussian_validity_ratio",
    "integrate",
    "integrate_fixed",
    "intensity",
    "photon_balance_residual",
    "photon_correlation",
    "propagate",
    "reorder_s",
    "rhs",
    "rhs_coefficients",
    "rhs_first_order",
    "rhs_second_order",
    "squeezed_thermal_params",
    "squeezing_spectrum",
    "step",
    "thermal_occupation",
    "thermal_state",
    "uncertainty_ellipse",
    "validate",
]
