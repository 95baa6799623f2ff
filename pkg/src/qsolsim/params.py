"""Laboratory inputs and their reduction to dimensionless couplings.

Everything the dynamics needs boils down to a handful of dimensionless
numbers: the damping per dispersion time gamma_t, the signs of the dispersion
and Kerr coefficients, the per-cell photon scale n0, the reservoir occupation
and an optional frequency offset.  This module performs that reduction from
fiber-lab quantities (pulse width, dispersion parameter D, loss in dB/km,
wavelength, temperature) and packages the result for the RHS evaluation.

Unit conventions: the dispersion parameter is accepted in ps nm^-1 km^-1 and
the loss in dB km^-1, as usual in fiber optics; everything else is SI.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .dynamics import RHSCoefficients
from .state import GridSpec

C_LIGHT = 299792458.0          # m / s
HBAR = 1.054571817e-34         # J s
K_BOLTZMANN = 1.380649e-23     # J / K

__all__ = [
    "PhysicalInputs",
    "ScaledParams",
    "thermal_occupation",
    "derive_scales",
    "rhs_coefficients",
    "gaussian_validity_ratio",
]


@dataclass(frozen=True)
class PhysicalInputs:
    """Fiber and pulse parameters as set in the laboratory.

    t0           temporal pulse width [s]
    D            fiber dispersive parameter [ps nm^-1 km^-1]
    Gamma        power loss [dB km^-1]
    lambda_c     carrier wavelength [m]
    T            reservoir temperature [K]
    nbar         peak photon-number scale of the pulse [dimensionless]
    sign_chi     sign of the Kerr coefficient
    sign_omega2  sign of the group-velocity-dispersion coefficient
    delta_omega  frequency offset of the rotating frame [1/s]
    """

    t0: float
    D: float
    Gamma: float
    lambda_c: float = 1.5e-6
    T: float = 300.0
    nbar: float = 1e9
    sign_chi: int = 1
    sign_omega2: int = -1
    delta_omega: float = 0.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError(f"pulse width must be positive, got t0={self.t0}")
        if self.D == 0:
            raise ValueError("dispersive parameter D = 0 gives an infinite dispersion length")
        if not self.nbar > 0:
            raise ValueError(f"photon scale must be positive, got nbar={self.nbar}")
        if not self.lambda_c > 0:
            raise ValueError(f"wavelength must be positive, got lambda_c={self.lambda_c}")
        if self.T < 0:
            raise ValueError(f"temperature must be non-negative, got T={self.T}")
        if self.Gamma < 0:
            raise ValueError(f"loss must be non-negative, got Gamma={self.Gamma}")
        if self.sign_chi not in (-1, 1) or self.sign_omega2 not in (-1, 1):
            raise ValueError("sign_chi and sign_omega2 must be +1 or -1")
        if self.sign_chi * self.sign_omega2 >= 0:
            warnings.warn(
                "sign(chi) * sign(omega2) >= 0: dispersion and self-phase modulation "
                "do not balance, no soliton regime",
                stacklevel=2,
            )


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless coefficients plus provenance scales.

    Only gamma_t, the signs, n0, n_th and delta_omega_t enter the dynamics.
    x_d is the dispersion length in meters; t_d is the dispersion time
    estimated with the vacuum speed of light standing in for the group
    velocity (provenance only, never used numerically).
    """

    gamma_t: float
    disp_sign: int
    chi_sign: int
    n0: float
    nbar: float
    n_th: float
    delta_omega_t: float
    s: float
    t_d: float
    x_d: float

    def __post_init__(self):
        if self.n_th < 0:
            raise ValueError("reservoir occupation must be non-negative")
        if self.gamma_t < 0:
            raise ValueError("scaled damping must be non-negative")
        if not self.n0 > 0:
            raise ValueError("photons per cell must be positive")


def thermal_occupation(lambda_c: float, T: float) -> float:
    """Bose-Einstein occupation of the reservoir at the carrier frequency.

    N_th = 1 / (exp(hbar * omega_c / (k_B T)) - 1) with omega_c = 2 pi c / lambda_c.
    The T = 0 limit returns exactly 0.
    """
    if not lambda_c > 0:
        raise ValueError("wavelength must be positive")
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0.0:
        return 0.0
    x = HBAR * 2.0 * math.pi * C_LIGHT / (lambda_c * K_BOLTZMANN * T)
    if x > 700.0:  # exp would overflow; occupation is numerically zero
        return 0.0
    return 1.0 / math.expm1(x)


def derive_scales(inputs: PhysicalInputs, grid: GridSpec, *,
                  s: float = 0.0, n_th: float | None = None) -> ScaledParams:
    """Reduce laboratory inputs to the dimensionless parameter set.

    k2 = 2 pi c D / omega_c^2 (magnitude), x_d = t0^2 / |k2|,
    gamma_t = 0.05 ln(10) * Gamma[dB/km] * x_d[km], n0 = nbar * dx.
    ``n_th`` overrides the occupation computed from (lambda_c, T); headline
    configurations pin it directly.
    """
    d_si = inputs.D * 1e-6  # ps nm^-1 km^-1  ->  s m^-2
    omega_c = 2.0 * math.pi * C_LIGHT / inputs.lambda_c
    k2 = 2.0 * math.pi * C_LIGHT * abs(d_si) / omega_c ** 2  # s^2 / m
    x_d = inputs.t0 ** 2 / k2
    gamma_t = 0.05 * math.log(10.0) * inputs.Gamma * (x_d / 1000.0)
    t_d = x_d / C_LIGHT
    occupation = thermal_occupation(inputs.lambda_c, inputs.T) if n_th is None else n_th
    return ScaledParams(
        gamma_t=gamma_t,
        disp_sign=inputs.sign_omega2,
        chi_sign=inputs.sign_chi,
        n0=inputs.nbar * grid.dx,
        nbar=inputs.nbar,
        n_th=occupation,
        delta_omega_t=inputs.delta_omega * t_d,
        s=s,
        t_d=t_d,
        x_d=x_d,
    )


def rhs_coefficients(scaled: ScaledParams, grid: GridSpec) -> RHSCoefficients:
    """Couplings of the cumulant equations in dispersion-time units.

    d2 = sign(omega2) / (2 dx^2) and chi_t = sign(chi) / n0, so that
    chi_t * n0 reproduces the Kerr sign identically.
    """
    return RHSCoefficients(
        d2=scaled.disp_sign / (2.0 * grid.dx ** 2),
        chi_t=scaled.chi_sign / scaled.n0,
        gamma_t=scaled.gamma_t,
        delta_omega_t=scaled.delta_omega_t,
        n_th=scaled.n_th,
        s=scaled.s,
    )


def gaussian_validity_ratio(scaled: ScaledParams) -> float:
    """gamma_t * nbar^(1/4): >= 1 means damping is strong enough for the
    second-order closure to hold at all times; below 1 it is trustworthy only
    up to scaled times of order nbar^(1/4)."""
    return scaled.gamma_t * scaled.nbar ** 0.25
