"""Gaussian cumulant state of the discretized pulse field.

The quantum state of the pulse is represented by the first- and second-order
cumulants of an s-parametrized phase-space distribution over the quadrature
variables (u_j, v_j) of every grid cell:

* ``cu``, ``cv``          -- mean quadratures, length-m vectors,
* ``cuu``, ``cvv``        -- symmetric m x m covariance blocks <<u_j u_k>>, <<v_j v_k>>,
* ``cuv``                 -- m x m cross block <<u_j v_k>> (row = u index, column = v index).

The v-u cross block is never stored; every consumer uses ``cuv.T`` instead.
Only the equal-variable second-order cumulants depend on the ordering
parameter s: changing s shifts the diagonals of ``cuu`` and ``cvv`` by
-(s_new - s_old)/4 and leaves everything else untouched (``reorder_s``).

Amplitudes are kept in per-cell photon units (mean fields are O(sqrt(n0)),
second-order blocks O(1)), while time and space are dimensionless (dispersion
time and pulse width units).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

_BOUNDARIES = ("absorbing", "periodic")


@dataclass(frozen=True)
class GridSpec:
    """Uniform spatial grid in pulse-width units.

    ``boundary`` selects how stencils treat cells outside the grid:
    "absorbing" reads them as zero (Dirichlet), "periodic" wraps around.
    Production runs use m >= 3; single- and two-cell grids are allowed so the
    brute-force density-matrix oracle can reuse the same state types.
    """

    m: int
    dx: float
    boundary: str = "absorbing"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"grid needs at least one cell, got m={self.m}")
        if not self.dx > 0:
            raise ValueError(f"cell width must be positive, got dx={self.dx}")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}, got {self.boundary!r}")

    def positions(self) -> np.ndarray:
        """Cell centers x_j = dx * (j - floor(m/2))."""
        return self.dx * (np.arange(self.m) - self.m // 2)

    @property
    def length(self) -> float:
        return self.m * self.dx


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class CumulantState:
    """First- and second-order cumulants at ordering s and scaled time t."""

    grid: GridSpec
    s: float
    t: float
    cu: np.ndarray
    cv: np.ndarray
    cuu: np.ndarray
    cuv: np.ndarray
    cvv: np.ndarray

    def __post_init__(self):
        m = self.grid.m
        if not (-1.0 <= self.s <= 1.0):
            raise ValueError(f"ordering parameter must lie in [-1, 1], got s={self.s}")
        for name in ("cu", "cv"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (m,):
                raise ValueError(f"{name} must have shape ({m},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        for name in ("cuu", "cuv", "cvv"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (m, m):
                raise ValueError(f"{name} must have shape ({m}, {m}), got {arr.shape}")
            object.__setattr__(self, name, arr)

    # -- flattened layout used by the ODE integrator ------------------------

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.cu, self.cv, self.cuu.ravel(), self.cuv.ravel(), self.cvv.ravel(),
        ])

    def with_flat(self, vec: np.ndarray, t: float) -> "CumulantState":
        """Rebuild a state of this shape from the integrator's flat vector."""
        m = self.grid.m
        cu = vec[:m]
        cv = vec[m:2 * m]
        cuu = vec[2 * m:2 * m + m * m].reshape(m, m)
        cuv = vec[2 * m + m * m:2 * m + 2 * m * m].reshape(m, m)
        cvv = vec[2 * m + 2 * m * m:].reshape(m, m)
        return CumulantState(self.grid, self.s, t, cu, cv, cuu, cuv, cvv)

    def copy(self, t: float | None = None) -> "CumulantState":
        return CumulantState(
            self.grid, self.s, self.t if t is None else t,
            self.cu.copy(), self.cv.copy(),
            self.cuu.copy(), self.cuv.copy(), self.cvv.copy(),
        )

    @property
    def mean_field(self) -> np.ndarray:
        """Complex mean amplitude per cell, cu + i cv."""
        return self.cu + 1j * self.cv


@dataclass(frozen=True)
class CumulantDerivative:
    """Time derivative of every cumulant block (same shapes as the state)."""

    cu: np.ndarray
    cv: np.ndarray
    cuu: np.ndarray
    cuv: np.ndarray
    cvv: np.ndarray

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.cu, self.cv, self.cuu.ravel(), self.cuv.ravel(), self.cvv.ravel(),
        ])

    def max_abs(self) -> float:
        return max(
            np.max(np.abs(self.cu)), np.max(np.abs(self.cv)),
            np.max(np.abs(self.cuu)), np.max(np.abs(self.cuv)), np.max(np.abs(self.cvv)),
        )


def thermal_state(grid: GridSpec, n_th: float, s: float) -> CumulantState:
    """Uncorrelated thermal fluctuations: the steady state of the damped field.

    Zero means, cuu = cvv = [n_th + (1-s)/2] / 2 on the diagonal, cuv = 0.
    """
    if n_th < 0:
        raise ValueError(f"reservoir occupation must be non-negative, got {n_th}")
    m = grid.m
    diag = 0.5 * (n_th + 0.5 * (1.0 - s))
    return CumulantState(
        grid, s, 0.0,
        np.zeros(m), np.zeros(m),
        diag * np.eye(m), np.zeros((m, m)), diag * np.eye(m),
    )


def fundamental_soliton(grid: GridSpec, n0: float, n_th: float, s: float) -> CumulantState:
    """Classical fundamental soliton mean field on top of thermal noise.

    cu_j = sqrt(n0) * sech(x_j), cv = 0; second-order blocks as thermal_state.
    """
    if not n0 > 0:
        raise ValueError(f"photons per cell scale must be positive, got n0={n0}")
    base = thermal_state(grid, n_th, s)
    cu = math.sqrt(n0) / np.cosh(grid.positions())
    return replace(base, cu=cu)


def reorder_s(state: CumulantState, s_new: float) -> CumulantState:
    """Re-express the state at a different ordering parameter.

    Only the diagonals of cuu and cvv move: they pick up -(s_new - s)/4.
    """
    if not (-1.0 <= s_new <= 1.0):
        raise ValueError(f"ordering parameter must lie in [-1, 1], got {s_new}")
    shift = 0.25 * (s_new - state.s)
    eye = np.eye(state.grid.m)
    return CumulantState(
        state.grid, s_new, state.t,
        state.cu.copy(), state.cv.copy(),
        state.cuu - shift * eye, state.cuv.copy(), state.cvv - shift * eye,
    )


@dataclass(frozen=True)
class ValidationReport:
    """Report-only health check of a cumulant state."""

    finite: bool
    cuu_asymmetry: float
    cvv_asymmetry: float
    min_major_axis: float        # min over cells of B + s/4
    min_minor_axis: float        # min over cells of b + s/4
    min_uncertainty_product: float   # min over cells of sqrt((B+s/4)(b+s/4))
    heisenberg_margin: float     # min_uncertainty_product - 1/4
    issues: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.issues


def validate(state: CumulantState, atol: float = 1e-12, heisenberg_tol: float = 1e-10) -> ValidationReport:
    """Check symmetry, finiteness and the per-cell uncertainty bound.

    The bound sqrt((B + s/4)(b + s/4)) >= 1/4 holds for every physical state,
    where B, b are the principal variances of the local noise ellipse; the
    combinations B + s/4, b + s/4 are ordering-independent.
    """
    issues = []
    finite = all(
        np.all(np.isfinite(arr))
        for arr in (state.cu, state.cv, state.cuu, state.cuv, state.cvv)
    )
    if not finite:
        issues.append("non-finite entries")

    def rel_asym(mat):
        scale = max(np.max(np.abs(mat)), 1.0)
        return float(np.max(np.abs(mat - mat.T)) / scale)

    asym_uu = rel_asym(state.cuu)
    asym_vv = rel_asym(state.cvv)
    if asym_uu > atol:
        issues.append(f"cuu asymmetry {asym_uu:.3e}")
    if asym_vv > atol:
        issues.append(f"cvv asymmetry {asym_vv:.3e}")

    duu = np.diag(state.cuu)
    dvv = np.diag(state.cvv)
    duv = np.diag(state.cuv)
    half_tr = 0.5 * (duu + dvv)
    radius = 0.5 * np.sqrt((duu - dvv) ** 2 + 4.0 * duv ** 2)
    big = half_tr + radius + 0.25 * state.s
    small = half_tr - radius + 0.25 * state.s
    min_big = float(np.min(big)) if finite else math.nan
    min_small = float(np.min(small)) if finite else math.nan
    if finite and (min_big <= 0 or min_small <= 0):
        issues.append("non-positive noise ellipse axis (unphysical state)")
        product = -math.inf
    elif finite:
        product = float(np.min(np.sqrt(big * small)))
        if product < 0.25 - heisenberg_tol:
            issues.append(f"uncertainty product {product:.6f} below 1/4")
    else:
        product = math.nan

    return ValidationReport(
        finite=finite,
        cuu_asymmetry=asym_uu,
        cvv_asymmetry=asym_vv,
        min_major_axis=min_big,
        min_minor_axis=min_small,
        min_uncertainty_product=product,
        heisenberg_margin=product - 0.25,
        issues=tuple(issues),
    )
