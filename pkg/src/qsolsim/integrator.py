"""Adaptive embedded Runge-Kutta integration for flat ODE systems.

Works on 1-D real or complex state vectors.  Step acceptance uses the mixed
absolute/relative error norm

    scale_i = atol + rtol * max(|y_i|, |y_new_i|),
    norm    = rms(err_i / scale_i),

with the damped two-estimate variant when the tableau carries a secondary
low-order weight vector.  The step-size controller is the standard
integral controller with safety factor and growth clamps; after a rejection
the step is never allowed to grow.  Integration is deterministic: identical
inputs produce bit-identical trajectories.

The integrator is non-stiff by design; the simulator's operating envelope
(damping below ~0.15 per unit time, stencil eigenvalues bounded by the cell
width) keeps the cumulant system well inside the stability region of the
default order-8 pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tableaus import DORMAND_PRINCE_853, Tableau

__all__ = [
    "StepControl",
    "StepResult",
    "StepStats",
    "IntegrationResult",
    "IntegrationError",
    "StepSizeUnderflow",
    "NonFiniteStateError",
    "step",
    "integrate",
    "integrate_fixed",
]


class IntegrationError(RuntimeError):
    """Base class for integration failures; carries the last good time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t = {t!r})")
        self.t = t


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class StepControl:
    """Tolerances and limits of the adaptive step-size controller."""

    atol: float = 1e-9
    rtol: float = 1e-9
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 10.0
    h_min: float = 0.0          # 0: floor at ~16 ulp of the current time
    h_max: float = math.inf
    max_rejects: int = 50
    first_step: float | None = None

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.safety < 1):
            raise ValueError("safety factor must lie in (0, 1)")
        if self.h_min < 0 or self.h_max <= 0:
            raise ValueError("step bounds must be non-negative / positive")


@dataclass
class StepStats:
    n_rhs: int = 0
    n_accepted: int = 0
    n_rejected: int = 0
    h_smallest: float = math.inf
    h_largest: float = 0.0

    def record(self, h: float, accepted: bool):
        if accepted:
            self.n_accepted += 1
            self.h_smallest = min(self.h_smallest, h)
            self.h_largest = max(self.h_largest, h)
        else:
            self.n_rejected += 1

    def as_dict(self) -> dict:
        return {
            "rhs_evaluations": self.n_rhs,
            "accepted_steps": self.n_accepted,
            "rejected_steps": self.n_rejected,
            "smallest_step": None if math.isinf(self.h_smallest) else self.h_smallest,
            "largest_step": self.h_largest or None,
        }


@dataclass(frozen=True)
class StepResult:
    t_new: float
    y_new: np.ndarray
    f_new: np.ndarray | None
    error_norm: float
    accepted: bool
    h_used: float
    h_next: float


def _rms(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.real(np.vdot(x, x)) / x.size))


def _stages(fun, t, y, f0, h, tab: Tableau):
    """Evaluate all stage derivatives; returns (y_new, f_new, K)."""
    ns = tab.n_stages
    k = np.empty((ns + 1, y.size), dtype=y.dtype)
    k[0] = f0
    for i in range(1, ns):
        dy = h * (k[:i].T @ tab.a[i, :i])
        k[i] = fun(t + tab.c[i] * h, y + dy)
    y_new = y + h * (k[:ns].T @ tab.b)
    f_new = fun(t + h, y_new)
    k[ns] = f_new
    return y_new, f_new, k


def _error_norm(k, h, scale, tab: Tableau) -> float:
    err = (k.T @ tab.error_weights) / scale
    if tab.error_weights_low is None:
        return abs(h) * _rms(err)
    err_low = (k.T @ tab.error_weights_low) / scale
    e2 = float(np.real(np.vdot(err, err)))
    e2_low = float(np.real(np.vdot(err_low, err_low)))
    if e2 == 0.0 and e2_low == 0.0:
        return 0.0
    return abs(h) * e2 / math.sqrt((e2 + 0.01 * e2_low) * err.size)


def step(fun, t: float, y: np.ndarray, h: float, tableau: Tableau,
         control: StepControl, f: np.ndarray | None = None,
         rejected_before: bool = False, stats: StepStats | None = None) -> StepResult:
    """Attempt a single step of size h; propose the next step size.

    Never returns an accepted state whose error estimate exceeds tolerance:
    a failed attempt comes back with ``accepted=False`` and a reduced
    ``h_next`` for the caller to retry.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    if f is None:
        f = fun(t, y)
        if stats is not None:
            stats.n_rhs += 1
    y_new, f_new, k = _stages(fun, t, y, f, h, tableau)
    if stats is not None:
        stats.n_rhs += tableau.n_stages
    scale = control.atol + control.rtol * np.maximum(np.abs(y), np.abs(y_new))
    err = _error_norm(k, h, scale, tableau)
    exponent = -1.0 / (tableau.error_order + 1)

    if math.isfinite(err) and err < 1.0:
        if err == 0.0:
            factor = control.max_factor
        else:
            factor = min(control.max_factor, control.safety * err ** exponent)
        if rejected_before:
            factor = min(1.0, factor)
        result = StepResult(t + h, y_new, f_new, err, True, h, h * factor)
    else:
        if math.isfinite(err):
            factor = max(control.min_factor, control.safety * err ** exponent)
        else:  # overflow in a trial stage: back off hard
            factor = control.min_factor
        result = StepResult(t, y, None, err, False, h, h * factor)
    if stats is not None:
        stats.record(h, result.accepted)
    return result


def _initial_step(fun, t0, y0, f0, t_end, tab, control, stats) -> float:
    """Hairer-style starting step from the local derivative magnitudes."""
    span = t_end - t0
    scale = control.atol + control.rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span, control.h_max)
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    stats.n_rhs += 1
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (tab.error_order + 1))
    return min(100 * h0, h1, span, control.h_max)


@dataclass
class IntegrationResult:
    t: float
    y: np.ndarray
    output_times: np.ndarray
    outputs: list
    stats: StepStats = field(default_factory=StepStats)


def integrate(fun, y0: np.ndarray, t0: float, t_end: float,
              tableau: Tableau = DORMAND_PRINCE_853,
              control: StepControl = StepControl(),
              output_times=(), observer=None,
              record_outputs: bool = True) -> IntegrationResult:
    """Advance y' = fun(t, y) from t0 to exactly t_end.

    ``output_times`` are hit exactly by clipping the step; at each one the
    ``observer`` callback (if any) receives (t, y) and the raw vector is
    recorded when ``record_outputs`` is set.  The step size resumes its
    adaptive suggestion after a clipped step.
    """
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    y = np.array(y0, dtype=None, copy=True)
    if y.ndim != 1:
        raise ValueError("state must be a flat vector")
    stats = StepStats()
    out_times = sorted(float(t) for t in output_times)
    for t in out_times:
        if t < t0 - 1e-15 or t > t_end + 1e-15:
            raise ValueError(f"output time {t} outside [{t0}, {t_end}]")
    result = IntegrationResult(t0, y, np.array(out_times), [], stats)

    t = t0
    pending = list(out_times)

    def emit(t_now, y_now):
        if observer is not None:
            observer(t_now, y_now)
        if record_outputs:
            result.outputs.append(np.array(y_now, copy=True))

    while pending and pending[0] <= t0:
        emit(t0, y)
        pending.pop(0)
    if t_end == t0:
        result.t, result.y = t, y
        return result

    f = fun(t, y)
    stats.n_rhs += 1
    if control.first_step is not None:
        h = float(control.first_step)
    else:
        with np.errstate(all="ignore"):
            h = _initial_step(fun, t, y, f, t_end, tableau, control, stats)
    if not math.isfinite(h) or h <= 0:  # pathological scales; let control sort it out
        h = min(t_end - t0, 1e-6)

    rejected = False
    rejects_in_row = 0
    while t < t_end:
        h_floor = control.h_min if control.h_min > 0 else 16.0 * abs(math.ulp(t))
        if h < h_floor:
            raise StepSizeUnderflow(
                f"step size {h:.3e} fell below the floor {h_floor:.3e}", t)
        stop = pending[0] if pending else t_end
        clipped = t + h >= stop
        h_try = stop - t if clipped else h
        res = step(fun, t, y, h_try, tableau, control, f=f,
                   rejected_before=rejected, stats=stats)
        if res.accepted:
            t = stop if clipped else res.t_new
            y = res.y_new
            f = res.f_new
            if not np.all(np.isfinite(y)):
                raise NonFiniteStateError("state became non-finite", t)
            # resume the adaptive suggestion rather than the clipped size
            h = res.h_next if not clipped else max(h, res.h_next)
            rejected = False
            rejects_in_row = 0
            while pending and t >= pending[0]:
                emit(t, y)
                pending.pop(0)
        else:
            h = res.h_next
            rejected = True
            rejects_in_row += 1
            if rejects_in_row > control.max_rejects:
                raise IntegrationError(
                    f"more than {control.max_rejects} consecutive step rejections", t)

    result.t, result.y = t, y
    return result


def integrate_fixed(fun, y0: np.ndarray, t0: float, t_end: float, n_steps: int,
                    tableau: Tableau = DORMAND_PRINCE_853) -> np.ndarray:
    """Fixed-step solve (no error control); used for convergence studies."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    y = np.array(y0, copy=True)
    h = (t_end - t0) / n_steps
    t = t0
    f = fun(t, y)
    for _ in range(n_steps):
        y, f, _ = _stages(fun, t, y, f, h, tableau)
        t += h
    return y
