"""Canned run configurations for the standard damped-soliton studies.

Each preset is a complete run configuration; ``qsolsim run --scenario NAME``
executes it and ``--override key=value`` tweaks individual entries.  The set
covers the usual survey: intensity decay under increasing loss, local noise
ellipses, minimum-quadrature squeezing versus damping, squeezed-thermal
parameters, homodyne spectra and spectral photon-number correlations.
"""

from __future__ import annotations

import copy

__all__ = ["SCENARIOS", "scenario_config", "format_scenario_table"]

_BASE = {
    "scaled": {"gamma_t": 0.0, "nbar": 1e9, "sign_chi": 1, "sign_omega2": -1,
               "delta_omega_t": 0.0},
    "n_th": 1e-16,
    "s": 0.0,
    "m": 200,
    "dx": 0.1,
    "boundary": "absorbing",
    "initial": "soliton",
    "t_end": 5.0,
    "output_times": [0.0, 1.0, 2.5, 5.0],
    "observables": ["intensity"],
    "method": "dp853",
    "atol": 1e-9,
    "rtol": 1e-9,
}

# damping values of the two reference fibers (2 ps and 10 ps pulses) plus
# the lossless case and a mid-range value used in the correlation study
_GAMMA_WEAK = 5.8e-3
_GAMMA_STRONG = 1.4e-1
_GAMMA_MID = 5.0e-2


def _preset(description: str, **overrides) -> dict:
    cfg = copy.deepcopy(_BASE)
    scaled = overrides.pop("scaled_update", None)
    if scaled:
        cfg["scaled"].update(scaled)
    cfg.update(overrides)
    return {"description": description, "config": cfg}


def _dense(t_end: float, step: float = 0.25) -> list[float]:
    n = round(t_end / step)
    return [round(k * step, 10) for k in range(n + 1)]


SCENARIOS = {
    "intensity-lossless": _preset(
        "soliton intensity evolution, no damping",
    ),
    "intensity-weak-loss": _preset(
        "soliton intensity evolution, weak damping (2 ps pulse fiber)",
        scaled_update={"gamma_t": _GAMMA_WEAK},
    ),
    "intensity-strong-loss": _preset(
        "soliton intensity evolution, strong damping (10 ps pulse fiber)",
        scaled_update={"gamma_t": _GAMMA_STRONG},
    ),
    "ellipses-space": _preset(
        "local noise ellipses across the pulse at fixed times (s = 0.85)",
        s=0.85, observables=["intensity", "ellipses"],
        output_times=[0.5, 1.0, 2.0],
        t_end=2.0,
    ),
    "ellipses-time": _preset(
        "local noise ellipse evolution at all cells, dense sampling (s = 0.85)",
        s=0.85, observables=["ellipses"],
        output_times=_dense(5.0), t_end=5.0,
    ),
    "squeeze-center-lossless": _preset(
        "minimum quadrature noise at the pulse center, no damping",
        observables=["ellipses"], output_times=_dense(5.0, 0.1), t_end=5.0,
    ),
    "squeeze-center-mid-loss": _preset(
        "minimum quadrature noise at the pulse center, gamma_t = 0.05",
        scaled_update={"gamma_t": _GAMMA_MID},
        observables=["ellipses"], output_times=_dense(5.0, 0.1), t_end=5.0,
    ),
    "squeeze-center-strong-loss": _preset(
        "minimum quadrature noise at the pulse center, gamma_t = 0.1",
        scaled_update={"gamma_t": 0.1},
        observables=["ellipses"], output_times=_dense(5.0, 0.1), t_end=5.0,
    ),
    "noise-map-lossless": _preset(
        "minimum quadrature noise over space and time, no damping",
        observables=["ellipses"], output_times=_dense(5.0), t_end=5.0,
    ),
    "noise-map-mid-loss": _preset(
        "minimum quadrature noise over space and time, gamma_t = 0.05",
        scaled_update={"gamma_t": _GAMMA_MID},
        observables=["ellipses"], output_times=_dense(5.0), t_end=5.0,
    ),
    "squeezed-thermal-map-lossless": _preset(
        "squeezed-thermal n and r over space and time, no damping",
        observables=["nrparams"], output_times=_dense(5.0), t_end=5.0,
    ),
    "squeezed-thermal-map-mid-loss": _preset(
        "squeezed-thermal n and r over space and time, gamma_t = 0.05",
        scaled_update={"gamma_t": _GAMMA_MID},
        observables=["nrparams"], output_times=_dense(5.0), t_end=5.0,
    ),
    "spectrum-mid-lossless": _preset(
        "optimal-phase squeezing spectrum, dense time sampling, no damping",
        observables=["spectrum"], output_times=_dense(5.0, 0.25), t_end=5.0,
    ),
    "spectrum-mid-weak-loss": _preset(
        "optimal-phase squeezing spectrum, dense time sampling, weak damping",
        scaled_update={"gamma_t": _GAMMA_WEAK},
        observables=["spectrum"], output_times=_dense(5.0, 0.25), t_end=5.0,
    ),
    "spectrum-mid-strong-loss": _preset(
        "optimal-phase squeezing spectrum, dense time sampling, strong damping",
        scaled_update={"gamma_t": _GAMMA_STRONG},
        observables=["spectrum"], output_times=_dense(5.0, 0.25), t_end=5.0,
    ),
    "eta-lossless": _preset(
        "spectral photon-number correlations at t = 2.5 and 5, no damping",
        observables=["intensity", "eta"], output_times=[2.5, 5.0], t_end=5.0,
    ),
    "eta-mid-loss": _preset(
        "spectral photon-number correlations at t = 2.5 and 5, gamma_t = 0.05",
        scaled_update={"gamma_t": _GAMMA_MID},
        observables=["intensity", "eta"], output_times=[2.5, 5.0], t_end=5.0,
    ),
    "ordering-pair-check": _preset(
        "same run at s = 0 and s = 0.85 with the reordering comparison report",
        scaled_update={"gamma_t": _GAMMA_WEAK},
        s_pair=[0.0, 0.85], output_times=[1.0, 2.5],
        observables=["intensity", "spectrum"], t_end=2.5,
    ),
}


def scenario_config(name: str) -> dict:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; see --list-scenarios")
    return copy.deepcopy(SCENARIOS[name]["config"])


def format_scenario_table() -> str:
    width = max(len(k) for k in SCENARIOS)
    lines = [f"{name.ljust(width)}  {entry['description']}"
             for name, entry in sorted(SCENARIOS.items())]
    return "\n".join(lines)
