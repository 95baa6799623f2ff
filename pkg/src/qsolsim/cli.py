"""Reproducible scenario execution: config parsing, run orchestration, output.

A run is described by a flat JSON config (see README for the key reference),
executed with ``qsolsim run config.json`` or ``qsolsim run --scenario NAME``.
Artifacts go to the output directory:

* ``manifest.json``      -- resolved parameters, integrator statistics,
                            package version, config echo, output listing;
* ``state_t<label>.json``-- full reloadable cumulant state per output time;
* ``<obs>_t<label>.csv`` -- one CSV per requested observable per output time
                            (intensity, ellipses, nrparams, spectrum, eta).

Identical configs produce byte-identical outputs; there is no randomness
anywhere in the pipeline.  Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import RHSCoefficients, propagate
from .integrator import IntegrationError, StepControl
from .observables import (
    LOPulse,
    ellipse_arrays,
    frequency_grid,
    intensity,
    min_delta_omega,
    nr_arrays,
    photon_correlation,
    squeezing_spectrum,
)
from .params import (
    PhysicalInputs,
    ScaledParams,
    derive_scales,
    gaussian_validity_ratio,
    rhs_coefficients,
)
from .scenarios import SCENARIOS, format_scenario_table, scenario_config
from .state import CumulantState, GridSpec, fundamental_soliton, reorder_s, thermal_state, validate
from .tableaus import TABLEAUS

OBSERVABLES = ("intensity", "ellipses", "nrparams", "spectrum", "eta")

_TOP_KEYS = {
    "physical", "scaled", "n_th", "s", "m", "dx", "boundary", "initial",
    "t_end", "output_times", "observables", "spectrum_phase",
    "omega_min", "omega_max", "omega_points", "eta_window",
    "lo_real", "lo_imag", "method", "atol", "rtol", "s_pair", "out_dir",
}

_PHYSICAL_KEYS = {"t0", "D", "Gamma", "lambda_c", "T", "nbar",
                  "sign_chi", "sign_omega2", "delta_omega"}
_SCALED_KEYS = {"gamma_t", "nbar", "delta_omega_t", "sign_chi", "sign_omega2"}


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending key."""


@dataclass
class RunConfig:
    """Validated, resolved run description."""

    raw: dict
    grid: GridSpec
    scaled: ScaledParams
    coeffs: RHSCoefficients
    s: float
    initial: str
    t_end: float
    output_times: list[float]
    observables: list[str]
    spectrum_phase: object
    omega: np.ndarray
    eta_window: float
    lo: LOPulse
    method: str
    control: StepControl
    s_pair: list[float] | None
    out_dir: str | None = None


def _get(cfg: dict, key: str, default, types, what: str):
    if key not in cfg:
        return default
    val = cfg[key]
    if not isinstance(val, types):
        raise ConfigError(f"key '{key}': expected {what}, got {val!r}")
    return val


def resolve_config(cfg: dict) -> RunConfig:
    """Validate a raw config dict and resolve every derived quantity."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    try:
        m = int(_get(cfg, "m", 200, (int,), "an integer"))
        dx = float(_get(cfg, "dx", 0.1, (int, float), "a number"))
        boundary = _get(cfg, "boundary", "absorbing", (str,), "a string")
        grid = GridSpec(m=m, dx=dx, boundary=boundary)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"grid block: {exc}") from exc

    s = float(_get(cfg, "s", 0.0, (int, float), "a number"))
    if not -1.0 <= s <= 1.0:
        raise ConfigError(f"key 's': must lie in [-1, 1], got {s}")

    has_phys = "physical" in cfg
    has_scaled = "scaled" in cfg
    if has_phys == has_scaled:
        raise ConfigError("exactly one of 'physical' or 'scaled' must be present")
    n_th_override = cfg.get("n_th")
    if n_th_override is not None and (not isinstance(n_th_override, (int, float))
                                      or n_th_override < 0):
        raise ConfigError(f"key 'n_th': must be a non-negative number, got {n_th_override!r}")

    if has_phys:
        block = cfg["physical"]
        if not isinstance(block, dict):
            raise ConfigError("key 'physical': must be an object")
        unknown = set(block) - _PHYSICAL_KEYS
        if unknown:
            raise ConfigError(f"physical block: unknown keys {sorted(unknown)}")
        missing = {"t0", "D", "Gamma"} - set(block)
        if missing:
            raise ConfigError(f"physical block: missing keys {sorted(missing)}")
        try:
            inputs = PhysicalInputs(**block)
            scaled = derive_scales(inputs, grid, s=s, n_th=n_th_override)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"physical block: {exc}") from exc
    else:
        block = cfg["scaled"]
        if not isinstance(block, dict):
            raise ConfigError("key 'scaled': must be an object")
        unknown = set(block) - _SCALED_KEYS
        if unknown:
            raise ConfigError(f"scaled block: unknown keys {sorted(unknown)}")
        missing = {"gamma_t", "nbar"} - set(block)
        if missing:
            raise ConfigError(f"scaled block: missing keys {sorted(missing)}")
        if n_th_override is None:
            raise ConfigError("scaled mode requires an explicit 'n_th'")
        try:
            scaled = ScaledParams(
                gamma_t=float(block["gamma_t"]),
                disp_sign=int(block.get("sign_omega2", -1)),
                chi_sign=int(block.get("sign_chi", 1)),
                n0=float(block["nbar"]) * grid.dx,
                nbar=float(block["nbar"]),
                n_th=float(n_th_override),
                delta_omega_t=float(block.get("delta_omega_t", 0.0)),
                s=s,
                t_d=math.nan,
                x_d=math.nan,
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"scaled block: {exc}") from exc
    coeffs = rhs_coefficients(scaled, grid)

    initial = _get(cfg, "initial", "soliton", (str,), "a string")
    if initial not in ("soliton", "thermal"):
        raise ConfigError(f"key 'initial': must be 'soliton' or 'thermal', got {initial!r}")

    t_end = float(_get(cfg, "t_end", 5.0, (int, float), "a number"))
    if t_end < 0:
        raise ConfigError(f"key 't_end': must be non-negative, got {t_end}")
    raw_times = cfg.get("output_times", [t_end])
    if (not isinstance(raw_times, list) or not raw_times
            or not all(isinstance(t, (int, float)) for t in raw_times)):
        raise ConfigError("key 'output_times': must be a non-empty list of numbers")
    times = [float(t) for t in raw_times]
    if times != sorted(times):
        raise ConfigError("key 'output_times': must be sorted ascending")
    if times[-1] > t_end:
        raise ConfigError(f"key 'output_times': last time {times[-1]} exceeds t_end {t_end}")

    obs = _get(cfg, "observables", ["intensity"], (list,), "a list")
    for name in obs:
        if name not in OBSERVABLES:
            raise ConfigError(f"key 'observables': unknown observable {name!r}; "
                              f"choose from {OBSERVABLES}")

    phase = cfg.get("spectrum_phase", "optimal")
    if not (phase == "optimal" or isinstance(phase, (int, float))):
        raise ConfigError("key 'spectrum_phase': must be 'optimal' or a number")

    if any(k in cfg for k in ("omega_min", "omega_max", "omega_points")):
        try:
            omin = float(cfg["omega_min"])
            omax = float(cfg["omega_max"])
            onum = int(cfg["omega_points"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(
                "omega grid: omega_min, omega_max and omega_points must be given together") from exc
        if not (omax > omin and onum >= 2):
            raise ConfigError("omega grid: need omega_max > omega_min and omega_points >= 2")
        omega = np.linspace(omin, omax, onum)
    else:
        omega = frequency_grid(grid)

    eta_window = cfg.get("eta_window")
    if eta_window is None:
        eta_window = min_delta_omega(grid)
    elif not isinstance(eta_window, (int, float)) or eta_window < min_delta_omega(grid) * (1 - 1e-9):
        raise ConfigError(
            f"key 'eta_window': must be a number >= the minimal resolvable "
            f"{min_delta_omega(grid):g} (w0 units)")

    if ("lo_real" in cfg) or ("lo_imag" in cfg):
        lo_re = np.asarray(cfg.get("lo_real", [0.0] * grid.m), dtype=float)
        lo_im = np.asarray(cfg.get("lo_imag", [0.0] * grid.m), dtype=float)
        if lo_re.shape != (grid.m,) or lo_im.shape != (grid.m,):
            raise ConfigError("lo_real / lo_imag must have one entry per cell")
        try:
            lo = LOPulse(lo_re + 1j * lo_im)
        except ValueError as exc:
            raise ConfigError(f"local oscillator: {exc}") from exc
    else:
        lo = LOPulse.soliton(grid, scaled.n0)

    method = _get(cfg, "method", "dp853", (str,), "a string")
    if method not in TABLEAUS:
        raise ConfigError(f"key 'method': must be one of {sorted(TABLEAUS)}, got {method!r}")
    atol = float(_get(cfg, "atol", 1e-9, (int, float), "a number"))
    rtol = float(_get(cfg, "rtol", 1e-9, (int, float), "a number"))
    try:
        control = StepControl(atol=atol, rtol=rtol)
    except ValueError as exc:
        raise ConfigError(f"integrator tolerances: {exc}") from exc

    s_pair = cfg.get("s_pair")
    if s_pair is not None:
        if (not isinstance(s_pair, list) or len(s_pair) != 2
                or not all(isinstance(v, (int, float)) and -1 <= v <= 1 for v in s_pair)):
            raise ConfigError("key 's_pair': must be a pair of ordering parameters in [-1, 1]")
        s_pair = [float(v) for v in s_pair]
        if s_pair[0] != s:
            raise ConfigError("key 's_pair': first entry must equal 's'")

    out_dir = cfg.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("key 'out_dir': must be a string path")

    return RunConfig(
        raw=cfg, grid=grid, scaled=scaled, coeffs=coeffs, s=s, initial=initial,
        t_end=t_end, output_times=times, observables=list(obs),
        spectrum_phase=phase, omega=omega, eta_window=float(eta_window),
        lo=lo, method=method, control=control, s_pair=s_pair, out_dir=out_dir,
    )


# -- formatting and emission ---------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _time_label(t: float) -> str:
    return f"{t:g}"


def emit_state(state: CumulantState, path) -> None:
    """Write the full state as JSON (exact round trip, byte-stable)."""
    doc = {
        "format": "qsolsim-state-v1",
        "grid": {"m": state.grid.m, "dx": state.grid.dx, "boundary": state.grid.boundary},
        "s": state.s,
        "t": state.t,
        "cu": state.cu.tolist(),
        "cv": state.cv.tolist(),
        "cuu": state.cuu.tolist(),
        "cuv": state.cuv.tolist(),
        "cvv": state.cvv.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_state(path) -> CumulantState:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "qsolsim-state-v1":
        raise ValueError(f"{path}: not a state snapshot")
    grid = GridSpec(**doc["grid"])
    return CumulantState(
        grid, float(doc["s"]), float(doc["t"]),
        np.array(doc["cu"]), np.array(doc["cv"]),
        np.array(doc["cuu"]), np.array(doc["cuv"]), np.array(doc["cvv"]),
    )


def _write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    is_int = [np.issubdtype(np.asarray(col).dtype, np.integer) for col in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(
                str(int(col[i])) if flag else _fmt(col[i])
                for col, flag in zip(columns, is_int)) + "\n")


def emit_intensity(state: CumulantState, path) -> None:
    x = state.grid.positions()
    _write_csv(path, ["j", "x", "intensity"],
               [np.arange(state.grid.m), x, intensity(state)])


def emit_ellipses(state: CumulantState, path) -> None:
    x = state.grid.positions()
    big, small, phi = ellipse_arrays(state)
    _write_csv(path, ["j", "x", "B", "b", "phi"],
               [np.arange(state.grid.m), x, big, small, phi])


def emit_nrparams(state: CumulantState, path) -> None:
    x = state.grid.positions()
    n, r, theta, margin = nr_arrays(state)
    _write_csv(path, ["j", "x", "n", "r", "theta", "margin"],
               [np.arange(state.grid.m), x, n, r, theta, margin])


def emit_spectrum(result, path) -> None:
    _write_csv(path, ["omega", "s", "s_min", "phi_opt"],
               [result.omega, result.s, result.s_min, result.phi_opt])


def emit_eta(result, path) -> None:
    """Long-form CSV: one row per frequency pair."""
    k = len(result.omega)
    o1 = np.repeat(result.omega, k)
    o2 = np.tile(result.omega, k)
    _write_csv(path, ["omega1", "omega2", "eta"], [o1, o2, result.eta.ravel()])


# -- run orchestration -----------------------------------------------------------

def _initial_state(rc: RunConfig, s: float) -> CumulantState:
    if rc.initial == "soliton":
        return fundamental_soliton(rc.grid, rc.scaled.n0, rc.scaled.n_th, s)
    return thermal_state(rc.grid, rc.scaled.n_th, s)


def _run_trajectory(rc: RunConfig, s: float):
    state0 = _initial_state(rc, s)
    return propagate(state0, rc.coeffs, rc.t_end, output_times=rc.output_times,
                     tableau=TABLEAUS[rc.method], control=rc.control)


def _observable_results(rc: RunConfig, state: CumulantState) -> dict:
    out = {}
    if "spectrum" in rc.observables:
        out["spectrum"] = squeezing_spectrum(state, rc.lo, rc.omega, rc.spectrum_phase)
    if "eta" in rc.observables:
        out["eta"] = photon_correlation(state, rc.omega, rc.eta_window)
    return out


def _rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / scale


def _s_pair_report(rc: RunConfig) -> dict:
    """Run the reordered twin and compare everything that must coincide."""
    s2 = rc.s_pair[1]
    states_a, _ = _run_trajectory(rc, rc.s)
    states_b, _ = _run_trajectory(rc, s2)
    entries = []
    for st_a, st_b in zip(states_a, states_b):
        back = reorder_s(st_b, rc.s)
        entry = {
            "t": st_a.t,
            "block_rel_dev": max(
                _rel_diff(st_a.cu, back.cu), _rel_diff(st_a.cv, back.cv),
                _rel_diff(st_a.cuu, back.cuu), _rel_diff(st_a.cuv, back.cuv),
                _rel_diff(st_a.cvv, back.cvv),
            ),
            "intensity_rel_dev": _rel_diff(intensity(st_a), intensity(st_b)),
        }
        res_a = _observable_results(rc, st_a)
        res_b = _observable_results(rc, st_b)
        if "spectrum" in res_a:
            entry["spectrum_rel_dev"] = _rel_diff(res_a["spectrum"].s, res_b["spectrum"].s)
        if "eta" in res_a:
            ea, eb = res_a["eta"].eta, res_b["eta"].eta
            mask = np.isfinite(ea) & np.isfinite(eb)
            entry["eta_rel_dev"] = _rel_diff(ea[mask], eb[mask])
        entries.append(entry)
    return {"s": rc.s, "s_partner": s2, "comparisons": entries}


def _sanitize(obj):
    """Replace non-finite floats for strict-JSON manifests."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def run(cfg: dict, out_dir) -> dict:
    """Execute a validated config; write artifacts; return the manifest."""
    rc = resolve_config(cfg)
    out = Path(out_dir if out_dir is not None else (rc.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)

    states, stats = _run_trajectory(rc, rc.s)

    outputs = []
    worst_heisenberg = math.inf
    for state in states:
        label = _time_label(state.t)
        report = validate(state)
        worst_heisenberg = min(worst_heisenberg, report.heisenberg_margin)
        path = out / f"state_t{label}.json"
        emit_state(state, path)
        outputs.append({"path": path.name, "kind": "state", "t": state.t})
        results = _observable_results(rc, state)
        for obs in rc.observables:
            path = out / f"{obs}_t{label}.csv"
            if obs == "intensity":
                emit_intensity(state, path)
            elif obs == "ellipses":
                emit_ellipses(state, path)
            elif obs == "nrparams":
                emit_nrparams(state, path)
            elif obs == "spectrum":
                emit_spectrum(results["spectrum"], path)
            elif obs == "eta":
                emit_eta(results["eta"], path)
            entry = {"path": path.name, "kind": obs, "t": state.t}
            if obs == "spectrum":
                entry["i0"] = results["spectrum"].i0
            if obs == "eta":
                entry["delta_omega"] = results["eta"].delta_omega
                entry["undefined_entries"] = results["eta"].n_undefined
            outputs.append(entry)

    manifest = {
        "package": "qsolsim",
        "version": __version__,
        "deterministic": True,
        "config": rc.raw,
        "grid": {"m": rc.grid.m, "dx": rc.grid.dx, "boundary": rc.grid.boundary},
        "scaled_params": {
            "gamma_t": rc.scaled.gamma_t,
            "disp_sign": rc.scaled.disp_sign,
            "chi_sign": rc.scaled.chi_sign,
            "n0": rc.scaled.n0,
            "nbar": rc.scaled.nbar,
            "n_th": rc.scaled.n_th,
            "delta_omega_t": rc.scaled.delta_omega_t,
            "s": rc.s,
            "t_d_seconds": rc.scaled.t_d,
            "x_d_meters": rc.scaled.x_d,
        },
        "coefficients": {
            "d2": rc.coeffs.d2,
            "chi_t": rc.coeffs.chi_t,
            "gamma_t": rc.coeffs.gamma_t,
            "delta_omega_t": rc.coeffs.delta_omega_t,
            "thermal_src": rc.coeffs.thermal_src(rc.s),
        },
        "closure_validity_ratio": gaussian_validity_ratio(rc.scaled),
        "integrator": {
            "method": rc.method,
            "atol": rc.control.atol,
            "rtol": rc.control.rtol,
            "stats": stats.as_dict(),
        },
        "min_heisenberg_margin": worst_heisenberg,
        "outputs": outputs,
    }
    if rc.s_pair is not None:
        report = _s_pair_report(rc)
        with open(out / "s_pair_report.json", "w") as fh:
            json.dump(_sanitize(report), fh, sort_keys=True, indent=2)
            fh.write("\n")
        manifest["s_pair_report"] = report

    with open(out / "manifest.json", "w") as fh:
        json.dump(_sanitize(manifest), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


# -- command line ------------------------------------------------------------------

def _apply_override(cfg: dict, spec: str) -> None:
    if "=" not in spec:
        raise ConfigError(f"override {spec!r}: expected key=value")
    key, _, raw_val = spec.partition("=")
    try:
        value = json.loads(raw_val)
    except json.JSONDecodeError:
        value = raw_val
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {spec!r}: {part} is not an object")
    node[parts[-1]] = value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsolsim",
        description="Damped quantum soliton noise simulator (Gaussian cumulant closure)",
    )
    parser.add_argument("--list-scenarios", action="store_true",
                        help="list canned scenario names and exit")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="execute a run configuration")
    runp.add_argument("config", nargs="?", help="path to a JSON config file")
    runp.add_argument("--scenario", help="name of a canned scenario instead of a file")
    runp.add_argument("--override", action="append", default=[],
                      metavar="KEY=VALUE", help="override a config entry (dots descend)")
    runp.add_argument("--out", help="output directory (default: config out_dir or '.')")
    runp.add_argument("--validate-only", action="store_true",
                      help="validate and resolve the config, write nothing")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.list_scenarios:
        print(format_scenario_table())
        return 0
    if args.command != "run":
        parser.print_help()
        return 2

    try:
        if args.scenario is not None:
            if args.config is not None:
                raise ConfigError("give either a config file or --scenario, not both")
            if args.scenario not in SCENARIOS:
                raise ConfigError(f"unknown scenario {args.scenario!r}")
            cfg = scenario_config(args.scenario)
        elif args.config is not None:
            try:
                with open(args.config) as fh:
                    cfg = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON (line {exc.lineno}): {exc.msg}") from exc
        else:
            raise ConfigError("run needs a config file or --scenario")
        for spec in args.override:
            _apply_override(cfg, spec)

        if args.validate_only:
            rc = resolve_config(cfg)
            print(f"config ok: m={rc.grid.m} dx={rc.grid.dx} boundary={rc.grid.boundary} "
                  f"s={rc.s} gamma_t={rc.coeffs.gamma_t:g} n0={rc.scaled.n0:g} "
                  f"t_end={rc.t_end:g} outputs={len(rc.output_times)}")
            return 0
        run(cfg, args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
