"""Command-line interface emitting plot-ready data for every pipeline stage.

Units at this boundary follow the lab notation: trap frequencies in MHz,
confinement offsets in kHz, fields in gauss, times in ms, loop areas in um^2.
Everything is converted to SI before touching the library.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
CSV output starts with a single ``#`` header line naming columns and units;
JSON output carries a ``schema_version`` field.
"""

import argparse
import json
import sys
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as const

from . import abfield, expsim, modes, quantum, rotor, thermo
from .crystal import TrapConfig, tunnelling_trap
from .errors import ConvergenceError, SingularConfigurationError

MHZ = 2 * np.pi * 1e6
KHZ = 2 * np.pi * 1e3


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one invocation, after config-file merging."""

    command: str
    params: dict

    def to_json(self, indent=2):
        return json.dumps(
            {"schema_version": 1, "command": self.command, "params": self.params},
            indent=indent,
        )


def _parse_range(text):
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except Exception as err:
        raise ValueError(f"range must look like LO:HI, got {text!r}") from err
    if hi < lo:
        raise ValueError(f"range must be increasing, got {text!r}")
    return lo, hi


def _write_output(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _progress(message):
    print(message, file=sys.stderr, flush=True)


def _trap_from(p):
    return TrapConfig(
        omega_x=p["omega_x_mhz"] * MHZ,
        omega_y=p["omega_y_mhz"] * MHZ,
        omega_z=p["omega_z_mhz"] * MHZ,
        ion_mass=p["ion_mass_amu"] * const.atomic_mass,
    )


def _model_from(p):
    return quantum.DynamicsModel(p0=p["p0"], nu=p["nu_hz"], T2=p["t2_ms"] * 1e-3,
                                 v=p["v_per_s"])


# ---------------------------------------------------------------------------
# subcommand implementations (each takes the merged parameter dict)

def cmd_modes(p):
    lo, hi = _parse_range(p["omega_x_range_mhz"])
    trap = _trap_from(p)
    _progress(f"sweeping omega_x over {lo}:{hi} MHz in {p['steps']} steps")
    sweep = modes.sweep_confinement(
        trap, (lo * MHZ, hi * MHZ), steps=p["steps"],
        adaptive=not p["no_adaptive"], jobs=p["jobs"],
    )
    _progress(f"sweep solved {len(sweep.points)} points")
    text = sweep.to_json(indent=2) if p["format"] == "json" else sweep.to_csv()
    _write_output(p["output"], text)


def cmd_rotor(p):
    trap = tunnelling_trap(delta=p["delta_khz"] * KHZ)
    _progress(f"relaxing rotor potential at delta = {p['delta_khz']} kHz")
    pot = rotor.rotor_potential(trap, n_theta=p["n_theta"])
    text = pot.to_json(indent=2) if p["format"] == "json" else pot.to_csv()
    _write_output(p["output"], text)


def cmd_rate_scan(p):
    lo, hi = _parse_range(p["delta_range_khz"])
    deltas = np.linspace(lo, hi, p["steps"]) * KHZ
    _progress(f"rate scan over {p['steps']} confinement offsets")
    table = quantum.rate_vs_confinement(
        deltas, n_theta=p["n_theta"], basis_size=p["basis_size"], jobs=p["jobs"],
        progress=lambda i, n: _progress(f"  point {i}/{n}"),
    )
    if p["format"] == "json":
        text = json.dumps(
            {"schema_version": 1,
             "points": [{"delta_hz": d / (2 * np.pi), "nu_hz": nu}
                        for d, nu in table]},
            indent=2,
        )
    else:
        lines = ["# delta_hz,nu_hz"]
        lines += [f"{d / (2 * np.pi):.9e},{nu:.9e}" for d, nu in table]
        text = "\n".join(lines) + "\n"
    _write_output(p["output"], text)


def cmd_time_scan(p):
    model = _model_from(p)
    tau = np.linspace(0.0, p["tau_max_ms"] * 1e-3, p["points"])
    series = expsim.simulate_time_scan(model, tau, shots=p["shots"],
                                       seed=p["seed"],
                                       flux_quanta=p["flux_quanta"])
    _progress(f"simulated {p['points']} points x {p['shots']} shots")
    fit = expsim.fit_time_scan(series)
    _progress("fit " + ", ".join(
        f"{n}={fit.param(n):.4g}+-{fit.error(n):.2g}" for n in fit.names))
    _write_series(p, series, fit)


def cmd_ab_scan(p):
    model = _model_from(p)
    lo, hi = _parse_range(p["flux_range_quanta"])
    axis = np.linspace(lo, hi, p["points"])
    if p["golden_rule"]:
        env = quantum.golden_rule_envelope(axis + p["flux_offset_quanta"])
        if p["format"] == "json":
            text = json.dumps(
                {"schema_version": 1, "flux_quanta": axis.tolist(),
                 "golden_rule_envelope": env.tolist()},
                indent=2,
            )
        else:
            lines = ["# flux_quanta,golden_rule_envelope"]
            lines += [f"{a:.9e},{e:.9e}" for a, e in zip(axis, env)]
            text = "\n".join(lines) + "\n"
        _write_output(p["output"], text)
        return
    series = expsim.simulate_flux_scan(
        model, axis, tau=p["tau_ms"] * 1e-3, shots=p["shots"], seed=p["seed"],
        flux_offset_quanta=p["flux_offset_quanta"],
    )
    _progress(f"simulated {p['points']} points x {p['shots']} shots")
    fit = expsim.fit_flux_scan(series)
    _progress("fit " + ", ".join(
        f"{n}={fit.param(n):.4g}+-{fit.error(n):.2g}" for n in fit.names))
    _write_series(p, series, fit)


def _write_series(p, series, fit):
    if p["format"] == "json":
        data = {
            "schema_version": 1,
            "axis": series.axis.tolist(),
            "successes": series.successes.tolist(),
            "shots_per_point": series.shots_per_point,
            "probabilities": series.probabilities.tolist(),
            "errors": series.errors.tolist(),
        }
        _write_output(p["output"], json.dumps(data, indent=2))
    else:
        _write_output(p["output"], series.to_csv())
    _write_output(p["fit_output"], fit.to_json(indent=2))


def cmd_thermo(p):
    w0 = p["omega_start_khz"] * KHZ
    w1 = p["omega_end_khz"] * KHZ
    t, w = thermo.exponential_schedule(w0, w1, p["duration_ms"] * 1e-3,
                                       n=p["points"])
    t_start = thermo.temperature_from_nbar(w0, p["nbar_start"])
    ramp = thermo.adiabatic_ramp(t, w, t_start, heating_quanta=p["heating_quanta"])
    if np.any(ramp.flagged):
        _progress(f"warning: {int(np.sum(ramp.flagged))} samples violate adiabaticity")
    if p["format"] == "json":
        text = json.dumps(
            {"schema_version": 1, "t_s": ramp.time.tolist(),
             "omega_hz": (ramp.omega / (2 * np.pi)).tolist(),
             "nbar": ramp.nbar.tolist(),
             "temperature_k": ramp.temperature.tolist(),
             "adiabaticity": ramp.adiabaticity.tolist()},
            indent=2,
        )
    else:
        text = ramp.to_csv()
    _write_output(p["output"], text)


def cmd_flux(p):
    setup = abfield.FieldSetup.default(
        fixed_gauss=p["fixed_gauss"], tunable_gauss=p["tunable_gauss"],
        loop_area=p["area_um2"] * 1e-12,
    )
    phi, quanta = abfield.flux(setup)
    report = {
        "schema_version": 1,
        "phi_wb": phi,
        "flux_quanta": quanta,
        "flux_quanta_abs": abs(quanta),
        "phi0_wb": abfield.FLUX_QUANTUM,
        "fixed_gauss": p["fixed_gauss"],
        "tunable_gauss": p["tunable_gauss"],
        "loop_area_um2": p["area_um2"],
    }
    _write_output(p["output"], json.dumps(report, indent=2))


def cmd_lorentz(p):
    est = abfield.lorentz_estimates(
        barrier_energy=p["barrier_hz"] * const.h,
        ground_energy=p["ground_hz"] * const.h,
        rotor_mass=p["rotor_mass_amu"] * const.atomic_mass,
        b_field=p["b_gauss"] * abfield.GAUSS,
        hop_rate=p["hop_rate_hz"],
        r0=p["r0_um"] * 1e-6,
    )
    _write_output(p["output"], est.to_json(indent=2))


COMMANDS = {
    "modes": cmd_modes,
    "rotor": cmd_rotor,
    "rate-scan": cmd_rate_scan,
    "time-scan": cmd_time_scan,
    "ab-scan": cmd_ab_scan,
    "thermo": cmd_thermo,
    "flux": cmd_flux,
    "lorentz": cmd_lorentz,
}


def _add_common(sp):
    sp.add_argument("--output", help="output path, '-' for stdout")
    sp.add_argument("--format", choices=("csv", "json"), help="output format")
    sp.add_argument("--seed", type=int, help="random seed for simulations")
    sp.add_argument("--jobs", type=int, help="worker processes for scans")
    sp.add_argument("--dump-config", metavar="PATH",
                    help="write the effective configuration as JSON and exit")


def _add_trap(sp):
    sp.add_argument("--omega-x-mhz", type=float)
    sp.add_argument("--omega-y-mhz", type=float)
    sp.add_argument("--omega-z-mhz", type=float)
    sp.add_argument("--ion-mass-amu", type=float)


def _add_model(sp):
    sp.add_argument("--p0", type=float, help="ground-band population")
    sp.add_argument("--nu-hz", type=float, help="zero-flux tunnelling rate")
    sp.add_argument("--t2-ms", type=float, help="coherence time")
    sp.add_argument("--v-per-s", type=float, help="classical rotation rate")


_COMMON_DEFAULTS = {"output": "-", "format": "csv", "seed": 0, "jobs": 1,
                    "dump_config": None}
_TRAP_DEFAULTS = {"omega_x_mhz": 1.523, "omega_y_mhz": 1.961,
                  "omega_z_mhz": 1.119, "ion_mass_amu": 40.0}
_MODEL_DEFAULTS = {"p0": 0.10, "nu_hz": 7.6, "t2_ms": 300.0, "v_per_s": 5.4}

DEFAULTS = {
    "modes": {**_COMMON_DEFAULTS, **_TRAP_DEFAULTS,
              "omega_x_range_mhz": "1.13:2.0", "steps": 24, "no_adaptive": False},
    "rotor": {**_COMMON_DEFAULTS, "delta_khz": 1.75, "n_theta": 256},
    "rate-scan": {**_COMMON_DEFAULTS, "delta_range_khz": "1.2:2.4", "steps": 7,
                  "n_theta": 128, "basis_size": 65},
    "time-scan": {**_COMMON_DEFAULTS, **_MODEL_DEFAULTS, "tau_max_ms": 500.0,
                  "points": 26, "shots": 400, "flux_quanta": 0.0,
                  "fit_output": "-"},
    "ab-scan": {**_COMMON_DEFAULTS, **_MODEL_DEFAULTS,
                "flux_range_quanta": "-1.0:1.0", "points": 17, "tau_ms": 50.0,
                "shots": 800,
                "flux_offset_quanta": expsim.DEFAULT_FLUX_OFFSET,
                "golden_rule": False, "fit_output": "-"},
    "thermo": {**_COMMON_DEFAULTS, "omega_start_khz": 750.0,
               "omega_end_khz": 0.18, "duration_ms": 100.0, "points": 256,
               "nbar_start": 0.08, "heating_quanta": 0.0},
    "flux": {**_COMMON_DEFAULTS, "fixed_gauss": 3.4, "tunable_gauss": 0.0,
             "area_um2": 37.0},
    "lorentz": {**_COMMON_DEFAULTS, "barrier_hz": 270.0, "ground_hz": 90.0,
                "b_gauss": 5.0, "hop_rate_hz": 7.4, "r0_um": 3.42,
                "rotor_mass_amu": 120.0},
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ionrotor",
        description="three-ion crystal rotor: structures, modes, tunnelling, "
                    "and measurement simulation",
    )
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("modes", help="mode frequencies vs radial confinement")
    _add_common(sp)
    _add_trap(sp)
    sp.add_argument("--omega-x-range-mhz", metavar="LO:HI")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--no-adaptive", action="store_const", const=True)

    sp = sub.add_parser("rotor", help="orientation potential at one offset")
    _add_common(sp)
    sp.add_argument("--delta-khz", type=float)
    sp.add_argument("--n-theta", type=int)

    sp = sub.add_parser("rate-scan", help="tunnelling rate vs confinement")
    _add_common(sp)
    sp.add_argument("--delta-range-khz", metavar="LO:HI")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--n-theta", type=int)
    sp.add_argument("--basis-size", type=int)

    sp = sub.add_parser("time-scan", help="synthetic waiting-time scan + fit")
    _add_common(sp)
    _add_model(sp)
    sp.add_argument("--tau-max-ms", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--flux-quanta", type=float)
    sp.add_argument("--fit-output", help="path for the fit JSON")

    sp = sub.add_parser("ab-scan", help="synthetic flux scan + fringe fit")
    _add_common(sp)
    _add_model(sp)
    sp.add_argument("--flux-range-quanta", metavar="LO:HI")
    sp.add_argument("--points", type=int)
    sp.add_argument("--tau-ms", type=float)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--flux-offset-quanta", type=float)
    sp.add_argument("--golden-rule", action="store_const", const=True,
                    help="emit the interference envelope instead of shots")
    sp.add_argument("--fit-output", help="path for the fit JSON")

    sp = sub.add_parser("thermo", help="adiabatic cooling ramp table")
    _add_common(sp)
    sp.add_argument("--omega-start-khz", type=float)
    sp.add_argument("--omega-end-khz", type=float)
    sp.add_argument("--duration-ms", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--nbar-start", type=float)
    sp.add_argument("--heating-quanta", type=float)

    sp = sub.add_parser("flux", help="flux through the rotor loop")
    _add_common(sp)
    sp.add_argument("--fixed-gauss", type=float)
    sp.add_argument("--tunable-gauss", type=float)
    sp.add_argument("--area-um2", type=float)

    sp = sub.add_parser("lorentz", help="Lorentz-force order-of-magnitude report")
    _add_common(sp)
    sp.add_argument("--barrier-hz", type=float)
    sp.add_argument("--ground-hz", type=float)
    sp.add_argument("--b-gauss", type=float)
    sp.add_argument("--hop-rate-hz", type=float)
    sp.add_argument("--r0-um", type=float)
    sp.add_argument("--rotor-mass-amu", type=float)
    return parser


def merge_config(command, cli_args, config_path=None):
    """defaults < config file < explicit flags, validated against the command."""
    if command not in DEFAULTS:
        raise ValueError(f"unknown command {command!r}")
    params = dict(DEFAULTS[command])
    if config_path:
        with open(config_path) as fh:
            loaded = json.load(fh)
        if loaded.get("command", command) != command:
            raise ValueError(
                f"config file is for {loaded.get('command')!r}, not {command!r}"
            )
        for key, value in loaded.get("params", {}).items():
            if key not in params:
                raise ValueError(f"config key {key!r} unknown for {command!r}")
            params[key] = value
    for key, value in cli_args.items():
        if key in ("command", "config"):
            continue
        if value is not None and key in params:
            params[key] = value
    return RunConfig(command=command, params=params)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if err.code is not None else 2
    try:
        run = merge_config(args.command, vars(args), args.config)
        if run.params.get("dump_config"):
            dump_to = run.params["dump_config"]
            clean = replace(
                run, params={k: v for k, v in run.params.items()
                             if k != "dump_config"}
            )
            _write_output(dump_to, clean.to_json())
            return 0
        COMMANDS[args.command](run.params)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ConvergenceError, SingularConfigurationError,
            np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
