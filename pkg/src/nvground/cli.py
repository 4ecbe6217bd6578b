"""Command-line surface tying the model, fits and file formats together.

Subcommands: transitions, fit, thermal, angular-scan, perturb-check,
synth, ramsey.  Exit codes: 0 ok, 2 config/parse error, 3 labeling
ambiguity, 4 fit non-convergence, 5 validation tripwire.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import extraction, io, perturbation, presets, ramsey
from .extraction import ParamVector
from .io import ConfigError, fmt_g, fmt_khz
from .optimize import FitConvergenceError, PolynomialModel
from .spin_core import (
    GAMMA_E_KHZ_PER_G,
    CouplingParams,
    FieldConfig,
    IsotopeSpec,
    get_isotope,
)
from .transitions import AmbiguousLabelingError, mw_pairs, transition_set

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LABELING = 3
EXIT_FIT = 4
EXIT_TRIPWIRE = 5

DEFAULT_NOISE_TOLERANCE_HZ = 20.0


class TripwireError(RuntimeError):
    """Perturbation-vs-exact residual above the documented tolerance."""


def _isotope(args) -> IsotopeSpec:
    try:
        return get_isotope(args.isotope)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _field(args) -> FieldConfig:
    theta = getattr(args, "theta_deg", None)
    if theta is not None:
        if getattr(args, "b", None) is None:
            raise ConfigError("--theta-deg requires --b (field magnitude)")
        return FieldConfig.from_polar(args.b, math.radians(theta))
    if args.bz is None:
        raise ConfigError("either --bz or (--b with --theta-deg) is required")
    return FieldConfig(bz=args.bz, bx=args.bx)


def _params(args, iso: IsotopeSpec, temperature: float):
    """Resolve coupling parameters and, when available, thermal models."""
    if (args.preset is None) == (args.params is None):
        raise ConfigError("exactly one of --preset or --params is required")
    if args.preset is not None:
        try:
            presets.resolve_preset(args.preset)
            return presets.params_at(iso, temperature), presets.thermal_presets(iso)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    try:
        raw = json.loads(Path(args.params).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot parse params file: {err}") from err
    try:
        params = CouplingParams(
            d=float(raw["d"]),
            q=float(raw.get("q", 0.0)),
            a_par=float(raw["a_par"]),
            a_perp=float(raw["a_perp"]),
            gamma_e=float(raw.get("gamma_e", GAMMA_E_KHZ_PER_G)),
            gamma_n=float(raw.get("gamma_n", iso.gamma_n)),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad params file: {err}") from err
    return params, None


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text + ("" if text.endswith("\n") else "\n"), encoding="utf-8")
    else:
        print(text)


def _config_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _canonical_labels(iso: IsotopeSpec) -> list[str]:
    rf = ["f1", "f2", "f3", "f4", "f5", "f6"] if iso.name == "N14" else ["f7", "f8", "f9"]
    extra = ["fdq", "f1-f2", "f5-f4", "f3-f6"] if iso.name == "N14" else []
    return rf + extra + list(mw_pairs(iso))


def cmd_transitions(args) -> int:
    iso = _isotope(args)
    params, models = _params(args, iso, args.temp)
    field = _field(args)
    if models is not None and field.bx == 0:
        table = extraction.transition_table(models, args.temp, field.bz, iso)
        freqs = {label: f for label, f, _ in table.rows}
        slopes = {label: s for label, _, s in table.rows}
    else:
        ts = transition_set(params, field, iso)
        freqs = dict(ts.frequencies)
        for combo, a, b in (("f1-f2", "f1", "f2"), ("f5-f4", "f5", "f4"), ("f3-f6", "f3", "f6")):
            if a in freqs:
                freqs[combo] = freqs[a] - freqs[b]
        slopes = None
    labels = [l for l in _canonical_labels(iso) if l in freqs]
    if args.format == "json":
        rows = [
            {"transition": l, "freq_khz": round(float(freqs[l]), 6)}
            | ({"df_dt_hz_per_k": round(float(slopes[l]), 6)} if slopes else {})
            for l in labels
        ]
        _emit(args, io.dump_json({"config": _config_dict(args), "rows": rows}, None))
    else:
        header = "transition,freq_khz" + (",df_dt_hz_per_k" if slopes else "")
        lines = [header]
        for l in labels:
            line = f"{l},{fmt_khz(float(freqs[l]))}"
            if slopes:
                line += f",{fmt_g(round(float(slopes[l]), 6))}"
            lines.append(line)
        _emit(args, "\n".join(lines))
    return EXIT_OK


def _guess_vector(iso: IsotopeSpec, params: CouplingParams, bz: float) -> ParamVector:
    return ParamVector.from_physical(iso.name, params, FieldConfig(bz=bz))


def _fit_record(temperature: float, fit) -> dict:
    vec = fit.params
    return {
        "temperature_K": temperature,
        "params": {name: round(float(getattr(vec, name)), 6) for name in vec.fields()},
        "objective": float(fit.objective),
        "residuals_khz": {k: round(v, 6) for k, v in fit.residuals.items()},
        "converged": fit.converged,
        "iterations": fit.iterations,
    }


def _thermal_summary(models: dict[str, PolynomialModel], t_ref: float = 297.0) -> dict:
    out = {}
    for name, model in models.items():
        out[name] = {
            "value_khz": round(model.value(t_ref), 6),
            "derivative_hz_per_k": round(1e3 * model.derivative(t_ref), 6),
            "fractional_ppm_per_k": round(model.fractional_derivative_ppm(t_ref), 4),
            "second_derivative_hz_per_k2": round(1e3 * model.second_derivative(t_ref), 6),
            "coeffs": [fmt_g(c) for c in model.coeffs],
            "residual_rms_khz": round(model.residual_rms, 9),
        }
    return out


def _run_fits(args, want_thermal: bool) -> dict:
    iso = _isotope(args)
    params, _ = _params(args, iso, presets.T_REF_K)
    if args.bz is None:
        raise ConfigError("--bz (nominal axial field for the initial guess) is required")
    sets = io.read_measurements(args.measurements, iso)
    if not sets:
        raise ConfigError("measurement file contains no rows")
    guess = _guess_vector(iso, params, args.bz)
    fixed = tuple(args.fix or ())
    records = []
    series = []
    for ms in sets:
        n_free = len(guess.fields()) - len(fixed)
        if len(ms.entries) < n_free:
            raise ConfigError(
                f"T = {ms.temperature} K: {len(ms.entries)} rows cannot determine "
                f"{n_free} parameters"
            )
        fit = extraction.extract_params(ms, guess, fixed=fixed)
        records.append(_fit_record(ms.temperature, fit))
        series.append((ms.temperature, fit))
    payload = {"config": _config_dict(args), "results": records}
    if want_thermal:
        try:
            models = extraction.thermal_models(series)
        except ValueError as err:
            raise ConfigError(str(err)) from err
        payload["thermal"] = _thermal_summary(models)
    return payload


def cmd_fit(args) -> int:
    payload = _run_fits(args, want_thermal=args.thermal)
    if args.format == "csv":
        lines = ["temperature_K,param,value"]
        for rec in payload["results"]:
            for name, value in rec["params"].items():
                lines.append(f"{fmt_g(rec['temperature_K'])},{name},{fmt_g(value)}")
        _emit(args, "\n".join(lines))
    else:
        _emit(args, io.dump_json(payload, None))
    return EXIT_OK


def cmd_thermal(args) -> int:
    args.thermal = True
    payload = _run_fits(args, want_thermal=True)
    payload = {"config": payload["config"], "thermal": payload["thermal"]}
    _emit(args, io.dump_json(payload, None))
    return EXIT_OK


def cmd_angular_scan(args) -> int:
    iso = _isotope(args)
    params, _ = _params(args, iso, args.temp)
    if args.bz is None:
        raise ConfigError("--bz is required")
    if not (0 < args.theta_max_deg <= 2.0):
        raise ConfigError("--theta-max-deg must lie in (0, 2]")
    if args.steps < 2:
        raise ConfigError("--steps must be at least 2")
    transition = "fdq" if iso.name == "N14" else "f7"
    try:
        beta = perturbation.beta_coefficient(params, args.bz, transition)
    except perturbation.ValidityMarginError as err:
        raise ConfigError(str(err)) from err
    thetas = np.linspace(0.0, args.theta_max_deg, args.steps)
    f0 = float(
        perturbation.exact_transition(params, iso, args.bz, 0.0, transition, dtype=np.longdouble)
    )
    rows = []
    for theta_deg in thetas:
        shift = float(
            perturbation.exact_angular_shift(
                params, iso, args.bz, math.radians(theta_deg), transition
            )
        )
        rows.append((float(theta_deg), f0 + shift, shift / f0))
    if args.format == "json":
        payload = {
            "config": _config_dict(args),
            "transition": transition,
            "beta_perturbative": beta.beta,
            "baseline_khz": beta.baseline_khz,
            "rows": [
                {"theta_deg": t, "f_khz": round(f, 9), "fractional_shift": fs}
                for t, f, fs in rows
            ],
        }
        _emit(args, io.dump_json(payload, None))
    else:
        lines = [
            f"# transition={transition} bz_G={fmt_g(args.bz)} "
            f"beta_perturbative={beta.beta:.6g} baseline_khz={fmt_khz(beta.baseline_khz)}",
            "theta_deg,f_khz,fractional_shift",
        ]
        for t, f, fs in rows:
            lines.append(f"{fmt_g(t)},{f:.9f},{fmt_g(fs)}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_perturb_check(args) -> int:
    isotopes = [get_isotope(args.isotope)] if args.isotope else [get_isotope("n14"), get_isotope("n15")]
    bz_grid = np.linspace(args.bz_min, args.bz_max, args.bz_steps)
    bx_grid = np.linspace(0.0, args.bx_max, args.bx_steps)
    tolerance_khz = args.tolerance_hz / 1e3
    report = {"config": _config_dict(args), "tolerance_hz": args.tolerance_hz, "isotopes": {}}
    failures = []
    for iso in isotopes:
        params = presets.params_at(iso, args.temp)
        try:
            worst = perturbation.residuals_vs_exact(params, iso, bz_grid, bx_grid)
        except perturbation.ValidityMarginError as err:
            raise ConfigError(str(err)) from err
        report["isotopes"][iso.name] = {
            k: {"max_residual_hz": round(v * 1e3, 4), "pass": v <= tolerance_khz}
            for k, v in sorted(worst.items())
        }
        failures += [f"{iso.name}:{k}" for k, v in worst.items() if v > tolerance_khz]
    report["pass"] = not failures
    _emit(args, io.dump_json(report, None))
    if failures:
        raise TripwireError(f"residual above {args.tolerance_hz} Hz for {failures}")
    return EXIT_OK


def _synth_labels(iso: IsotopeSpec) -> list[str]:
    if iso.name == "N14":
        return ["f1", "f2", "f3", "f4", "f5", "f6", "fplus_+1", "fminus_+1"]
    return ["f7", "f8", "f9", "fplus_+1/2", "fminus_+1/2"]


def _sigma_for(label: str) -> float:
    if label.startswith("fplus") or label.startswith("fminus"):
        return presets.MW_SIGMA_KHZ
    return presets.TABLE3[label].freq_sigma_khz


def cmd_synth(args) -> int:
    iso = _isotope(args)
    if args.preset is None:
        raise ConfigError("synth requires --preset")
    presets.resolve_preset(args.preset)
    if args.bz is None:
        raise ConfigError("--bz is required")
    try:
        temps = [float(t) for t in args.temps.split(",") if t.strip()]
    except ValueError as err:
        raise ConfigError(f"bad --temps list: {err}") from err
    if not temps:
        raise ConfigError("--temps must list at least one temperature")
    rng = np.random.default_rng(args.seed)
    labels = _synth_labels(iso)
    rows = []
    for temperature in temps:
        try:
            params = presets.params_at(iso, temperature)
        except ValueError as err:
            raise ConfigError(str(err)) from err
        ts = transition_set(params, FieldConfig(bz=args.bz), iso)
        for label in labels:
            sigma = _sigma_for(label)
            noise = rng.normal() * sigma * args.noise_scale if args.noise_scale else 0.0
            rows.append(io.MeasurementRow(temperature, label, float(ts[label]) + noise, sigma))
    if not args.out:
        raise ConfigError("synth requires --out FILE")
    io.write_measurements(args.out, rows)
    print(f"wrote {len(rows)} rows for {iso.name} to {args.out}")
    return EXIT_OK


def cmd_ramsey(args) -> int:
    iso = _isotope(args)
    if args.trace_in:
        trace = io.read_trace(args.trace_in)
        if args.f_rf_khz is None:
            raise ConfigError("--f-rf-khz is required when fitting an existing trace")
        fit = ramsey.fit_fringes(trace)
        payload = {
            "config": _config_dict(args),
            "delta_fit_khz": round(fit.delta_khz, 9),
            "t2_star_fit_s": fmt_g(fit.t2_star_s),
            "rms_residual": fmt_g(fit.rms_residual),
            "f_recovered_khz": round(
                ramsey.frequency_from_detuning(args.f_rf_khz, fit.delta_khz, args.sign), 6
            ),
        }
        _emit(args, io.dump_json(payload, None))
        return EXIT_OK
    params, _ = _params(args, iso, args.temp)
    if args.bz is None:
        raise ConfigError("--bz is required")
    ts = transition_set(params, _field(args), iso)
    if args.transition not in ts.frequencies:
        raise ConfigError(f"unknown transition {args.transition!r} for {iso.name}")
    f_true = float(ts[args.transition])
    f_rf = f_true + args.detune_khz
    delta_true = f_rf - f_true
    times = np.linspace(0.0, args.duration_ms * 1e-3, args.samples)
    trace = ramsey.synthesize(
        abs(delta_true),
        args.t2_star_ms * 1e-3,
        args.amp,
        args.phase,
        args.offset,
        times,
        noise_sigma=args.noise_sigma,
        rng_seed=args.seed,
    )
    if args.trace_out:
        io.write_trace(args.trace_out, trace)
    fit = ramsey.fit_fringes(trace)
    sign = 1 if delta_true >= 0 else -1
    f_recovered = ramsey.frequency_from_detuning(f_rf, fit.delta_khz, sign)
    payload = {
        "config": _config_dict(args),
        "f_true_khz": round(f_true, 6),
        "f_rf_khz": round(f_rf, 6),
        "delta_true_khz": round(abs(delta_true), 9),
        "delta_fit_khz": round(fit.delta_khz, 9),
        "t2_star_fit_s": fmt_g(fit.t2_star_s),
        "rms_residual": fmt_g(fit.rms_residual),
        "f_recovered_khz": round(f_recovered, 6),
        "recovery_error_hz": round(1e3 * (f_recovered - f_true), 6),
    }
    _emit(args, io.dump_json(payload, None))
    return EXIT_OK


def _add_common(sub, *, isotope_required=True):
    sub.add_argument("--isotope", required=isotope_required, help="n14 or n15")
    sub.add_argument("--preset", help="named parameter preset (table1_297K)")
    sub.add_argument("--params", help="JSON file with d, q, a_par, a_perp [, gamma_n]")
    sub.add_argument("--bz", type=float, default=None, help="axial field, Gauss")
    sub.add_argument("--bx", type=float, default=0.0, help="transverse field, Gauss")
    sub.add_argument("--b", type=float, default=None, help="field magnitude, Gauss")
    sub.add_argument("--theta-deg", type=float, default=None, help="misalignment angle, degrees")
    sub.add_argument("--temp", type=float, default=presets.T_REF_K, help="temperature, K")
    sub.add_argument("--out", help="output file (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvground",
        description="NV ground-state spin toolkit: transition frequencies, "
        "parameter extraction and Ramsey analysis",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("transitions", help="exact-diagonalization line table")
    _add_common(s)
    s.set_defaults(func=cmd_transitions)

    s = subs.add_parser("fit", help="extract coupling parameters from measurements")
    _add_common(s)
    s.add_argument("--measurements", required=True, help="measurement CSV file")
    s.add_argument("--thermal", action="store_true", help="append degree-4 thermal models")
    s.add_argument("--fix", action="append", help="pin a fit parameter at its guess value")
    s.set_defaults(func=cmd_fit, format="json")

    s = subs.add_parser("thermal", help="per-temperature fits plus thermal models")
    _add_common(s)
    s.add_argument("--measurements", required=True, help="measurement CSV file")
    s.add_argument("--fix", action="append", help="pin a fit parameter at its guess value")
    s.set_defaults(func=cmd_thermal, format="json")

    s = subs.add_parser("angular-scan", help="fdq/f7 shift vs misalignment angle")
    _add_common(s)
    s.add_argument("--theta-max-deg", type=float, default=0.5)
    s.add_argument("--steps", type=int, default=11)
    s.set_defaults(func=cmd_angular_scan)

    s = subs.add_parser("perturb-check", help="perturbation-vs-exact tripwire")
    _add_common(s, isotope_required=False)
    s.add_argument("--bz-min", type=float, default=300.0)
    s.add_argument("--bz-max", type=float, default=600.0)
    s.add_argument("--bz-steps", type=int, default=7)
    s.add_argument("--bx-max", type=float, default=1.0)
    s.add_argument("--bx-steps", type=int, default=5)
    s.add_argument("--tolerance-hz", type=float, default=DEFAULT_NOISE_TOLERANCE_HZ)
    s.set_defaults(func=cmd_perturb_check, format="json")

    s = subs.add_parser("synth", help="generate a synthetic measurement CSV")
    _add_common(s)
    s.add_argument("--temps", default="297", help="comma-separated temperatures, K")
    s.add_argument("--noise-scale", type=float, default=1.0, help="0 for noiseless")
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("ramsey", help="synthesize and fit Ramsey fringes end to end")
    _add_common(s)
    s.add_argument("--transition", default="f1")
    s.add_argument("--detune-khz", type=float, default=4.0)
    s.add_argument("--t2-star-ms", type=float, default=1.0)
    s.add_argument("--duration-ms", type=float, default=2.0)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--amp", type=float, default=0.5)
    s.add_argument("--phase", type=float, default=0.0)
    s.add_argument("--offset", type=float, default=1.0)
    s.add_argument("--noise-sigma", type=float, default=0.0)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1)
    s.add_argument("--trace-out", help="write the synthesized trace CSV here")
    s.add_argument("--trace-in", help="fit an existing trace CSV instead")
    s.add_argument("--f-rf-khz", type=float, default=None, help="drive frequency for --trace-in")
    s.set_defaults(func=cmd_ramsey, format="json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse already printed the message; normalize bad usage to 2
        return EXIT_CONFIG if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, perturbation.ValidityMarginError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except AmbiguousLabelingError as err:
        print(f"error: ambiguous state labeling: {err}", file=sys.stderr)
        return EXIT_LABELING
    except FitConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FIT
    except TripwireError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_TRIPWIRE


if __name__ == "__main__":
    sys.exit(main())
