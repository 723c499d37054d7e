"""Batch command-line front end.

Every subcommand reads CSV/model/config files, writes plot-ready CSV files and
returns an exit code: 0 on success, 1 for user, file or configuration errors
and 2 for numerical failures (divergence, no root).  Progress and summaries go
to standard error; numbers go to files only.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataio
from .basis import uniform_gap_grid, uniform_points
from .dynamics import (BaseExcitation, Cubic, Fitted, FittedPotential, GapSpring, Harmonic,
                       OscillatorModel, frequency_sweep, integrate)
from .errors import (ConfigError, DivergenceError, FormatError, InvalidArgumentError,
                     NoRootError)
from .regress import (POTENTIAL_CONVENTION, SIGN_CONVENTION, ForceModel, PotentialForceModel,
                      fit_direct, fit_indirect, fit_potential_constrained)
from .sigproc import (backbone_from_free_response, differentiate_response, fft_spectrum,
                      rmse, split_fit_validate)
from .timeseries import TimeSeries

log = logging.getLogger("gapspring")

# softening surrogate: per-mass potential terms of a magnet-repulsion-like spring
SURROGATE_ZETA = 0.0054
SURROGATE_OMEGA_N = 65.2
SURROGATE_MODEL = PotentialForceModel(0.0, 2400.0, [-400.0, -400.0, -400.0],
                                      [0.002, 0.004, 0.006])

SYNTH_DEFAULTS = {
    # kind: (x0 [m], t_end [s], sample dt [s])
    "duffing": (-4.0, 30.0, 1e-2),
    "pwl": (-2.0, 30.0, 1e-2),
    "softening": (0.01, 5.0, 1e-3),
}


@dataclass
class CommandOutcome:
    exit_code: int = 0
    artifacts_written: list = field(default_factory=list)
    summary: str = ""


class UsageError(Exception):
    """Bad flag combination detected after argument parsing."""


# --------------------------------------------------------------------------- helpers

def _load_config(args) -> dataio.RunConfig:
    text = ""
    if getattr(args, "config", None):
        text = "\n".join(Path(args.config).read_text().splitlines())
    overrides = "\n".join(getattr(args, "set", None) or [])
    return dataio.parse_config_text(text + "\n" + overrides, args.config or "<--set>")


def _companion(out, suffix):
    out = Path(out)
    return out.with_name(out.stem + suffix)


def parse_exact(text: str):
    """``cubic:p2=10``, ``gap:p2=10,L=0.5`` or ``linear`` into a nonlinearity."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"--exact parameter {item!r} is not key=value")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--exact parameter {key}: {val!r} is not a number") from None
    expected = {"cubic": {"p2"}, "gap": {"p2", "L"}, "linear": set()}
    if name not in expected:
        raise UsageError(f"--exact kind must be cubic, gap or linear, got {name!r}")
    if set(params) != expected[name]:
        raise UsageError(f"--exact {name} needs parameters {sorted(expected[name])}")
    if name == "cubic":
        return Cubic(params["p2"])
    if name == "gap":
        return GapSpring(params["p2"], params["L"])
    return None


def _nonlinearity(args):
    if bool(getattr(args, "model", None)) == bool(getattr(args, "exact", None)):
        raise UsageError("give exactly one of --model or --exact")
    if args.exact:
        return parse_exact(args.exact)
    model, _ = dataio.load_model(args.model)
    return FittedPotential(model) if isinstance(model, PotentialForceModel) else Fitted(model)


def _oscillator(cfg, nonlinearity=None, forcing=None):
    m, c, k = cfg.modal()
    return OscillatorModel(m, c, k, nonlinearity, forcing)


def _forcing(cfg, need_frequency):
    fc = cfg.forcing
    if fc.kind == "none":
        return None
    if need_frequency and fc.f_e is None:
        raise ConfigError("forcing.f_e: required for a forced simulation")
    f_e = fc.f_e or 0.0
    return Harmonic(fc.amplitude, f_e) if fc.kind == "harmonic" else BaseExcitation(fc.amplitude, f_e)


def _integrate_sampled(model, x0, v0, dt_out, t_end, dt_max, t0=0.0):
    """Integrate with steps no larger than ``dt_max`` and sample every ``dt_out``."""
    sub = max(1, math.ceil(dt_out / dt_max - 1e-9))
    xs, vs, acc = integrate(model, x0, v0, dt_out / sub, t_end, t0)
    return tuple(TimeSeries(t0, dt_out, s.values[::sub], s.label, s.units) for s in (xs, vs, acc))


def _write_report(path, title, rows, convention):
    lines = [title, f"convention: {convention}"]
    lines += [f"{k}: {dataio.fmt(v) if isinstance(v, float) else v}" for k, v in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _channel(series_list, name, path):
    for s in series_list:
        if s.label == name:
            return s
    raise FormatError(f"{path}: no channel {name!r} (have {[s.label for s in series_list]})")


# --------------------------------------------------------------------------- commands

def cmd_synth(args) -> CommandOutcome:
    cfg = _load_config(args)
    out = CommandOutcome()
    if args.kind in ("cubic-force", "gap-force"):
        if args.n < 2:
            raise UsageError("--n must be >= 2")
        lo, hi = args.range
        if not lo < hi:
            raise UsageError("--range needs LO < HI")
        x = np.linspace(lo, hi, args.n)
        p2 = 10.0 if args.p2 is None else args.p2
        f = p2 * x ** 3 if args.kind == "cubic-force" else p2 * np.maximum(0.0, x - args.L)
        dataio.write_columns_csv(args.out, {"x": x, "f": f}, {"units": "x=m,f=N"})
        out.artifacts_written.append(args.out)
        out.summary = f"{args.n} force samples of {args.kind} over [{lo:g}, {hi:g}] m"
        return out

    x0_d, t_end_d, dt_d = SYNTH_DEFAULTS[args.kind]
    x0 = x0_d if args.x0 is None else args.x0
    t_end = t_end_d if args.t_end is None else args.t_end
    dt = dt_d if args.dt is None else args.dt
    if args.kind == "softening":
        zeta, omega_n = SURROGATE_ZETA, SURROGATE_OMEGA_N
        if cfg.oscillator.zeta is not None:
            zeta, omega_n = cfg.oscillator.zeta, cfg.oscillator.omega_n
        model = OscillatorModel.from_modal(zeta, omega_n, 1.0, FittedPotential(SURROGATE_MODEL))
    else:
        p2 = 10.0 if args.p2 is None else args.p2
        nl = Cubic(p2) if args.kind == "duffing" else GapSpring(p2, args.L)
        model = _oscillator(cfg, nl)
    n = int(round(t_end / dt))
    xs, vs, acc = _integrate_sampled(model, x0, 0.0, dt, n * dt, dt / args.substeps)
    xs, vs, acc = (s.slice(0, n) for s in (xs, vs, acc))
    if args.noise > 0:
        rng = np.random.default_rng(args.seed)
        scale = args.noise * float(np.sqrt(np.mean(xs.values ** 2)))
        xs = xs.with_values(xs.values + scale * rng.standard_normal(len(xs)))
    series = [xs] if args.kind == "softening" or args.noise > 0 else [xs, vs, acc]
    dataio.write_timeseries_csv(args.out, series)
    out.artifacts_written.append(args.out)
    out.summary = (f"{args.kind} record: {n} samples at dt={dt:g} s from x0={x0:g} m"
                   + (f", noise {args.noise:g} x RMS (seed {args.seed})" if args.noise > 0 else ""))
    return out


def cmd_fit_direct(args) -> CommandOutcome:
    cfg = _load_config(args)
    cols = dataio.read_columns_csv(args.input)
    if "x" not in cols or "f" not in cols:
        raise FormatError(f"{args.input}: needs columns x,f")
    x, f = cols["x"], cols["f"]
    order = np.argsort(x, kind="stable")
    x, f = x[order], f[order]
    g = cfg.grid
    lo = float(x[0]) if g.x_lo is None else g.x_lo
    hi = float(x[-1]) if g.x_hi is None else g.x_hi
    grid = uniform_gap_grid(lo, hi, g.M, g.N)
    model, report = fit_direct(x, f, grid, cfg.fit.rtol, cfg.fit.threshold)
    err = float(np.max(np.abs(model(x) - f)))
    fmax = float(np.max(np.abs(f)))
    dataio.save_model(args.out, model, report)
    coef_path = _companion(args.out, ".coefficients.csv")
    rows = model.coefficients_by_gap()
    dataio.write_columns_csv(coef_path, {
        "kind": np.array([r[0] for r in rows], dtype=object),
        "gap": np.array([r[1] for r in rows]),
        "coefficient": np.array([r[2] for r in rows])})
    report_path = _companion(args.out, ".report.txt")
    _write_report(report_path, "direct fit", [
        ("M", g.M), ("N", g.N), ("gap_range", f"{dataio.fmt(lo)} {dataio.fmt(hi)}"),
        ("samples", x.size), ("residual_rms", report.residual_rms),
        ("max_abs_error", err), ("max_abs_force", fmax),
        ("max_error_fraction", err / fmax if fmax else math.nan),
        ("rank_used", report.rank_used), ("condition_estimate", report.condition_estimate),
        ("notes", "; ".join(report.notes) or "none")], SIGN_CONVENTION)
    return CommandOutcome(0, [args.out, str(coef_path), str(report_path)],
                          f"direct fit ({g.M},{g.N}): max error {err:.4g} "
                          f"({100 * err / fmax if fmax else math.nan:.3g}% of max|f|), "
                          f"rank {report.rank_used}")


def _response_channels(path, cfg):
    """x, v, a from a response CSV; v and a are computed when absent."""
    series = dataio.read_timeseries_csv(path)
    x = _channel(series, "x", path)
    labels = {s.label for s in series}
    if len(x) < 3:
        raise InvalidArgumentError(f"{path}: need at least 3 samples, got {len(x)}")
    if {"v", "a"} <= labels:
        return x, _channel(series, "v", path), _channel(series, "a", path), False
    pp = cfg.preprocess
    x, v, a = differentiate_response(x, pp.cutoff_hz, pp.edge_trim)
    return x, v, a, True


def _fit_once(method, cfg, fit, zeta, omega_n):
    fx, fv, fa = fit
    g = cfg.grid
    if method == "potential":
        gmax = g.psi_max if g.psi_max is not None else float(np.max(np.abs(fx.values)))
        if not gmax > 0:
            raise InvalidArgumentError("fit data never leaves x = 0; cannot place psi gaps")
        gaps = uniform_points(0.0, gmax, g.psi_count)
        return fit_potential_constrained(fx, fv, fa, zeta, omega_n, gaps, g.include_linear,
                                         cfg.fit.rtol, cfg.fit.threshold)
    lo = float(fx.values.min()) if g.x_lo is None else g.x_lo
    hi = float(fx.values.max()) if g.x_hi is None else g.x_hi
    grid = uniform_gap_grid(lo, hi, g.M, g.N)
    return fit_indirect(fx, fv, fa, zeta, omega_n, grid, cfg.fit.rtol, cfg.fit.threshold)


def _forecast_rmse(model, cfg, val, zeta, omega_n):
    vx, vv, _ = val
    nl = FittedPotential(model) if isinstance(model, PotentialForceModel) else Fitted(model)
    m = cfg.oscillator.m
    osc = OscillatorModel.from_modal(zeta, omega_n, m, nl)
    t_end = (len(vx) - 1) * vx.dt
    if len(vx) < 2:
        raise InvalidArgumentError("validation partition needs at least 2 samples")
    fx, _, _ = _integrate_sampled(osc, vx.values[0], vv.values[0], vx.dt, t_end,
                                  cfg.integration.dt, vx.t0)
    return rmse(fx, vx.with_values(vx.values)), fx


def _fit_response(args, method) -> CommandOutcome:
    cfg = _load_config(args)
    zeta, omega_n = cfg.zeta_omega()
    x, v, a, derived = _response_channels(args.input, cfg)
    scan = getattr(args, "scan_fit_fraction", None)
    out = CommandOutcome()
    if scan:
        lo, hi, n = scan
        n = int(n)
        if not (0 < lo <= hi < 1) or n < 1:
            raise UsageError("--scan-fit-fraction needs 0 < LO <= HI < 1 and N >= 1")
        fracs = np.linspace(lo, hi, n)
        fit_r, val_r = [], []
        for frac in fracs:
            fit, val = split_fit_validate(x, v, a, float(frac))
            model, report = _fit_once(method, cfg, fit, zeta, omega_n)
            fit_r.append(report.residual_rms)
            val_r.append(_forecast_rmse(model, cfg, val, zeta, omega_n)[0])
            log.info("fit_fraction %.4g: fit rms %.4g, validation rms %.4g",
                     frac, fit_r[-1], val_r[-1])
        dataio.write_columns_csv(args.out, {
            "fit_fraction": fracs, "fit_duration_s": fracs * len(x) * x.dt,
            "fit_rmse": np.array(fit_r), "validation_rmse": np.array(val_r)},
            {"method": method, "units": "fit_rmse=m/s^2,validation_rmse=m"})
        out.artifacts_written.append(args.out)
        out.summary = f"scanned {n} fit fractions in [{lo:g}, {hi:g}]"
        return out

    fit, val = split_fit_validate(x, v, a, cfg.preprocess.fit_fraction)
    model, report = _fit_once(method, cfg, fit, zeta, omega_n)
    dataio.save_model(args.out, model, report)
    out.artifacts_written.append(args.out)
    val_rmse, forecast = _forecast_rmse(model, cfg, val, zeta, omega_n)
    fc_path = _companion(args.out, ".forecast.csv")
    dataio.write_columns_csv(fc_path, {"t": forecast.times, "x_measured": val[0].values,
                                       "x_forecast": forecast.values}, {"units": "t=s,x=m"})
    if isinstance(model, PotentialForceModel):
        coef = {"kind": np.array(["const", "linear"] + ["psi"] * model.gaps.size, dtype=object),
                "gap": np.concatenate([[math.nan, math.nan], model.gaps]),
                "coefficient": model.coefficients}
        convention = POTENTIAL_CONVENTION
    else:
        rows = model.coefficients_by_gap()
        coef = {"kind": np.array([r[0] for r in rows], dtype=object),
                "gap": np.array([r[1] for r in rows]),
                "coefficient": np.array([r[2] for r in rows])}
        convention = SIGN_CONVENTION
    coef_path = _companion(args.out, ".coefficients.csv")
    dataio.write_columns_csv(coef_path, coef)
    report_path = _companion(args.out, ".report.txt")
    _write_report(report_path, f"{method} fit", [
        ("zeta", zeta), ("omega_n_rad_s", omega_n),
        ("derivatives", "computed (filter + central differences)" if derived else "from file"),
        ("fit_samples", len(fit[0])), ("validation_samples", len(val[0])),
        ("fit_rmse_m_s2", report.residual_rms), ("validation_rmse_m", val_rmse),
        ("rank_used", report.rank_used), ("condition_estimate", report.condition_estimate),
        ("notes", "; ".join(report.notes) or "none")], convention)
    out.artifacts_written += [str(fc_path), str(coef_path), str(report_path)]
    out.summary = (f"{method} fit on {len(fit[0])} samples: fit RMSE {report.residual_rms:.4g} "
                   f"m/s^2, validation forecast RMSE {val_rmse:.4g} m")
    return out


def cmd_fit_indirect(args) -> CommandOutcome:
    return _fit_response(args, "indirect")


def cmd_fit_potential(args) -> CommandOutcome:
    return _fit_response(args, "potential")


def cmd_simulate(args) -> CommandOutcome:
    cfg = _load_config(args)
    nl = _nonlinearity(args)
    osc = _oscillator(cfg, nl, _forcing(cfg, need_frequency=True))
    it = cfg.integration
    xs, vs, acc = integrate(osc, it.x0, it.v0, it.dt, it.t_end)
    dataio.write_timeseries_csv(args.out, [xs, vs, acc])
    out = CommandOutcome(0, [args.out], f"simulated {len(xs)} samples to t={it.t_end:g} s")
    if args.reference:
        ref = _channel(dataio.read_timeseries_csv(args.reference), "x", args.reference)
        step = ref.dt / xs.dt
        k = int(round(step))
        if k < 1 or abs(step - k) > 1e-9 * step or abs(ref.t0 - xs.t0) > 1e-9 * xs.dt:
            raise InvalidArgumentError("reference grid must start at t=0 with a step that is a "
                                       "whole multiple of integration.dt")
        sim = xs.values[::k]
        n = min(len(ref), sim.size)
        err = float(np.sqrt(np.mean((sim[:n] - ref.values[:n]) ** 2)))
        report_path = _companion(args.out, ".report.txt")
        _write_report(report_path, "simulation vs reference",
                      [("reference", args.reference), ("samples_compared", n), ("rmse_m", err)],
                      SIGN_CONVENTION)
        out.artifacts_written.append(str(report_path))
        out.summary += f"; RMSE vs reference {err:.4g} m over {n} samples"
    return out


def cmd_sweep(args) -> CommandOutcome:
    cfg = _load_config(args)
    nl = _nonlinearity(args)
    forcing = _forcing(cfg, need_frequency=False)
    if forcing is None:
        raise ConfigError("forcing.kind: a sweep needs harmonic or base forcing")
    osc = _oscillator(cfg, nl, forcing)
    sw, it = cfg.sweep, cfg.integration
    result = frequency_sweep(osc, sw.f_lo, sw.f_hi, sw.n_points, sw.direction,
                             it.transient_cycles, it.measure_cycles, it.steps_per_cycle,
                             it.x0, it.v0)
    dataio.write_sweep_csv(args.out, result)
    n_valid = int(result.valid.sum())
    summary = f"{sw.direction} sweep: {n_valid}/{sw.n_points} valid points"
    if n_valid:
        f_pk, a_pk = result.peak()
        summary += f", peak {a_pk:.4g} m at {f_pk:.4g} Hz (f/f_n {f_pk / result.f_n:.4g})"
    for f in result.frequencies[~result.valid]:
        log.warning("diverged at %.6g Hz", f)
    return CommandOutcome(0 if n_valid else 2, [args.out], summary)


def cmd_backbone(args) -> CommandOutcome:
    x = _channel(dataio.read_timeseries_csv(args.input), args.channel, args.input)
    curve = backbone_from_free_response(x)
    dataio.write_backbone_csv(args.out, curve)
    return CommandOutcome(0, [args.out], f"backbone with {curve.amplitudes.size} points, "
                          f"amplitude {curve.amplitudes.min():.4g}..{curve.amplitudes.max():.4g}")


def cmd_spectrum(args) -> CommandOutcome:
    x = _channel(dataio.read_timeseries_csv(args.input), args.channel, args.input)
    if args.skip:
        k = int(round(args.skip / x.dt))
        if k >= len(x) - 1:
            raise InvalidArgumentError("--skip leaves fewer than 2 samples")
        x = x.slice(k, len(x))
    if args.fe is not None and not args.fe > 0:
        raise UsageError("--fe must be positive")
    spec = fft_spectrum(x, args.window, pad=not args.no_pad)
    dataio.write_spectrum_csv(args.out, spec, args.fe, args.scale)
    summary = f"spectrum of {len(x)} samples, df={spec.df:.4g} Hz"
    if args.fe:
        hw = 1.5 * spec.df
        m1, m2 = spec.peak_near(args.fe, hw), spec.peak_near(2 * args.fe, hw)
        summary += f"; M(f_e)={m1:.4g}, M(2f_e)={m2:.4g}"
    return CommandOutcome(0, [args.out], summary)


# --------------------------------------------------------------------------- parser

class _Formatter(argparse.RawDescriptionHelpFormatter, argparse.ArgumentDefaultsHelpFormatter):
    pass


def _common(p, with_config=True):
    if with_config:
        p.add_argument("--config", metavar="FILE", help="run configuration (key = value)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key; repeatable")
    p.add_argument("--out", required=True, metavar="FILE", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapspring", formatter_class=_Formatter,
        description="Identify gapped piecewise-linear spring networks and forecast responses.",
        epilog="config keys:\n" + dataio.config_help())
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=_Formatter)
        p.set_defaults(func=fn)
        return p

    p = add("synth", cmd_synth, "write a synthetic benchmark record or force sample file")
    p.add_argument("--kind", required=True,
                   choices=["duffing", "pwl", "softening", "cubic-force", "gap-force"])
    p.add_argument("--x0", type=float, help="initial displacement (m); default per kind")
    p.add_argument("--t-end", type=float, help="record length (s); default per kind")
    p.add_argument("--dt", type=float, help="sample step (s); default per kind")
    p.add_argument("--substeps", type=int, default=10, help="integration steps per sample")
    p.add_argument("--p2", type=float, help="nonlinear stiffness (N/m^3 or N/m); default 10")
    p.add_argument("--L", type=float, default=0.5, help="gap spring clearance (m)")
    p.add_argument("--n", type=int, default=2001, help="number of force samples")
    p.add_argument("--range", type=float, nargs=2, default=(-5.0, 5.0), metavar=("LO", "HI"),
                   help="force sample range (m)")
    p.add_argument("--noise", type=float, default=0.0,
                   help="white displacement noise, std as a fraction of the record RMS")
    p.add_argument("--seed", type=int, default=0, help="noise generator seed")
    _common(p)

    p = add("fit-direct", cmd_fit_direct, "fit hinge springs to sampled force values")
    p.add_argument("--input", required=True, metavar="CSV", help="columns x (m), f (N)")
    _common(p)

    for name, fn, what in (("fit-indirect", cmd_fit_indirect, "hinge springs"),
                           ("fit-potential", cmd_fit_potential, "a potential-constrained model")):
        p = add(name, fn, f"fit {what} to a measured response and forecast the held-out tail")
        p.add_argument("--input", required=True, metavar="CSV",
                       help="columns t (s), x (m) and optionally v (m/s), a (m/s^2)")
        p.add_argument("--scan-fit-fraction", type=float, nargs=3, metavar=("LO", "HI", "N"),
                       help="write fit/validation RMSE versus fit fraction to --out instead")
        _common(p)

    for name, fn, help_ in (("simulate", cmd_simulate, "integrate a model from config initial conditions"),
                            ("sweep", cmd_sweep, "steady-state frequency sweep")):
        p = add(name, fn, help_)
        p.add_argument("--model", metavar="FILE", help="model file from a fit command")
        p.add_argument("--exact", metavar="SPEC",
                       help="built-in spring: cubic:p2=<N/m^3>, gap:p2=<N/m>,L=<m> or linear")
        if name == "simulate":
            p.add_argument("--reference", metavar="CSV",
                           help="trajectory (t, x in m) to compare against; writes an RMSE report")
        _common(p)

    p = add("backbone", cmd_backbone, "backbone curve of a free-decay record")
    p.add_argument("--input", required=True, metavar="CSV", help="time series file")
    p.add_argument("--channel", default="x", help="channel to analyse (m)")
    _common(p, with_config=False)

    p = add("spectrum", cmd_spectrum, "single-sided amplitude spectrum of a record")
    p.add_argument("--input", required=True, metavar="CSV", help="time series file")
    p.add_argument("--channel", default="x", help="channel to analyse (m)")
    p.add_argument("--fe", type=float, help="excitation frequency (Hz) for the f/f_e column")
    p.add_argument("--scale", type=float, help="normalizing displacement, e.g. X_st (m)")
    p.add_argument("--skip", type=float, default=0.0, help="leading transient to drop (s)")
    p.add_argument("--window", choices=["none", "hann"], default="none", help="taper")
    p.add_argument("--no-pad", action="store_true", help="no zero padding to a power of two")
    _common(p, with_config=False)
    return parser


def run(argv=None) -> CommandOutcome:
    """Parse ``argv`` and run one command, mapping errors onto exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors count as user errors; --help exits cleanly
        return CommandOutcome(1 if exc.code else 0, [], "")
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        outcome = args.func(args)
    except (ConfigError, FormatError, InvalidArgumentError, UsageError, OSError) as exc:
        log.error("%s", exc)
        return CommandOutcome(1, [], str(exc))
    except (DivergenceError, NoRootError) as exc:
        log.error("numerical failure: %s", exc)
        return CommandOutcome(2, [], str(exc))
    for path in outcome.artifacts_written:
        log.info("wrote %s", path)
    (log.info if outcome.exit_code == 0 else log.error)("%s", outcome.summary)
    return outcome


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
