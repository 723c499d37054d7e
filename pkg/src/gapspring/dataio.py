"""Plain-text persistence: time series, sweeps, backbones, spectra, models and run configs.

Floats are written with 17 significant digits so that every value reads back
bit-for-bit.  Readers reject malformed input instead of repairing it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any

import numpy as np

from .basis import KINDS, BasisSpec
from .dynamics import DIRECTIONS, SweepResult
from .errors import ConfigError, FormatError
from .regress import FitReport, ForceModel, PotentialForceModel
from .sigproc import BackboneCurve, Spectrum
from .timeseries import TimeSeries

MODEL_FORMAT = "gapspring-model"
MODEL_VERSION = 1


def fmt(value) -> str:
    """17-significant-digit decimal form of ``value``."""
    return format(float(value), ".17g")


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read_lines(path):
    try:
        with open(path) as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _parse_float(text, where):
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"{where}: {text!r} is not a number") from None


# --------------------------------------------------------------------------- CSV core

def _split_comments(lines):
    """Return ``(meta, header_line_no, header, rows)`` from a commented CSV."""
    meta = {}
    header = None
    rows = []
    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta[key.strip()] = val.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = (no, cells)
        else:
            rows.append((no, cells))
    if header is None:
        raise FormatError("no header row")
    return meta, header[0], header[1], rows


def read_columns_csv(path, allow_nan=False) -> dict[str, np.ndarray]:
    """Read a headed numeric CSV into ``{column name: values}``."""
    meta, _, names, rows = _split_comments(_read_lines(path))
    if len(set(names)) != len(names) or any(not n for n in names):
        raise FormatError(f"{path}: header has empty or repeated column names")
    if not rows:
        raise FormatError(f"{path}: no data rows")
    data = np.empty((len(rows), len(names)))
    for i, (no, cells) in enumerate(rows):
        if len(cells) != len(names):
            raise FormatError(f"{path}: line {no} has {len(cells)} cells, expected {len(names)}")
        for j, c in enumerate(cells):
            v = _parse_float(c, f"{path}: line {no}")
            if not allow_nan and not math.isfinite(v):
                raise FormatError(f"{path}: line {no} column {names[j]!r} is not finite")
            data[i, j] = v
    return {n: data[:, j] for j, n in enumerate(names)}


def write_columns_csv(path, columns: dict[str, Any], meta: dict[str, str] | None = None):
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lines = [f"# {k}: {v}" for k, v in (meta or {}).items()]
    lines.append(",".join(names))
    for i in range(len(cols[0]) if cols else 0):
        lines.append(",".join(c[i] if c.dtype.kind in "UO" else fmt(c[i]) for c in cols))
    _write_lines(path, lines)


# --------------------------------------------------------------------------- time series

def write_timeseries_csv(path, series):
    """Write one or more series sharing a grid as ``t,<label>,...``."""
    if isinstance(series, TimeSeries):
        series = [series]
    first = series[0]
    for s in series[1:]:
        if not s.same_grid(first):
            raise ValueError("all series written to one file must share a grid")
    units = ",".join(["t=s"] + [f"{s.label}={s.units}" for s in series])
    cols = {"t": first.times}
    for s in series:
        cols[s.label] = s.values
    write_columns_csv(path, cols, {"units": units, "t0": fmt(first.t0), "dt": fmt(first.dt)})


def read_timeseries_csv(path) -> list[TimeSeries]:
    """Read ``t,<channel>...``; the time column must be strictly increasing and uniform."""
    lines = _read_lines(path)
    meta, hdr_no, names, rows = _split_comments(lines)
    if not names or names[0] != "t" or len(names) < 2:
        raise FormatError(f"{path}: header must be 't,<channel>[,<channel>...]'")
    cols = read_columns_csv(path)
    t = cols["t"]
    row_no = [no for no, _ in rows]
    steps = np.diff(t)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        raise FormatError(f"{path}: time not strictly increasing at line {row_no[bad[0] + 1]}")
    if "dt" in meta:
        dt = _parse_float(meta["dt"], f"{path}: dt comment")
    elif t.size > 1:
        dt = t[1] - t[0]
    else:
        raise FormatError(f"{path}: a single row needs a '# dt:' comment")
    t0 = _parse_float(meta["t0"], f"{path}: t0 comment") if "t0" in meta else t[0]
    expected = t0 + dt * np.arange(t.size)
    off = np.flatnonzero(np.abs(t - expected) > 1e-9 * max(dt, 1e-300) + 1e-9 * np.abs(t))
    if off.size:
        raise FormatError(f"{path}: non-uniform time grid at line {row_no[off[0]]}")
    units = {}
    for item in meta.get("units", "").split(","):
        if "=" in item:
            k, _, u = item.partition("=")
            units[k.strip()] = u.strip()
    return [TimeSeries(float(t0), float(dt), cols[n], n, units.get(n, "")) for n in names[1:]]


# --------------------------------------------------------------------------- sweeps etc.

SWEEP_COLUMNS = ("f_hz", "f_over_fn", "amplitude", "amp_over_xst", "valid", "direction")
BASE_COLUMNS = ("tip_amplitude", "transmissibility", "phase_deg")


def write_sweep_csv(path, sweep: SweepResult):
    cols = {
        "f_hz": sweep.frequencies,
        "f_over_fn": sweep.f_over_fn,
        "amplitude": sweep.amplitudes,
        "amp_over_xst": sweep.amp_over_xst,
        "valid": sweep.valid.astype(int),
        "direction": np.array([sweep.direction] * len(sweep.frequencies), dtype=object),
    }
    meta = {"f_n_hz": fmt(sweep.f_n), "X_st": fmt(sweep.X_st),
            "transient_cycles": str(sweep.transient_cycles),
            "measure_cycles": str(sweep.measure_cycles)}
    if sweep.tip_amplitudes is not None:
        cols["tip_amplitude"] = sweep.tip_amplitudes
        cols["transmissibility"] = sweep.transmissibility
        cols["phase_deg"] = sweep.phase_deg
        meta["base_amplitude"] = fmt(sweep.base_amplitude)
        meta["note"] = "amplitude is relative to the base; amp_over_xst uses X_st = base amplitude"
    write_columns_csv(path, cols, meta)


def read_sweep_csv(path) -> SweepResult:
    lines = _read_lines(path)
    meta, _, names, rows = _split_comments(lines)
    if tuple(names[:6]) != SWEEP_COLUMNS:
        raise FormatError(f"{path}: sweep header must start with {','.join(SWEEP_COLUMNS)}")
    directions = {r[1][5] for r in rows}
    if len(directions) != 1 or not directions <= set(DIRECTIONS):
        raise FormatError(f"{path}: direction column must hold one of {DIRECTIONS}")
    numeric = [[c for j, c in enumerate(cells) if j != 5] for _, cells in rows]
    data = np.array([[_parse_float(c, path) for c in r] for r in numeric])
    base = "tip_amplitude" in names
    try:
        return SweepResult(
            data[:, 0], data[:, 2], data[:, 4].astype(bool), directions.pop(),
            float(meta["f_n_hz"]), float(meta["X_st"]),
            int(meta["transient_cycles"]), int(meta["measure_cycles"]),
            data[:, 5] if base else None, data[:, 7] if base else None,
            float(meta["base_amplitude"]) if base else None)
    except KeyError as exc:
        raise FormatError(f"{path}: missing '# {exc.args[0]}:' comment") from None


def write_backbone_csv(path, curve: BackboneCurve):
    write_columns_csv(path, {"amplitude": curve.amplitudes, "frequency_hz": curve.frequencies},
                      {"source": curve.source or "unknown"})


def read_backbone_csv(path) -> BackboneCurve:
    meta, _, names, _ = _split_comments(_read_lines(path))
    if names != ["amplitude", "frequency_hz"]:
        raise FormatError(f"{path}: backbone header must be amplitude,frequency_hz")
    cols = read_columns_csv(path)
    return BackboneCurve(cols["amplitude"], cols["frequency_hz"], meta.get("source", ""))


def write_spectrum_csv(path, spectrum: Spectrum, f_e: float | None = None,
                       x_scale: float | None = None):
    """Columns ``frequency_hz,magnitude`` plus ``f_over_fe`` / ``magnitude_over_scale`` when given."""
    cols = {"frequency_hz": spectrum.frequencies, "magnitude": spectrum.magnitudes}
    meta = {"normalization": "single-sided amplitude; a bin-centred sinusoid of amplitude A "
                             "reads A (window coherent gain removed)",
            "df_hz": fmt(spectrum.df), "n_samples": str(spectrum.n_samples),
            "window": spectrum.window}
    if f_e:
        cols["f_over_fe"] = spectrum.frequencies / f_e
        meta["f_e_hz"] = fmt(f_e)
    if x_scale:
        cols["magnitude_over_scale"] = spectrum.magnitudes / x_scale
        meta["scale"] = fmt(x_scale)
    write_columns_csv(path, cols, meta)


def read_spectrum_csv(path) -> Spectrum:
    meta, _, names, _ = _split_comments(_read_lines(path))
    if names[:2] != ["frequency_hz", "magnitude"]:
        raise FormatError(f"{path}: spectrum header must start with frequency_hz,magnitude")
    cols = read_columns_csv(path)
    try:
        return Spectrum(cols["frequency_hz"], cols["magnitude"], float(meta["df_hz"]),
                        int(meta["n_samples"]), meta.get("window", "none"))
    except KeyError as exc:
        raise FormatError(f"{path}: missing '# {exc.args[0]}:' comment") from None


# --------------------------------------------------------------------------- models

def save_model(path, model, report: FitReport | None = None):
    """Write a force or potential model in the self-describing text format."""
    lines = [f"{MODEL_FORMAT} {MODEL_VERSION}"]
    if isinstance(model, PotentialForceModel):
        lines += ["type potential", f"q1 {fmt(model.q1)}", f"q2 {fmt(model.q2)}"]
        terms = [("psi", g, k) for g, k in zip(model.gaps, model.kappa)]
    else:
        lines += ["type force",
                  f"normalized_by_mass {int(bool(model.normalized_by_mass))}"]
        terms = [(s.kind, s.gap, k) for s, k in zip(model.specs, model.kappa)]
    if model.fit_range is not None:
        lines.append(f"fit_range {fmt(model.fit_range[0])} {fmt(model.fit_range[1])}")
    if report is not None:
        lines += [f"residual_rms {fmt(report.residual_rms)}",
                  f"rank_used {report.rank_used}",
                  f"condition_estimate {fmt(report.condition_estimate)}"]
    lines.append(f"terms {len(terms)}")
    for kind, gap, k in terms:
        lines.append(f"{kind} {'-' if gap is None else fmt(gap)} {fmt(k)}")
    lines.append("end")
    _write_lines(path, lines)


def _load_model_lines(path, lines):
    body = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    if not body:
        raise FormatError(f"{path}: empty model file")
    head = body[0].split()
    if len(head) != 2 or head[0] != MODEL_FORMAT:
        raise FormatError(f"{path}: not a {MODEL_FORMAT} file")
    if head[1] != str(MODEL_VERSION):
        raise FormatError(f"{path}: unsupported format version {head[1]} "
                          f"(expected {MODEL_VERSION})")
    header = {}
    i = 1
    while i < len(body) and not body[i].startswith("terms"):
        key, _, val = body[i].partition(" ")
        header[key] = val.strip()
        i += 1
    if i == len(body):
        raise FormatError(f"{path}: truncated file, no 'terms' line")
    try:
        n_terms = int(body[i].split()[1])
    except (IndexError, ValueError):
        raise FormatError(f"{path}: malformed 'terms' line") from None
    term_lines = body[i + 1:i + 1 + n_terms]
    if len(term_lines) != n_terms or len(body) < i + 2 + n_terms or body[i + 1 + n_terms] != "end":
        raise FormatError(f"{path}: truncated file, expected {n_terms} terms and 'end'")
    terms = []
    for ln in term_lines:
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"{path}: malformed term line {ln!r}")
        kind, gap, coef = parts
        if kind not in KINDS:
            raise FormatError(f"{path}: unknown basis kind {kind!r}")
        gap_v = None if gap == "-" else _parse_float(gap, path)
        terms.append((kind, gap_v, _parse_float(coef, path)))
    return header, terms


def load_model(path):
    """Read a model written by :func:`save_model`; returns ``(model, report or None)``."""
    header, terms = _load_model_lines(path, _read_lines(path))
    fit_range = None
    if "fit_range" in header:
        lo, hi = header["fit_range"].split()
        fit_range = (_parse_float(lo, path), _parse_float(hi, path))
    report = None
    if "residual_rms" in header:
        report = FitReport(_parse_float(header["residual_rms"], path),
                           int(header.get("rank_used", 0)),
                           _parse_float(header.get("condition_estimate", "nan"), path))
    kind = header.get("type")
    if kind == "potential":
        if any(t[0] != "psi" for t in terms):
            raise FormatError(f"{path}: potential models hold psi terms only")
        model = PotentialForceModel(_parse_float(header.get("q1", "0"), path),
                                    _parse_float(header.get("q2", "0"), path),
                                    [t[2] for t in terms], [t[1] for t in terms], fit_range)
    elif kind == "force":
        try:
            specs = [BasisSpec(k, g) for k, g, _ in terms]
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        flag = header.get("normalized_by_mass", "0")
        if flag not in ("0", "1"):
            raise FormatError(f"{path}: normalized_by_mass must be 0 or 1")
        model = ForceModel(specs, [t[2] for t in terms], flag == "1", fit_range)
    else:
        raise FormatError(f"{path}: unknown model type {kind!r}")
    return model, report


# --------------------------------------------------------------------------- run config

def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _choice(*options):
    def check(v):
        return v in options
    check.__doc__ = "one of " + "|".join(options)
    return check


_pos.__doc__ = "> 0"
_nonneg.__doc__ = ">= 0"


def _opt(kind, default, check=None, optional=False, doc=""):
    return field(default=default, metadata={"kind": kind, "check": check,
                                            "optional": optional, "doc": doc})


@dataclass(frozen=True)
class GridConfig:
    x_lo: float | None = _opt(float, None, optional=True, doc="hinge range low (default: data min)")
    x_hi: float | None = _opt(float, None, optional=True, doc="hinge range high (default: data max)")
    M: int = _opt(int, 8, _nonneg, doc="number of min-hinge gaps")
    N: int = _opt(int, 8, _nonneg, doc="number of max-hinge gaps")
    psi_count: int = _opt(int, 32, _pos, doc="number of psi gaps")
    psi_max: float | None = _opt(float, None, _pos, optional=True,
                                 doc="largest psi gap (default: max |x| of fit data)")
    include_linear: bool = _opt(bool, True, doc="include the linear column in potential fits")


@dataclass(frozen=True)
class FitConfig:
    rtol: float = _opt(float, 1e-10, _pos, doc="singular value cutoff relative to the largest")
    threshold: float = _opt(float, 0.0, _nonneg, doc="post-fit hard threshold (fraction of max|kappa|)")


@dataclass(frozen=True)
class OscillatorConfig:
    m: float = _opt(float, 1.0, _pos, doc="mass (kg)")
    c: float = _opt(float, 0.1, _nonneg, doc="damping (N s/m)")
    k: float = _opt(float, 1.0, _pos, doc="linear stiffness (N/m)")
    zeta: float | None = _opt(float, None, _nonneg, optional=True,
                              doc="damping ratio; with omega_n overrides c and k")
    omega_n: float | None = _opt(float, None, _pos, optional=True, doc="natural frequency (rad/s)")


@dataclass(frozen=True)
class ForcingConfig:
    kind: str = _opt(str, "none", _choice("none", "harmonic", "base"), doc="forcing type")
    amplitude: float = _opt(float, 0.0, _nonneg, doc="force F (N) or base amplitude X_b (m)")
    f_e: float | None = _opt(float, None, _pos, optional=True, doc="excitation frequency (Hz)")


@dataclass(frozen=True)
class IntegrationConfig:
    dt: float = _opt(float, 1e-3, _pos, doc="time step (s)")
    t_end: float = _opt(float, 30.0, _pos, doc="duration (s)")
    x0: float = _opt(float, 0.0, doc="initial displacement (m)")
    v0: float = _opt(float, 0.0, doc="initial velocity (m/s)")
    steps_per_cycle: int = _opt(int, 1000, lambda v: v >= 4, doc="RK4 steps per forcing period")
    transient_cycles: int = _opt(int, 180, _nonneg, doc="discarded forcing periods")
    measure_cycles: int = _opt(int, 20, _pos, doc="measured forcing periods")


@dataclass(frozen=True)
class SweepConfig:
    f_lo: float = _opt(float, 0.005, _pos, doc="lowest frequency (Hz)")
    f_hi: float = _opt(float, 0.5, _pos, doc="highest frequency (Hz)")
    n_points: int = _opt(int, 100, lambda v: v >= 2, doc="number of frequencies")
    direction: str = _opt(str, "cold-start", _choice(*DIRECTIONS), doc="sweep direction")


@dataclass(frozen=True)
class PreprocessConfig:
    cutoff_hz: float | None = _opt(float, None, _pos, optional=True,
                                   doc="low-pass cutoff before differentiation (Hz)")
    edge_trim: int = _opt(int, 20, _nonneg, doc="samples dropped at both record ends")
    fit_fraction: float = _opt(float, 0.6, lambda v: 0 < v < 1, doc="fit prefix fraction")


SECTIONS = {"grid": GridConfig, "fit": FitConfig, "oscillator": OscillatorConfig,
            "forcing": ForcingConfig, "integration": IntegrationConfig,
            "sweep": SweepConfig, "preprocess": PreprocessConfig}
METHODS = ("direct", "indirect", "potential")


@dataclass(frozen=True)
class RunConfig:
    method: str = "direct"
    grid: GridConfig = field(default_factory=GridConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    oscillator: OscillatorConfig = field(default_factory=OscillatorConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)

    def modal(self):
        """``(m, c, k)`` honoring ``zeta``/``omega_n`` when both are given."""
        o = self.oscillator
        if o.zeta is not None:
            return o.m, 2.0 * o.zeta * o.omega_n * o.m, o.m * o.omega_n ** 2
        return o.m, o.c, o.k

    def zeta_omega(self):
        m, c, k = self.modal()
        return c / (2.0 * math.sqrt(m * k)), math.sqrt(k / m)


def _convert(key, text, kind):
    if kind is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {text!r}")
    if kind is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if kind is float:
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}") from None
        if not math.isfinite(v):
            raise ConfigError(f"{key}: must be finite")
        return v
    return text


def config_from_mapping(values: dict[str, str]) -> RunConfig:
    """Validate ``{dotted key: text}`` into a :class:`RunConfig`."""
    sections = {name: {} for name in SECTIONS}
    method = "direct"
    for key, text in values.items():
        if key == "method":
            if text not in METHODS:
                raise ConfigError(f"method: must be one of {'|'.join(METHODS)}, got {text!r}")
            method = text
            continue
        sec, _, name = key.partition(".")
        if sec not in SECTIONS:
            raise ConfigError(f"unknown key {key!r}")
        flds = {f.name: f for f in fields(SECTIONS[sec])}
        if name not in flds:
            raise ConfigError(f"unknown key {key!r}")
        meta = flds[name].metadata
        if meta["optional"] and text.lower() == "none":
            sections[sec][name] = None
            continue
        v = _convert(key, text, meta["kind"])
        check = meta["check"]
        if check is not None and not check(v):
            raise ConfigError(f"{key}: {v!r} violates constraint {check.__doc__ or ''}".rstrip())
        sections[sec][name] = v
    cfg = RunConfig(method, **{s: SECTIONS[s](**kv) for s, kv in sections.items()})
    _cross_check(cfg)
    return cfg


def _cross_check(cfg: RunConfig):
    o = cfg.oscillator
    if (o.zeta is None) != (o.omega_n is None):
        raise ConfigError("oscillator.zeta and oscillator.omega_n must be given together")
    g = cfg.grid
    if g.x_lo is not None and g.x_hi is not None and not g.x_lo < g.x_hi:
        raise ConfigError("grid.x_lo must be < grid.x_hi")
    if cfg.method == "direct" and g.M + g.N < 1:
        raise ConfigError("grid.M + grid.N must be >= 1")
    if not cfg.sweep.f_lo < cfg.sweep.f_hi:
        raise ConfigError("sweep.f_lo must be < sweep.f_hi")


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {no}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise ConfigError(f"{source}: line {no}: duplicate key {key!r}")
        values[key] = val
    return config_from_mapping(values)


def read_config(path) -> RunConfig:
    return parse_config_text("\n".join(_read_lines(path)), str(path))


def _dump_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Normalized ``key = value`` listing with every default filled in."""
    lines = [f"method = {cfg.method}"]
    for sec in SECTIONS:
        obj = getattr(cfg, sec)
        for f in fields(obj):
            lines.append(f"{sec}.{f.name} = {_dump_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def config_help() -> str:
    """One line per key with default and constraint, for ``--help`` epilogs."""
    out = ["method: direct|indirect|potential (default direct)"]
    for sec, cls in SECTIONS.items():
        for f in fields(cls):
            doc = f.metadata["doc"]
            out.append(f"{sec}.{f.name}: {doc} (default {_dump_value(f.default)})")
    return "\n".join(out)
