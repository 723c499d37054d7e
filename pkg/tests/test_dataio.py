from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from gapspring import dataio
from gapspring.basis import max_hinge, uniform_gap_grid
from gapspring.dynamics import BaseExcitation, Harmonic, OscillatorModel, SweepResult
from gapspring.errors import ConfigError, FormatError
from gapspring.regress import FitReport, ForceModel, PotentialForceModel, fit_direct
from gapspring.sigproc import BackboneCurve, fft_spectrum
from gapspring.timeseries import TimeSeries

DATA = Path(__file__).parent / "data"
tmp_settings = settings(max_examples=40, deadline=None,
                        suppress_health_check=[HealthCheck.function_scoped_fixture])


# --- time series -----------------------------------------------------------------

def test_read_three_rows():
    (x,) = dataio.read_timeseries_csv(DATA / "three_rows.csv")
    assert x.dt == pytest.approx(0.001) and x.values.tolist() == [0.0, 1.0, 0.0]
    assert x.label == "x" and x.units == "m"


def test_read_decreasing_rejected_with_row():
    with pytest.raises(FormatError, match="line 4"):
        dataio.read_timeseries_csv(DATA / "decreasing.csv")


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text, match", [
    ("t,x\n0,1\n0.001,nan\n0.002,3\n", "line 3"),
    ("t,x\n0,1\n0.001,2\n0.0025,3\n", "non-uniform.*line 4"),
    ("x,t\n0,1\n", "header"),
    ("t,x\n0,1\n0.001\n", "line 3"),
    ("t,x\n0,1\n0.001,abc\n", "not a number"),
    ("t,x\n", "no data"),
    ("", "no header"),
])
def test_malformed_timeseries(tmp_path, text, match):
    with pytest.raises(FormatError, match=match):
        dataio.read_timeseries_csv(write(tmp_path, text))


def test_five_second_record_round_trip(tmp_path):
    t = np.arange(5000) * 1e-3
    x = TimeSeries(0.0, 1e-3, 0.01 * np.exp(-0.35 * t) * np.cos(65.2 * t), "x", "m")
    v = x.with_values(np.gradient(x.values, 1e-3), "v", "m/s")
    p = tmp_path / "rec.csv"
    dataio.write_timeseries_csv(p, [x, v])
    x2, v2 = dataio.read_timeseries_csv(p)
    assert len(x2) == 5000 and x2.dt == 1e-3
    assert x2.values.tobytes() == x.values.tobytes()
    assert v2.values.tobytes() == v.values.tobytes() and v2.units == "m/s"
    first = p.read_bytes()
    dataio.write_timeseries_csv(p, [x, v])
    assert p.read_bytes() == first


@tmp_settings
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=50),
       st.floats(1e-6, 10), st.floats(-100, 100))
def test_timeseries_round_trip_bit_exact(tmp_path, values, dt, t0):
    s = TimeSeries(t0, dt, values, "y", "m")
    p = tmp_path / "rt.csv"
    dataio.write_timeseries_csv(p, s)
    (back,) = dataio.read_timeseries_csv(p)
    assert back.values.tobytes() == s.values.tobytes()
    assert back.dt == s.dt and back.t0 == s.t0 and back.label == "y"


def test_timeseries_golden(tmp_path):
    p = tmp_path / "g.csv"
    dataio.write_timeseries_csv(p, TimeSeries(0.0, 0.001, [0.0, 1.0, 0.1], "x", "m"))
    assert p.read_text() == ("# units: t=s,x=m\n# t0: 0\n# dt: 0.001\nt,x\n"
                             "0,0\n0.001,1\n0.002,0.10000000000000001\n")


def test_write_reports_path(tmp_path):
    with pytest.raises(OSError, match="nowhere"):
        dataio.write_timeseries_csv(tmp_path / "nowhere" / "x.csv", TimeSeries(0, 1, [1.0]))


# --- sweeps, backbones, spectra -------------------------------------------------------

def sweep(base=False):
    f = np.array([0.1, 0.2, 0.30000000000000004])
    if base:
        return SweepResult(f, np.array([1e-4, np.nan, 3e-5]), np.array([True, False, True]),
                           "up", 10.4, 2.7e-4, 180, 20, np.array([3e-4, np.nan, 1e-4]),
                           np.array([12.0, np.nan, 178.2]), 2.7e-4)
    return SweepResult(f, np.array([0.4, 0.5, 0.7]), np.array([True, True, True]),
                       "cold-start", 1 / (2 * np.pi), 0.39300273897105131, 180, 20)


@pytest.mark.parametrize("base", [False, True])
def test_sweep_round_trip_and_schema(tmp_path, base):
    p = tmp_path / "s.csv"
    r = sweep(base)
    dataio.write_sweep_csv(p, r)
    header = [ln for ln in p.read_text().splitlines() if not ln.startswith("#")][0]
    expected = "f_hz,f_over_fn,amplitude,amp_over_xst,valid,direction"
    assert header == expected + (",tip_amplitude,transmissibility,phase_deg" if base else "")
    back = dataio.read_sweep_csv(p)
    for name in ("frequencies", "amplitudes", "valid"):
        assert getattr(back, name).tobytes() == getattr(r, name).tobytes()
    assert (back.direction, back.f_n, back.X_st) == (r.direction, r.f_n, r.X_st)
    if base:
        assert back.tip_amplitudes.tobytes() == r.tip_amplitudes.tobytes()
        assert back.phase_deg.tobytes() == r.phase_deg.tobytes()


def test_backbone_round_trip_and_schema(tmp_path):
    p = tmp_path / "b.csv"
    bb = BackboneCurve(np.array([1.5, 1.2, 0.9]), np.array([0.31, 0.27, 0.2]), "x")
    dataio.write_backbone_csv(p, bb)
    assert p.read_text().splitlines()[1] == "amplitude,frequency_hz"
    back = dataio.read_backbone_csv(p)
    assert back.amplitudes.tobytes() == bb.amplitudes.tobytes()
    assert back.frequencies.tobytes() == bb.frequencies.tobytes()


def test_spectrum_round_trip(tmp_path):
    t = np.arange(1000) * 1e-3
    s = fft_spectrum(TimeSeries(0, 1e-3, np.sin(2 * np.pi * 13 * t)), "hann")
    p = tmp_path / "sp.csv"
    dataio.write_spectrum_csv(p, s, f_e=13.0, x_scale=0.5)
    text = p.read_text()
    assert "normalization" in text and "frequency_hz,magnitude,f_over_fe,magnitude_over_scale" in text
    back = dataio.read_spectrum_csv(p)
    assert back.magnitudes.tobytes() == s.magnitudes.tobytes()
    assert back.df == s.df and back.window == "hann" and back.n_samples == 1000


# --- models ------------------------------------------------------------------------

def test_hand_written_model():
    model, report = dataio.load_model(DATA / "one_hinge.model")
    assert model(np.array(1.0)) == 5.0 and report is None


def test_unknown_kind_named():
    with pytest.raises(FormatError, match="tanh"):
        dataio.load_model(DATA / "unknown_kind.model")


def test_round_trip_256_term_model(tmp_path):
    x = np.linspace(-5, 5, 2001)
    model, rep = fit_direct(x, 10 * x ** 3, uniform_gap_grid(-5, 5, 128, 128))
    p = tmp_path / "m.model"
    dataio.save_model(p, model, rep)
    back, rep2 = dataio.load_model(p)
    assert len(back.specs) == 256
    probe = np.linspace(-6, 6, 1201)
    np.testing.assert_allclose(back(probe), model(probe), rtol=1e-15, atol=0)
    assert back.kappa.tobytes() == model.kappa.tobytes()
    assert back.fit_range == model.fit_range and back.normalized_by_mass is False
    assert rep2.residual_rms == rep.residual_rms and rep2.rank_used == rep.rank_used


def test_round_trip_potential_model(tmp_path):
    model = PotentialForceModel(0.125, 2400.0, [-400.0, -399.9, 1e-3], [0.0, 0.004, 0.006],
                                (-0.0099, 0.01))
    p = tmp_path / "p.model"
    dataio.save_model(p, model, FitReport(1.5, 5, 1e3))
    back, _ = dataio.load_model(p)
    assert isinstance(back, PotentialForceModel)
    probe = np.linspace(-0.02, 0.02, 401)
    np.testing.assert_array_equal(back.force(probe), model.force(probe))
    assert back.fit_range == model.fit_range


def test_round_trip_normalized_force_model(tmp_path):
    model = ForceModel([max_hinge(0.1), max_hinge(0.3)], [1.0 / 3.0, -2.0], True)
    p = tmp_path / "n.model"
    dataio.save_model(p, model)
    back, _ = dataio.load_model(p)
    assert back.normalized_by_mass and back.fit_range is None
    assert back.kappa.tobytes() == model.kappa.tobytes()


@pytest.mark.parametrize("text, match", [
    ("gapspring-model 2\ntype force\nterms 0\nend\n", "version"),
    ("something else\n", "not a gapspring-model"),
    ("gapspring-model 1\ntype force\nnormalized_by_mass 0\nterms 2\nmax 0.5 10\n", "truncated"),
    ("gapspring-model 1\ntype force\nnormalized_by_mass 0\n", "truncated"),
    ("gapspring-model 1\ntype spline\nterms 0\nend\n", "unknown model type"),
    ("gapspring-model 1\ntype force\nnormalized_by_mass 0\nterms 1\nmax - 10\nend\n", "gap"),
    ("", "empty"),
])
def test_malformed_models(tmp_path, text, match):
    with pytest.raises(FormatError, match=match):
        dataio.load_model(write(tmp_path, text, "bad.model"))


def test_model_golden(tmp_path):
    p = tmp_path / "g.model"
    dataio.save_model(p, ForceModel([max_hinge(0.5)], [10.0], False, (-5.0, 5.0)))
    assert p.read_text() == ("gapspring-model 1\ntype force\nnormalized_by_mass 0\n"
                             "fit_range -5 5\nterms 1\nmax 0.5 10\nend\n")


# --- config --------------------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = dataio.read_config(DATA / "minimal.cfg")
    assert cfg.method == "direct" and cfg.grid.M == 8 and cfg.grid.N == 8
    assert cfg.integration.steps_per_cycle == 1000 and cfg.fit.rtol == 1e-10
    dump = dataio.dump_config(cfg)
    assert "sweep.direction = cold-start" in dump and "grid.x_lo = none" in dump
    assert dataio.parse_config_text(dump) == cfg


def test_experimental_config():
    cfg = dataio.read_config(DATA / "experimental.cfg")
    assert cfg.oscillator.zeta == 0.0054 and cfg.oscillator.omega_n == 65.2
    zeta, wn = cfg.zeta_omega()
    assert zeta == pytest.approx(0.0054) and wn == pytest.approx(65.2)
    assert cfg.method == "potential" and cfg.preprocess.cutoff_hz == 100


@pytest.mark.parametrize("text, match", [
    ("grid.M = -1", "grid.M"),
    ("grid.M = 2.5", "grid.M.*integer"),
    ("grid.bogus = 1", "unknown key 'grid.bogus'"),
    ("colour = red", "unknown key"),
    ("method = magic", "method"),
    ("integration.dt = 0", "integration.dt.*> 0"),
    ("integration.dt = nan", "finite"),
    ("oscillator.zeta = 0.01", "together"),
    ("sweep.f_lo = 1\nsweep.f_hi = 0.5", "f_lo"),
    ("sweep.direction = sideways", "sweep.direction"),
    ("preprocess.fit_fraction = 1", "fit_fraction"),
    ("grid.include_linear = maybe", "true/false"),
    ("grid.M 8", "key = value"),
    ("grid.M = 8\ngrid.M = 9", "duplicate"),
])
def test_bad_config(text, match):
    with pytest.raises(ConfigError, match=match):
        dataio.parse_config_text(text)


def test_modal_parameters_override_c_and_k():
    cfg = dataio.parse_config_text("oscillator.m = 2\noscillator.zeta = 0.1\noscillator.omega_n = 3")
    m, c, k = cfg.modal()
    assert (m, c, k) == pytest.approx((2.0, 1.2, 18.0))
