import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapspring.basis import (CONST_SPEC, LINEAR_SPEC, BasisSpec, GapGrid, build_library,
                             eval_max_hinge, eval_min_hinge, eval_phi, eval_psi, max_hinge,
                             min_hinge, psi, uniform_gap_grid, uniform_points)
from gapspring.errors import InvalidArgumentError

finite = st.floats(-1e6, 1e6, allow_nan=False)


# brute-force oracles written from the definitions, one scalar at a time
def oracle_min(x, g):
    d = x - g
    return d if d < 0 else 0.0


def oracle_max(x, g):
    d = x - g
    return d if d > 0 else 0.0


def oracle_psi(x, g):
    return x + oracle_min(x, -g) + oracle_max(x, g)


def oracle_phi(x, g):
    return 0.5 * x * x + 0.5 * oracle_min(x, -g) ** 2 + 0.5 * oracle_max(x, g) ** 2


@pytest.mark.parametrize("x, g, expected", [(0.5, 0.5, 0.0), (-1.0, 0.5, -1.5), (2.0, -3.0, 0.0)])
def test_min_hinge_examples(x, g, expected):
    assert eval_min_hinge(x, g) == expected


@pytest.mark.parametrize("x, g, expected", [(1.0, 0.5, 0.5), (0.0, 0.0, 0.0), (-4.0, -5.0, 1.0)])
def test_max_hinge_examples(x, g, expected):
    assert eval_max_hinge(x, g) == expected


@pytest.mark.parametrize("x, g, expected", [(0.003, 0.005, 0.003), (0.01, 0.005, 0.015),
                                            (-0.01, 0.005, -0.015)])
def test_psi_examples(x, g, expected):
    assert eval_psi(x, g) == pytest.approx(expected, rel=1e-12)
    assert eval_psi(x, g) == pytest.approx(oracle_psi(x, g), rel=1e-15)


@pytest.mark.parametrize("x, g, expected", [(0.0, 0.005, 0.0), (0.01, 0.005, 6.25e-5),
                                            (-0.01, 0.005, 6.25e-5)])
def test_phi_examples(x, g, expected):
    assert eval_phi(x, g) == pytest.approx(expected, rel=1e-12, abs=0)


@pytest.mark.parametrize("fn", [eval_min_hinge, eval_max_hinge, eval_psi, eval_phi])
def test_non_finite_rejected(fn):
    with pytest.raises(InvalidArgumentError):
        fn(math.nan, 0.1)
    with pytest.raises(InvalidArgumentError):
        fn(1.0, math.inf)


@pytest.mark.parametrize("fn", [eval_psi, eval_phi])
def test_negative_psi_gap_rejected(fn):
    with pytest.raises(InvalidArgumentError):
        fn(0.0, -0.001)
    with pytest.raises(InvalidArgumentError):
        psi(-1.0)


@given(finite, finite)
def test_reflection_identity_exact(x, g):
    assert eval_min_hinge(x, g) == -eval_max_hinge(-x, -g)
    assert eval_min_hinge(x, 0.0) == -eval_max_hinge(-x, 0.0)


@given(finite, finite)
def test_hinges_match_oracle(x, g):
    assert eval_min_hinge(x, g) == oracle_min(x, g)
    assert eval_max_hinge(x, g) == oracle_max(x, g)


@given(st.floats(-10, 10), st.floats(0, 10))
def test_psi_odd_phi_even_nonneg(x, g):
    assert eval_psi(-x, g) == -eval_psi(x, g)
    assert eval_phi(-x, g) == eval_phi(x, g)
    assert eval_phi(x, g) >= 0
    assert eval_phi(x, g) == pytest.approx(oracle_phi(x, g), rel=1e-14, abs=1e-300)


def test_psi_slopes_by_secants():
    g = 0.4
    for a, b, slope in [(-0.3, 0.3, 1.0), (0.5, 2.0, 2.0), (-3.0, -0.6, 2.0)]:
        assert (eval_psi(b, g) - eval_psi(a, g)) / (b - a) == pytest.approx(slope, rel=1e-12)
    # continuity at the corners
    for c in (-g, g):
        assert abs(eval_psi(c + 1e-12, g) - eval_psi(c - 1e-12, g)) < 1e-11


def test_phi_derivative_is_psi():
    x = np.linspace(-0.03, 0.03, 2001)
    g = 0.005
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    d = (eval_phi(x + h, g) - eval_phi(x - h, g)) / (2 * h)
    ref = eval_psi(x, g)
    assert np.all(np.abs(d - ref) <= 1e-6 * np.maximum(np.abs(ref), 1e-3))


def test_spec_integrals_differentiate_to_spec():
    x = np.linspace(-3, 3, 601)
    h = 1e-6
    for spec in (min_hinge(-0.7), max_hinge(1.2), psi(0.5), CONST_SPEC, LINEAR_SPEC):
        d = (spec.integral(x + h) - spec.integral(x - h)) / (2 * h)
        np.testing.assert_allclose(d, spec(x), atol=1e-6)
        assert spec.integral(0.0) == 0.0


def test_basis_spec_validation():
    with pytest.raises(InvalidArgumentError):
        BasisSpec("tanh", 0.1)
    with pytest.raises(InvalidArgumentError):
        BasisSpec("min")
    with pytest.raises(InvalidArgumentError):
        BasisSpec("const", 0.2)
    assert str(max_hinge(0.5)) == "max(0.5)"


def test_uniform_gap_grid_examples():
    g = uniform_gap_grid(-5, 5, 2, 2)
    assert g.gaps_min == (-5.0, 5.0) and g.gaps_max == (-5.0, 5.0)
    g = uniform_gap_grid(-5, 5, 0, 3)
    assert g.gaps_min == () and g.gaps_max == (-5.0, 0.0, 5.0)
    assert g.M == 0 and g.N == 3
    assert [s.kind for s in uniform_gap_grid(-1, 1, 2, 1).specs()] == ["min", "min", "max"]


def test_psi_gap_points():
    p = uniform_points(-0.02, 0.02, 32)
    assert p.size == 32
    assert p[0] == -0.02 and p[-1] == 0.02
    np.testing.assert_allclose(np.diff(p), 0.04 / 31, rtol=1e-12)


@pytest.mark.parametrize("args", [(1, 1, 2, 2), (2, 1, 2, 2), (-1, 1, 0, 0), (-1, 1, -1, 2),
                                  (math.nan, 1, 2, 2)])
def test_uniform_gap_grid_rejects(args):
    with pytest.raises(InvalidArgumentError):
        uniform_gap_grid(*args)


def test_gap_grid_invariants():
    with pytest.raises(InvalidArgumentError):
        GapGrid((0.0, 0.0), (), -1, 1)
    with pytest.raises(InvalidArgumentError):
        GapGrid((2.0,), (), -1, 1)
    assert uniform_gap_grid(-5, 5, 256, 256).spacing() == pytest.approx(10 / 255)


def test_build_library_examples():
    lib = build_library([0.0], [CONST_SPEC, LINEAR_SPEC, max_hinge(0)])
    assert lib.values.tolist() == [[1.0, 0.0, 0.0]]
    lib = build_library([1.0, -1.0], [min_hinge(0), max_hinge(0)])
    assert lib.values.tolist() == [[0.0, 1.0], [-1.0, 0.0]]


def test_build_library_matches_double_loop():
    samples = np.linspace(-5, 5, 41)
    specs = uniform_gap_grid(-5, 5, 8, 8).specs()
    lib = build_library(samples, specs)
    for i, x in enumerate(samples):
        for j, s in enumerate(specs):
            ref = oracle_min(x, s.gap) if s.kind == "min" else oracle_max(x, s.gap)
            assert lib.values[i, j] == ref
    again = build_library(samples, specs)
    assert again.values.tobytes() == lib.values.tobytes()
    with pytest.raises(ValueError):
        lib.values[0, 0] = 1.0


def test_build_library_rejects_empty():
    with pytest.raises(InvalidArgumentError):
        build_library([], [CONST_SPEC])
    with pytest.raises(InvalidArgumentError):
        build_library([1.0], [])
