import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from hypercbo.dynamics import SimConfig
from hypercbo.errors import (
    InsufficientRepeats, OracleLimitExceeded, ParseError, ReferencePathMissing, UnequalSupport, ValidationError,
)
from hypercbo.manifold import Sphere
from hypercbo.meanfield import (
    consensus_lln_rate, coupled_meanfield_rate, coupled_pair, coordinate, empirical_measure_convergence, fit_rate,
    parse_test_function, reference_path, wasserstein1_exact,
)
from hypercbo.objective import make_ackley


def sphere_cfg(**kw):
    return SimConfig(Sphere(1.0, 3), make_ackley([0.0, 0.0, 1.0]), **kw)


# -- exact W1 oracle ---------------------------------------------------------

def test_w1_examples():
    a = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert wasserstein1_exact(a, a) == 0.0
    assert wasserstein1_exact(a, a[::-1]) == 0.0
    assert wasserstein1_exact([[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]]) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_w1_matches_assignment_solver():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.integers(1, 7)
        a, b = rng.standard_normal((m, 3)), rng.standard_normal((m, 3))
        cost = np.linalg.norm(a[:, None] - b[None], axis=-1)
        r, c = linear_sum_assignment(cost)
        assert wasserstein1_exact(a, b) == pytest.approx(cost[r, c].sum() / m, abs=1e-13)


points3 = st.lists(st.lists(st.floats(-5, 5), min_size=2, max_size=2), min_size=3, max_size=3).map(np.array)


@settings(max_examples=100, deadline=None)
@given(a=points3, b=points3, c=points3)
def test_w1_is_a_metric(a, b, c):
    ab = wasserstein1_exact(a, b)
    assert ab >= 0
    assert ab == pytest.approx(wasserstein1_exact(b, a), abs=1e-12)
    assert ab <= wasserstein1_exact(a, c) + wasserstein1_exact(c, b) + 1e-12


def test_w1_guards():
    with pytest.raises(UnequalSupport):
        wasserstein1_exact(np.zeros((2, 3)), np.zeros((3, 3)))
    with pytest.raises(OracleLimitExceeded):
        wasserstein1_exact(np.zeros((9, 3)), np.zeros((9, 3)))


# -- rate fitting -------------------------------------------------------------

def test_fit_rate_recovers_exact_power_law():
    n = [10, 100, 1000]
    est = fit_rate(n, [3.0 / x for x in n], 50)
    assert est.slope == pytest.approx(-1.0, abs=1e-12)
    assert est.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert est.half_width == pytest.approx(0.0, abs=1e-9)


def test_fit_rate_with_zero_error_has_no_slope():
    assert math.isnan(fit_rate([10, 20], [0.0, 0.0], 10).slope)
    with pytest.raises(ValidationError):
        fit_rate([20, 10], [1.0, 2.0], 10)


# -- consensus-point law of large numbers ------------------------------------

def test_lln_rate_in_flat_weight_limit():
    # tiny alpha: the consensus point is a plain sample mean, variance ~ 1/N
    s = Sphere(1.0, 3)
    est = consensus_lln_rate(s, make_ackley([0.0, 0.0, 1.0]), 1e-6, [16, 64, 256], 200, 100_000, seed=1)
    assert est.slope == pytest.approx(-1.0, abs=0.15)
    # for uniform samples on S^2 the exact constant is E|mean|^2 = 1/N
    np.testing.assert_allclose(np.array(est.mse_values) * np.array(est.n_values), 1.0, rtol=0.25)


def test_lln_rate_stable_under_more_repeats():
    s = Sphere(1.0, 3)
    obj = make_ackley([0.0, 0.0, 1.0])
    a = consensus_lln_rate(s, obj, 50.0, [16, 64, 256], 100, 200_000, seed=2)
    b = consensus_lln_rate(s, obj, 50.0, [16, 64, 256], 200, 200_000, seed=2)
    assert abs(a.slope - b.slope) < 0.1


def test_lln_needs_repeats():
    with pytest.raises(InsufficientRepeats):
        consensus_lln_rate(Sphere(), make_ackley([0.0, 0.0, 1.0]), 50.0, [16, 64], 5, 1000)


# -- coupled and weak rates ---------------------------------------------------

def test_coupled_pair_identical_when_n_equals_reference(backend):
    cfg = sphere_cfg(seed=0)
    path, ref_pos = reference_path(cfg, 64, 10, seed=7)
    a, b = coupled_pair(cfg, 64, path, 7, 10)
    assert np.array_equal(a, b)
    assert np.array_equal(a, ref_pos)


def test_coupled_error_zero_without_motion(backend):
    cfg = sphere_cfg(sigma=0.0, lam=1e-300, t_max=1.0)
    est = coupled_meanfield_rate(cfg, [8, 16], 256, t_check=0.5, n_repeats=10)
    assert est.mse_values == [0.0, 0.0]


def test_coupled_rate_is_first_order():
    est = coupled_meanfield_rate(sphere_cfg(), [16, 64, 256], 50_000, t_check=1.0, n_repeats=100, seed=3)
    assert -1.4 <= est.slope <= -0.6


def test_reference_path_too_short():
    cfg = sphere_cfg()
    path, _ = reference_path(cfg, 32, 5, seed=0)
    with pytest.raises(ReferencePathMissing):
        coupled_pair(cfg, 8, path, 1, 10)


def test_t_check_validation():
    with pytest.raises(ValidationError):
        coupled_meanfield_rate(sphere_cfg(), [8, 16], 64, t_check=0.07, n_repeats=10)
    with pytest.raises(ValidationError):
        coupled_meanfield_rate(sphere_cfg(), [8, 16], 64, t_check=6.0, n_repeats=10)
    with pytest.raises(InsufficientRepeats):
        coupled_meanfield_rate(sphere_cfg(), [8, 16], 64, n_repeats=3)


def test_weak_error_of_constant_is_zero():
    est = empirical_measure_convergence(sphere_cfg(), parse_test_function("const"), [8, 16], 256, 0.5, 10)
    assert est.mse_values == [0.0, 0.0]


def test_weak_error_scales_quadratically_in_test_function():
    cfg = sphere_cfg()
    phi = coordinate(2)
    a = empirical_measure_convergence(cfg, phi, [8, 16], 512, 0.5, 10, seed=4)
    b = empirical_measure_convergence(cfg, lambda v: 2.0 * phi(v), [8, 16], 512, 0.5, 10, seed=4)
    np.testing.assert_allclose(b.mse_values, 4.0 * np.array(a.mse_values), rtol=1e-12)


def test_parse_test_function():
    v = np.array([[1.0, 2.0, 3.0]])
    assert parse_test_function("coord:1")(v)[0] == 2.0
    assert parse_test_function("coordsq:2")(v)[0] == 9.0
    assert parse_test_function("const")(v)[0] == 1.0
    for bad in ("coord:x", "sin:1"):
        with pytest.raises(ParseError):
            parse_test_function(bad)
