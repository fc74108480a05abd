import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dualmuscle.muscle import MuscleParams, activation_from
from dualmuscle.observers import (
    AsmoParams, AsmoState, GainInequalityError, HgoParams, HgoState, ParameterCollapseError,
    SmoParams, SmoState, asmo_derivatives, asmo_signals, hgo_derivatives, initial_state,
    recover_activation, sign_approx, smo_derivatives,
)
from dualmuscle.plant import PlantState, VirtualInput, derivatives, measure
from dualmuscle.simkit import ScenarioConfig, run_scenario

P = MuscleParams()
X = PlantState(2.6315, 0.003, 2.022, 2.019)
U = VirtualInput(0.02, -0.01)
DELTA = 0.007


@given(st.floats(-10, 10), st.floats(1e-6, 1.0))
def test_sign_approx_bounded_and_odd(e, w):
    s = sign_approx(e, w)
    assert abs(s) < 1
    assert sign_approx(-e, w) == -s
    assert s * e >= 0


def test_sign_approx_tends_to_sign():
    assert sign_approx(0.1, 1e-9) == pytest.approx(1.0, abs=1e-7)
    assert sign_approx(0.0, 0.01) == 0.0


def test_hgo_exact_estimate_is_invariant():
    # with state, uncertainty and inputs all correct the estimate follows the plant
    y = measure(X, P)
    s = HgoState(X.x1, X.x2, X.x3, X.x4, DELTA, U.u1, U.u2)
    d = hgo_derivatives(s, y, HgoParams(), P)
    truth = derivatives(X, U, DELTA, P)
    np.testing.assert_allclose(d[:4], truth, atol=1e-8)
    np.testing.assert_allclose(d[4:], 0.0, atol=1e-5)


def test_smo_matched_estimate_follows_plant_model():
    y = measure(X, P)
    s = SmoState(X.x1, X.x2, X.x3, X.x4, 0.0, 0.0, 0.0)
    d = smo_derivatives(s, y, SmoParams(), P)
    truth = derivatives(X, U, DELTA, P)
    assert d[0] == pytest.approx(X.x2)
    assert d[1] == pytest.approx(truth[1] - DELTA)  # the uncertainty is what the injection must supply
    assert d[2] == pytest.approx(X.x2, abs=1e-6)
    assert d[3] == pytest.approx(-X.x2, abs=1e-6)


def test_hgo_validation():
    HgoParams().validate()
    with pytest.raises(GainInequalityError):
        HgoParams(eps_h=1.5).validate()
    with pytest.raises(GainInequalityError, match="Hurwitz"):
        HgoParams(h12=-1.0).validate()


def test_smo_bound_value():
    # sqrt(2 / 0.1) * (2.1 * 1.5 / 0.5) = 28.17
    assert SmoParams().lambda11_bound() == pytest.approx(math.sqrt(20) * 2.1 * 3, abs=1e-12)
    assert SmoParams().lambda11_bound() == pytest.approx(28.17, abs=0.01)
    SmoParams().validate(0.9, 0.9)


@pytest.mark.parametrize("kw, bounds, msg", [
    ({"alpha11": 0.9}, (0.9, 0.9), "alpha11 > f_plus"),
    ({"lambda11": 20.0}, (0.9, 0.9), "lambda11 >"),
    ({}, (1.2, 0.9), "alpha2 > U1m"),
    ({}, (0.9, 1.0), "alpha3 > U2m"),
    ({"tau_s": 0.0}, (0.9, 0.9), "tau_s"),
])
def test_smo_inequalities_named(kw, bounds, msg):
    with pytest.raises(GainInequalityError, match=msg):
        SmoParams(**kw).validate(*bounds)


def test_asmo_validation():
    p = AsmoParams()
    assert p.alpha0_design() == pytest.approx(2.97, abs=0.01)
    p.validate()
    with pytest.raises(GainInequalityError, match="1/beta0"):
        dataclasses.replace(p, a=0.95).validate()
    with pytest.raises(GainInequalityError, match="alpha_a1"):
        dataclasses.replace(p, alpha_a1=1.0).validate()
    with pytest.raises(GainInequalityError, match="positive"):
        dataclasses.replace(p, gamma_a0=0.0).validate()


def test_asmo_collapse_raises():
    y = measure(X, P)
    p = AsmoParams()
    s = AsmoState(X.x1, X.x2, X.x3, X.x4, 0, 0, 0, -p.l0, 0, 0, 0, 0, 0)
    assert asmo_signals(s, p).L_a == 0
    with pytest.raises(ParameterCollapseError):
        asmo_derivatives(s, y, p, P)


def test_asmo_gain_shrinks_when_oversized():
    # L_a well above what the injection needs: layer one drives it down
    y = measure(X, P)
    s = AsmoState(X.x1, X.x2, X.x3, X.x4, 0, 0, 0, 2.0, 0, 0, 0, 0, 0)
    d = asmo_derivatives(s, y, AsmoParams(), P)
    assert d.l_a < 0
    assert d.r_a0 > 0


def test_initial_state_from_measurement():
    y = measure(X, P)
    s = initial_state("smo", y, P)
    assert s == pytest.approx((X.x1, 0, X.x3, X.x4, 0, 0, 0), abs=1e-9)
    assert len(initial_state("asmo", y, P)) == 13


def test_recover_activation_matches_truth_and_flags():
    a_true = [activation_from(u, ls, lc, P)[0]
              for u, ls, lc in ((U.u1, X.x3, X.x1 - X.x3), (U.u2, X.x4, P.C - X.x1 - X.x4))]
    est = recover_activation(X.as_array(), (U.u1, U.u2), P)
    assert est.raw == pytest.approx(a_true)
    assert est.singular == (False, False)
    bad = recover_activation(X.as_array(), (1.0, U.u2), P)
    assert bad.singular == (True, False) and math.isnan(bad.raw[0])


def test_smo_sliding_is_invariant_once_reached():
    # a near-discontinuous injection needs a small step: at h = 1e-4 the
    # position error, once below 1e-6, stays there
    cfg = ScenarioConfig(duration=3.0, step=1e-4, observers=("smo",), smo=SmoParams(delta_s=1e-6))
    log = run_scenario(cfg)
    err = np.abs(log["smo_xhat1"] - log["x1"])
    hit = np.nonzero((log.tau > 1.0) & (err < 1e-6))[0]
    assert len(hit)
    assert err[hit[0]:].max() < 1e-6
