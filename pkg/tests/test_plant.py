import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from dualmuscle.muscle import MuscleParams, tendon_force
from dualmuscle.plant import (
    Measurement, PlantDomainError, PlantState, VirtualInput, check_domain, contractile_derivatives,
    contractile_lengths, derivatives, measure, observability_rank,
)
from dualmuscle.simkit import rk4_step

P = MuscleParams()
S = PlantState(2.6315, 0.01, 2.03, 2.02)


def test_derivatives_by_hand():
    u = VirtualInput(0.1, -0.2)
    d = derivatives(S, u, 0.005, P)
    acc = tendon_force(2.02) - tendon_force(2.03) + 0.005
    np.testing.assert_allclose(d, [0.01, acc, 0.11, -0.21], atol=1e-15)


def test_contractile_rates_follow_length_constraint():
    u = VirtualInput(0.3, -0.4)
    d = derivatives(S, u, 0.0, P)
    # L_C1 = x1 - x3 and L_C2 = C - x1 - x4
    rates = (d[0] - d[2], -d[0] - d[3])
    assert rates == pytest.approx(contractile_derivatives(S, u))
    lc1, lc2 = contractile_lengths(S, P)
    assert lc1 + lc2 + S.x3 + S.x4 == pytest.approx(P.C)


def test_domain_guard():
    check_domain(S, P)
    with pytest.raises(PlantDomainError, match="L_C1"):
        check_domain(PlantState(2.05, 0, 2.01, 2.0), P)
    with pytest.raises(PlantDomainError, match="L_C2"):
        check_domain(PlantState(3.5, 0, 2.0, 2.0), P)
    with pytest.raises(PlantDomainError):
        derivatives(PlantState(2.05, 0, 2.01, 2.0), VirtualInput(0, 0), 0, P)


def test_nonpositive_contractile_length_warns():
    with pytest.warns(RuntimeWarning):
        contractile_lengths(PlantState(2.0, 0, 2.1, 2.0), P)


def test_measurement_preimages():
    y = measure(S, P)
    assert y.as_tuple() == (S.x1, tendon_force(S.x3), tendon_force(S.x4))
    assert y.ls1 == pytest.approx(S.x3, abs=1e-9)
    assert y.ls2 == pytest.approx(S.x4, abs=1e-9)
    known = Measurement.with_lengths(*y.as_tuple(), P.tendon, S.x3, S.x4)
    assert known.ls1 == S.x3


def test_observability_full_rank_when_taut():
    u = VirtualInput(0.01, -0.02)
    assert observability_rank(S, u, P) == 4
    for order in ((2, 1, 0), (1, 0, 2)):
        assert observability_rank(S, u, P, order=order) == 4


def test_observability_drops_when_tendon_slack():
    slack = PlantState(2.6315, 0.01, 1.95, 2.02)
    assert observability_rank(slack, VirtualInput(0, 0), P) < 4


def test_observability_warns_at_breakpoint():
    with pytest.warns(RuntimeWarning, match="breakpoint"):
        observability_rank(PlantState(2.6315, 0.0, 2.04, 2.02), VirtualInput(0, 0), P)


def _stored_energy(x):
    F = lambda L: tendon_force(L)
    return 0.5 * P.m * x[1] ** 2 + quad(F, 2.0, x[2], points=[2.04])[0] + quad(F, 2.0, x[3], points=[2.04])[0]


def test_free_oscillation_is_bounded_and_conservative():
    # u = 0, delta = 0: tendons act as springs on the mass and energy is conserved
    zero = VirtualInput(0.0, 0.0)
    field = lambda t, x: derivatives(PlantState(*x), zero, 0.0, P, check=False)
    x = np.array([2.6315, 0.05, 2.02, 2.02])
    E0 = _stored_energy(x)
    peak = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for k in range(30000):
            x = rk4_step(field, x, k * 1e-3, 1e-3)
            peak = max(peak, abs(x[0] - 2.6315))
    assert np.all(np.isfinite(x))
    assert peak < 0.05
    assert _stored_energy(x) == pytest.approx(E0, rel=1e-5)
