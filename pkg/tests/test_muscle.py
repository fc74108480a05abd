import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BPoly

from dualmuscle.muscle import (
    VERBATIM_COEFFS, ActivationSingularError, MuscleDomainError, MuscleParams, TendonCurve,
    activation_from, force_length, hill_velocity, hill_velocity_inverse, parallel_force,
    tendon_force, tendon_force_derivative, tendon_force_inverse, tendon_force_refit,
    tendon_force_second_derivative, tendon_force_verbatim,
)

P = MuscleParams()
REFIT = tendon_force_refit()


def test_refit_matches_independent_hermite_quintic():
    # quintic Hermite interpolant with the same value/slope/curvature data
    herm = BPoly.from_derivatives([2.0, 2.04], [[0.0, 0.0, 0.0], [0.5, 19.2308, 0.0]])
    for L in np.linspace(2.0, 2.04, 81)[:-1]:
        assert tendon_force(L, REFIT) == pytest.approx(float(herm(L)), abs=1e-10)


def test_refit_is_c2_at_both_breakpoints():
    for b in (2.0, 2.04):
        lo, hi = b - 1e-9, b + 1e-9
        assert abs(tendon_force(hi) - tendon_force(lo)) < 1e-6
        assert abs(tendon_force_derivative(hi) - tendon_force_derivative(lo)) < 1e-4
        assert abs(tendon_force_second_derivative(hi) - tendon_force_second_derivative(lo)) < 1e-2


def test_tendon_known_values():
    assert tendon_force(1.9) == 0.0
    assert tendon_force(2.0) == 0.0
    assert tendon_force(2.04) == pytest.approx(0.5, abs=1e-12)
    assert tendon_force(2.1) == pytest.approx(0.5 + 19.2308 * 0.06, abs=1e-12)
    # mid-toe value: the cubic-dominated toe is much softer than the line
    assert tendon_force(2.02) == pytest.approx(0.1298, abs=1e-4)


def test_verbatim_shift_is_exact():
    # evaluate the published polynomial in powers of L with exact rationals
    desc = [Fraction(c) for c in VERBATIM_COEFFS]
    verb = tendon_force_verbatim()
    for L in ("2.005", "2.013", "2.027", "2.039"):
        x = Fraction(L)
        exact = sum(c * x ** (5 - i) for i, c in enumerate(desc))
        assert tendon_force(float(x), verb) == pytest.approx(float(exact), abs=1e-9)


def test_verbatim_differs_from_refit_through_low_order_residue():
    # rounding the large L-basis coefficients leaves c0..c2 != 0; the
    # cubic..quintic coefficients still agree closely with the refit
    v, r = tendon_force_verbatim().quintic_coeffs, REFIT.quintic_coeffs
    assert v[0] == pytest.approx(0.06, abs=5e-3)
    assert v[1] == pytest.approx(0.13, abs=5e-3)
    for k in (3, 4, 5):
        assert v[k] == pytest.approx(r[k], rel=1e-5)


@given(st.floats(1.9, 2.2), st.floats(1e-6, 0.05))
def test_tendon_force_monotone(L, dL):
    assert tendon_force(L + dL) >= tendon_force(L)


@given(st.floats(2.0005, 2.3))
def test_tendon_inverse_round_trip(L):
    assert tendon_force_inverse(tendon_force(L)) == pytest.approx(L, abs=1e-9)


def test_tendon_inverse_edges():
    assert tendon_force_inverse(0.0) == 2.0
    assert tendon_force_inverse(0.5) == pytest.approx(2.04, abs=1e-12)
    with pytest.raises(MuscleDomainError):
        tendon_force_inverse(-1e-3)


def test_tendon_curve_rejects_bad_shape():
    with pytest.raises(MuscleDomainError):
        TendonCurve(slack_end=2.0, toe_end=2.0)
    with pytest.raises(MuscleDomainError):
        tendon_force_refit(toe_end=1.9)


def test_parallel_force_is_shifted_cube():
    assert parallel_force(0.8) == 0.0
    assert parallel_force(1.5) == 1.0
    for L in np.linspace(1.0, 2.0, 11):
        assert parallel_force(L) == pytest.approx(8 * (L - 1) ** 3, abs=1e-12)


def test_force_length_gaussian():
    assert force_length(1.0, P) == 1.0
    assert force_length(1.0 + P.W, P) == pytest.approx(math.exp(-1))
    assert force_length(1.0 - P.W, P) == pytest.approx(math.exp(-1))


def test_hill_velocity_concentric_is_hill_hyperbola():
    # (z + A)(u + A) = A (1 + A) on the shortening branch
    for z in np.linspace(0, 1, 21):
        u = hill_velocity(z, P)
        assert (z + P.A) * (u + P.A) == pytest.approx(P.A * (1 + P.A), abs=1e-12)


def test_hill_velocity_eccentric_values():
    assert hill_velocity(1.0, P) == 0.0
    assert hill_velocity(1.2, P) == pytest.approx(-1 / 15, abs=1e-12)
    assert hill_velocity(1.499, P) < -10
    with pytest.raises(MuscleDomainError):
        hill_velocity(1.5, P)
    with pytest.raises(MuscleDomainError):
        hill_velocity(-0.1, P)


def test_hill_velocity_continuous_at_isometric_point():
    assert hill_velocity(1 - 1e-9, P) == pytest.approx(hill_velocity(1 + 1e-9, P), abs=1e-8)


@given(st.floats(0.0, 1.49))
def test_hill_round_trip(z):
    assert hill_velocity_inverse(hill_velocity(z, P), P) == pytest.approx(z, abs=1e-10)


@given(st.floats(-50.0, 1.0))
def test_hill_inverse_lands_in_domain(u):
    z = hill_velocity_inverse(u, P)
    assert 0.0 <= z < P.g_max


def test_hill_inverse_rejects_fast_shortening():
    with pytest.raises(MuscleDomainError):
        hill_velocity_inverse(1.01, P)


@settings(max_examples=60)
@given(st.floats(0.05, 0.95), st.floats(0.75, 1.2), st.floats(-0.5, 0.9))
def test_activation_recovers_synthesised_force(a, L_C, u):
    z = hill_velocity_inverse(u, P)
    F_s = a * z * force_length(L_C, P) + parallel_force(L_C)
    L_S = tendon_force_inverse(F_s)
    raw, clamped = activation_from(u, L_S, L_C, P)
    assert raw == pytest.approx(a, abs=1e-7)
    assert clamped == pytest.approx(a, abs=1e-7)


def test_activation_singular_and_clamped():
    with pytest.raises(ActivationSingularError):
        activation_from(1.0, 2.03, 1.0, P)
    raw, clamped = activation_from(0.9, 2.1, 1.0, P)
    assert raw > 1 and clamped == 1.0


def test_params_validation():
    with pytest.raises(MuscleDomainError):
        MuscleParams(W=0.0)
    with pytest.raises(MuscleDomainError):
        MuscleParams(g_max=1.0)
