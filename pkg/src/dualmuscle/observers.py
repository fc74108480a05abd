"""Unknown-input observers for the dual-muscle plant.

Each observer is a derivative field over its own state and consumes only the
measurement (y1, y2, y3); none of them sees the plant state or the applied
inputs. Tendon lengths enter through the inverse of the tendon curve.

* high-gain: extended high-gain observer, the uncertainty and the two inputs
  are extra integrator states driven by scaled output errors;
* sliding-mode: super-twisting on the position channel, first-order sliding
  on the tendon channels, unknowns recovered by low-pass filtering the
  switching signals (equivalent injection);
* adaptive sliding-mode: same structure with dual-layer adapted gains, so no
  bounds on the uncertainty or the inputs are needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .muscle import (
    ActivationSingularError,
    MuscleDomainError,
    MuscleParams,
    activation_from,
    tendon_force_inverse,
)
from .plant import Measurement

__all__ = [
    "GainInequalityError",
    "ParameterCollapseError",
    "HgoParams",
    "HgoState",
    "SmoParams",
    "SmoState",
    "AsmoParams",
    "AsmoState",
    "sign_approx",
    "hgo_derivatives",
    "smo_derivatives",
    "asmo_derivatives",
    "asmo_signals",
    "initial_state",
    "recover_activation",
    "ActivationEstimate",
    "OBSERVERS",
]


class GainInequalityError(ValueError):
    """An observer gain violates its design inequality."""


class ParameterCollapseError(RuntimeError):
    """Adaptive magnitude L_a reached zero."""


def sign_approx(e, width):
    """Smooth stand-in for sign(e): e / (width + |e|)."""
    return e / (width + abs(e))


def _hurwitz(coeffs):
    return bool(np.all(np.roots(coeffs).real < 0))


def _lengths(y: Measurement, muscle: MuscleParams):
    if y.curve is muscle.tendon or y.curve == muscle.tendon:
        return y.ls1, y.ls2
    return tendon_force_inverse(y.y2, muscle.tendon), tendon_force_inverse(y.y3, muscle.tendon)


# -- high-gain --------------------------------------------------------------

@dataclass(frozen=True)
class HgoParams:
    eps_h: float = 0.1
    h11: float = 3.0
    h12: float = 3.0
    h13: float = 1.0
    h21: float = 2.0
    h22: float = 1.0
    h31: float = 2.0
    h32: float = 1.0

    def validate(self):
        if not 0 < self.eps_h < 1:
            raise GainInequalityError("high-gain: eps_h must lie in (0, 1)")
        if not _hurwitz([1, self.h11, self.h12, self.h13]):
            raise GainInequalityError("high-gain: s^3 + h11 s^2 + h12 s + h13 is not Hurwitz")
        if not _hurwitz([1, self.h21, self.h22]):
            raise GainInequalityError("high-gain: s^2 + h21 s + h22 is not Hurwitz")
        if not _hurwitz([1, self.h31, self.h32]):
            raise GainInequalityError("high-gain: s^2 + h31 s + h32 is not Hurwitz")
        return self


class HgoState(NamedTuple):
    xhat1: float
    xhat2: float
    xhat3: float
    xhat4: float
    delta_hat: float
    uhat1: float
    uhat2: float


def hgo_derivatives(s: HgoState, y: Measurement, params: HgoParams, muscle: MuscleParams) -> HgoState:
    ls1, ls2 = _lengths(y, muscle)
    eps = params.eps_h
    e1 = y.y1 - s[0]
    e3 = ls1 - s[2]
    e4 = ls2 - s[3]
    return HgoState(
        s[1] + params.h11 / eps * e1,
        (y.y3 - y.y2) / muscle.m + s[4] + params.h12 / eps**2 * e1,
        s[1] + s[5] + params.h21 / eps * e3,
        -s[1] + s[6] + params.h31 / eps * e4,
        params.h13 / eps**3 * e1,
        params.h22 / eps**2 * e3,
        params.h32 / eps**2 * e4,
    )


# -- sliding-mode -----------------------------------------------------------

@dataclass(frozen=True)
class SmoParams:
    lambda11: float = 28.17
    alpha11: float = 1.1
    alpha2: float = 1.1
    alpha3: float = 1.0
    tau_s: float = 0.01
    delta_s: float = 0.01
    f_plus: float = 1.0
    p: float = 0.5

    def lambda11_bound(self):
        """Lower bound on lambda11 from the super-twisting convergence condition."""
        a, f, p = self.alpha11, self.f_plus, self.p
        return math.sqrt(2.0 / (a - f)) * (a + f) * (1 + p) / (1 - p)

    def validate(self, U1m=None, U2m=None, bound_tol=0.01):
        """Check the design inequalities.

        The published lambda11 = 28.17 is the bound itself rounded to two
        decimals, so the strict inequality is checked with ``bound_tol`` slack.
        """
        if not self.tau_s > 0 or not self.delta_s > 0:
            raise GainInequalityError("sliding-mode: tau_s and delta_s must be positive")
        if not 0 < self.p < 1:
            raise GainInequalityError("sliding-mode: p must lie in (0, 1)")
        if not self.f_plus > 0:
            raise GainInequalityError("sliding-mode: f_plus must be positive")
        if not self.alpha11 > self.f_plus:
            raise GainInequalityError(
                f"sliding-mode: alpha11 > f_plus violated ({self.alpha11} <= {self.f_plus})")
        bound = self.lambda11_bound()
        if not self.lambda11 > bound - bound_tol:
            raise GainInequalityError(
                "sliding-mode: lambda11 > sqrt(2/(alpha11-f_plus))(alpha11+f_plus)(1+p)/(1-p) "
                f"violated ({self.lambda11} vs bound {bound:.4f})")
        if U1m is not None and not self.alpha2 > U1m:
            raise GainInequalityError(f"sliding-mode: alpha2 > U1m violated ({self.alpha2} <= {U1m})")
        if U2m is not None and not self.alpha3 > U2m:
            raise GainInequalityError(f"sliding-mode: alpha3 > U2m violated ({self.alpha3} <= {U2m})")
        return self


class SmoState(NamedTuple):
    xhat1: float
    xhat2: float
    xhat3: float
    xhat4: float
    delta_hat: float
    uhat1: float
    uhat2: float


def smo_derivatives(s: SmoState, y: Measurement, params: SmoParams, muscle: MuscleParams) -> SmoState:
    ls1, ls2 = _lengths(y, muscle)
    w = params.delta_s
    e1 = y.y1 - s[0]
    sg1 = e1 / (w + abs(e1))
    v11 = params.lambda11 * math.sqrt(abs(e1)) * sg1
    v12 = params.alpha11 * sg1
    v2 = params.alpha2 * sign_approx(ls1 - s[2], w)
    v3 = params.alpha3 * sign_approx(ls2 - s[3], w)
    ts = params.tau_s
    return SmoState(
        s[1] + v11,
        (y.y3 - y.y2) / muscle.m + v12,
        s[1] + v2,
        -s[1] + v3,
        (v12 - s[4]) / ts,
        (v2 - s[5]) / ts,
        (v3 - s[6]) / ts,
    )


# -- adaptive sliding-mode --------------------------------------------------

@dataclass(frozen=True)
class AsmoParams:
    alpha0: float = 2.97
    beta0: float = 1.1
    eta1: float = 0.2
    eta2: float = 0.2
    a: float = 0.82
    l0: float = 0.4
    r00: float = 0.4
    r01: float = 0.5
    r02: float = 0.5
    tau_a: float = 0.01
    eps_a1: float = 0.2
    eps_a2: float = 0.2
    alpha_a1: float = 0.99
    alpha_a2: float = 0.99
    gamma_a0: float = 200.0
    gamma_a1: float = 300.0
    gamma_a2: float = 300.0
    delta_00: float = 0.001
    delta_01: float = 0.001
    delta_02: float = 0.001
    delta_a: float = 0.01
    eps_a: float = 0.2

    def alpha0_design(self):
        """alpha0 = 2 sqrt(2 beta0), the usual pairing for the twisting gains."""
        return 2.0 * math.sqrt(2.0 * self.beta0)

    def validate(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise GainInequalityError(f"adaptive sliding-mode: {f.name} must be positive")
        if not self.a * self.beta0 < 1:
            raise GainInequalityError("adaptive sliding-mode: 0 < a < 1/beta0 violated")
        for name in ("alpha_a1", "alpha_a2"):
            if not getattr(self, name) < 1:
                raise GainInequalityError(f"adaptive sliding-mode: 0 < {name} < 1 violated")
        return self


class AsmoState(NamedTuple):
    xhat1: float
    xhat2: float
    xhat3: float
    xhat4: float
    delta_hat: float
    uhat1: float
    uhat2: float
    l_a: float
    r_a0: float
    k1: float
    k2: float
    r_a1: float
    r_a2: float


class AsmoSignals(NamedTuple):
    L_a: float
    delta_a0: float
    delta_a1: float
    delta_a2: float


def asmo_signals(s: AsmoState, params: AsmoParams) -> AsmoSignals:
    """Adaptive magnitude and the layer-one sliding variables."""
    L = params.l0 + s[7]
    d0 = L - abs(s[4]) / (params.a * params.beta0) - params.eps_a
    d1 = s[9] - abs(s[5]) / params.alpha_a1 - params.eps_a1
    d2 = s[10] - abs(s[6]) / params.alpha_a2 - params.eps_a2
    return AsmoSignals(L, d0, d1, d2)


def asmo_derivatives(s: AsmoState, y: Measurement, params: AsmoParams, muscle: MuscleParams) -> AsmoState:
    ls1, ls2 = _lengths(y, muscle)
    P = params
    w = P.delta_a
    L, d0, d1, d2 = asmo_signals(s, P)
    if not L > 0:
        raise ParameterCollapseError(f"adaptive magnitude L_a = {L:.3g} is not positive")

    # layer two: rates of the layer-one gains, frozen inside the dead-zones
    dr0 = P.gamma_a0 * abs(d0) if abs(d0) > P.delta_00 else 0.0
    dr1 = P.gamma_a1 * abs(d1) if abs(d1) > P.delta_01 else 0.0
    dr2 = P.gamma_a2 * abs(d2) if abs(d2) > P.delta_02 else 0.0
    # layer one
    dl = -(P.r00 + s[8]) * sign_approx(d0, w)
    dk1 = -(P.r01 + s[11]) * sign_approx(d1, w)
    dk2 = -(P.r02 + s[12]) * sign_approx(d2, w)

    alpha = math.sqrt(L) * P.alpha0
    beta = L * P.beta0
    e1 = y.y1 - s[0]
    sg1 = sign_approx(e1, w)
    phi = -(dl / L) * e1
    g1 = (s[9] + P.eta1) * sign_approx(ls1 - s[2], w)
    g2 = (s[10] + P.eta2) * sign_approx(ls2 - s[3], w)
    v12 = beta * sg1
    ta = P.tau_a
    return AsmoState(
        s[1] + alpha * math.sqrt(abs(e1)) * sg1 - phi,
        (y.y3 - y.y2) / muscle.m + v12,
        s[1] + g1,
        -s[1] + g2,
        (v12 - s[4]) / ta,
        (g1 - s[5]) / ta,
        (g2 - s[6]) / ta,
        dl,
        dr0,
        dk1,
        dk2,
        dr1,
        dr2,
    )


OBSERVERS = {
    "hgo": (HgoState, hgo_derivatives),
    "smo": (SmoState, smo_derivatives),
    "asmo": (AsmoState, asmo_derivatives),
}


def initial_state(kind, y: Measurement, muscle: MuscleParams):
    """Measurement-consistent start: position and tendon lengths from y,
    velocity, uncertainty and inputs zero, adaptive gains at zero."""
    ls1, ls2 = _lengths(y, muscle)
    base = (y.y1, 0.0, ls1, ls2, 0.0, 0.0, 0.0)
    if kind == "asmo":
        return AsmoState(*base, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return OBSERVERS[kind][0](*base)


class ActivationEstimate(NamedTuple):
    raw: tuple
    clamped: tuple
    singular: tuple


def recover_activation(xhat, uhat, muscle: MuscleParams) -> ActivationEstimate:
    """Activations implied by estimated state and contraction velocities.

    Singular or out-of-domain samples come back as NaN with the flag set;
    they are not fatal.
    """
    x1, _, x3, x4 = xhat[:4]
    lcs = (x1 - x3, muscle.C - x1 - x4)
    raw, clamped, flags = [], [], []
    for u, ls, lc in zip(uhat, (x3, x4), lcs):
        try:
            if not lc > 0:
                raise MuscleDomainError(f"estimated contractile length {lc} not positive")
            a, ac = activation_from(u, ls, lc, muscle)
        except (ActivationSingularError, MuscleDomainError):
            a, ac, flag = math.nan, math.nan, True
        else:
            flag = False
        raw.append(a)
        clamped.append(ac)
        flags.append(flag)
    return ActivationEstimate(tuple(raw), tuple(clamped), tuple(flags))
