"""Backstepping position tracking with least-squares allocation of the two
contraction velocities.

The load subsystem is driven through the tendon-force difference; a second
backstepping step turns the required rate of that difference into a single
linear constraint on (u1, u2), resolved by the minimum-norm solution.

Two variants of the synthetic input are available through ``law``:

``"derived"`` (default)
    zeta = F2 - F1 + m*delta - m*r_ddot, so that de/dt = A e + B zeta holds
    exactly; the velocity term in beta is +(F1' + F2')*x2, which is what the
    tendon-length dynamics give, and the feedforward uses the third
    derivative of the reference.
``"verbatim"``
    zeta built on m*r_dot and beta = ... - (F1' + F2')*x2 + m*r_ddot, the
    published form. It still tracks, but with a lag of about half the
    reference amplitude for the default sinusoid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .muscle import MuscleParams, tendon_force, tendon_force_derivative
from .plant import PlantState, Uncertainty, VirtualInput

__all__ = [
    "AllocationSingularError",
    "GainError",
    "ControllerGains",
    "Reference",
    "ReferenceSpec",
    "reference_eval",
    "allocate",
    "control",
    "control_detail",
    "ControlDetail",
    "load_matrices",
    "lyapunov_value",
]

log = logging.getLogger(__name__)

EPS_ALLOCATION = 1e-6


class AllocationSingularError(RuntimeError):
    """Both tendons slack: the force difference cannot be steered."""


class GainError(ValueError):
    pass


def load_matrices(m):
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0 / m]])
    return A, B


@dataclass(frozen=True)
class ControllerGains:
    K: tuple = (0.5774, 1.2198)
    P: tuple = ((21.1284, 17.3205), (17.3205, 36.5955))
    gamma: float = 1.0
    include_delta_dot_feedforward: bool = True
    u_max: tuple = (2.0, 2.0)
    law: str = "derived"

    @property
    def K_row(self):
        return np.array(self.K, dtype=float).reshape(1, 2)

    @property
    def P_mat(self):
        return np.array(self.P, dtype=float)

    def closed_loop(self, m=1.0):
        A, B = load_matrices(m)
        return A - B @ self.K_row

    def implied_Q(self, m=1.0):
        Acl = self.closed_loop(m)
        P = self.P_mat
        return -(Acl.T @ P + P @ Acl)

    def riccati_residual(self, m=1.0, effort_weight=30.0, state_weight=10.0):
        """Max-abs residuals of the CARE and of K = R^-1 B^T P.

        Returns ``(care_residual, gain_residual)`` for weights Q = state_weight*I,
        R = effort_weight.
        """
        A, B = load_matrices(m)
        P = self.P_mat
        care = A.T @ P + P @ A - P @ B @ B.T @ P / effort_weight + state_weight * np.eye(2)
        gain = self.K_row - B.T @ P / effort_weight
        return float(np.abs(care).max()), float(np.abs(gain).max())

    def validate(self, m=1.0):
        P = self.P_mat
        if not np.allclose(P, P.T):
            raise GainError("P must be symmetric")
        if np.linalg.eigvalsh(P).min() <= 0:
            raise GainError("P must be positive definite")
        if not self.gamma > 0:
            raise GainError("gamma must be positive")
        if np.linalg.eigvals(self.closed_loop(m)).real.max() >= 0:
            raise GainError("A - B K is not Hurwitz")
        Q = self.implied_Q(m)
        if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() <= 0:
            raise GainError("implied Q = -(Acl^T P + P Acl) is not positive definite")
        if min(self.u_max) <= 0:
            raise GainError("input bounds must be positive")
        if self.law not in ("derived", "verbatim"):
            raise GainError(f"unknown control law {self.law!r}")
        return self


@dataclass(frozen=True)
class Reference:
    r: float
    r_dot: float
    r_ddot: float
    r_dddot: float = 0.0


@dataclass(frozen=True)
class ReferenceSpec:
    """``kind`` is 'constant', 'sinusoid' (offset + amplitude*sin(omega*tau))
    or 'table' (cubic spline through ``table`` rows of (tau, r))."""

    kind: str = "sinusoid"
    offset: float = 2.6315
    amplitude: float = 0.01
    omega: float = 0.5
    table: tuple = ()
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "table"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "table":
            from scipy.interpolate import CubicSpline

            pts = np.asarray(self.table, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
                raise ValueError("table reference needs at least 4 (tau, r) rows")
            object.__setattr__(self, "_spline", CubicSpline(pts[:, 0], pts[:, 1]))


def reference_eval(tau, spec: ReferenceSpec) -> Reference:
    if spec.kind == "constant":
        return Reference(spec.offset, 0.0, 0.0, 0.0)
    if spec.kind == "sinusoid":
        a, w = spec.amplitude, spec.omega
        s, c = math.sin(w * tau), math.cos(w * tau)
        return Reference(spec.offset + a * s, a * w * c, -a * w * w * s, -a * w**3 * c)
    sp = spec._spline
    return Reference(float(sp(tau)), float(sp(tau, 1)), float(sp(tau, 2)), float(sp(tau, 3)))


def allocate(beta, d1, d2):
    """Minimum-norm (u1, u2) with d2*u2 - d1*u1 = beta."""
    den = d1 * d1 + d2 * d2
    if not den > EPS_ALLOCATION:
        raise AllocationSingularError(f"tendon stiffnesses ({d1:.3g}, {d2:.3g}) too small to allocate")
    return -d1 * beta / den, d2 * beta / den


@dataclass(frozen=True)
class ControlDetail:
    u: VirtualInput
    e: tuple
    zeta: float
    w: float
    beta: float
    clamped: bool


def control_detail(state: PlantState, ref: Reference, unc: Uncertainty,
                   gains: ControllerGains, params: MuscleParams) -> ControlDetail:
    c = params.tendon
    m = params.m
    k1, k2 = gains.K
    (p11, p12), (p21, p22) = gains.P
    g = gains.gamma
    x1, x2, x3, x4 = state.x1, state.x2, state.x3, state.x4

    verbatim = gains.law == "verbatim"
    e1 = x1 - ref.r
    e2 = x2 - ref.r_dot
    ff = ref.r_dot if verbatim else ref.r_ddot
    zeta = tendon_force(x4, c) - tendon_force(x3, c) + m * unc.delta - m * ff
    w = zeta + k1 * e1 + k2 * e2
    # K1 = gamma + K B ; K2 = K A + gamma K + B^T P (row vector)
    K1 = g + k2 / m
    K2a = g * k1 + p21 / m
    K2b = k1 + g * k2 + p22 / m
    d1 = tendon_force_derivative(x3, c)
    d2 = tendon_force_derivative(x4, c)
    if verbatim:
        beta = -K1 * zeta - (K2a * e1 + K2b * e2) - (d1 + d2) * x2 + m * ref.r_ddot
    else:
        beta = -K1 * zeta - (K2a * e1 + K2b * e2) + (d1 + d2) * x2 + m * ref.r_dddot
    if gains.include_delta_dot_feedforward:
        beta -= m * unc.delta_dot
    u1, u2 = allocate(beta, d1, d2)
    lim1, lim2 = gains.u_max
    clamped = abs(u1) > lim1 or abs(u2) > lim2
    if clamped:
        log.debug("virtual input clamped: (%g, %g)", u1, u2)
        u1 = min(max(u1, -lim1), lim1)
        u2 = min(max(u2, -lim2), lim2)
    return ControlDetail(VirtualInput(u1, u2), (e1, e2), zeta, w, beta, clamped)


def control(state: PlantState, tau, unc: Uncertainty, gains: ControllerGains,
            params: MuscleParams, reference: ReferenceSpec = ReferenceSpec()) -> VirtualInput:
    """Virtual inputs (u1, u2) at time ``tau`` for the given reference."""
    return control_detail(state, reference_eval(tau, reference), unc, gains, params).u


def lyapunov_value(e, w, gains: ControllerGains):
    ev = np.asarray(e, dtype=float)
    return 0.5 * float(ev @ gains.P_mat @ ev) + 0.5 * w * w
