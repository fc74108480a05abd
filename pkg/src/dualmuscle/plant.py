"""Four-state agonist/antagonist plant: mass position and velocity plus the
two tendon lengths. Contractile lengths follow from the fixed total length C.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .muscle import DEFAULT_CURVE, MuscleParams, TendonCurve, tendon_force, tendon_force_derivative, tendon_force_inverse

__all__ = [
    "PlantDomainError",
    "PlantState",
    "VirtualInput",
    "Uncertainty",
    "Measurement",
    "derivatives",
    "measure",
    "contractile_lengths",
    "contractile_derivatives",
    "check_domain",
    "observability_rank",
    "MIN_CONTRACTILE_LENGTH",
]

MIN_CONTRACTILE_LENGTH = 0.05


class PlantDomainError(RuntimeError):
    """Plant left the region where the muscle model is defined."""

    def __init__(self, guard, value, tau=None):
        self.guard = guard
        self.value = value
        self.tau = tau
        where = "" if tau is None else f" at tau={tau:.6g}"
        super().__init__(f"guard '{guard}' violated{where}: value {value:.6g}")


@dataclass(frozen=True)
class PlantState:
    x1: float  # mass position, equal to the agonist total length L_m1
    x2: float  # mass velocity
    x3: float  # agonist tendon length L_S1
    x4: float  # antagonist tendon length L_S2

    def as_array(self):
        return np.array([self.x1, self.x2, self.x3, self.x4])

    @classmethod
    def from_array(cls, v):
        return cls(*(float(c) for c in v[:4]))


@dataclass(frozen=True)
class VirtualInput:
    """Contractile-element velocities; these are what the controller sets."""

    u1: float
    u2: float


@dataclass(frozen=True)
class Uncertainty:
    delta: float
    delta_dot: float = 0.0


@dataclass(frozen=True)
class Measurement:
    """Position and the two load-cell forces.

    The tendon-length preimages are cached so several observers stepping on
    the same sample share one root solve.
    """

    y1: float
    y2: float
    y3: float
    curve: TendonCurve = DEFAULT_CURVE

    @cached_property
    def ls1(self):
        return tendon_force_inverse(self.y2, self.curve)

    @cached_property
    def ls2(self):
        return tendon_force_inverse(self.y3, self.curve)

    def as_tuple(self):
        return (self.y1, self.y2, self.y3)

    @classmethod
    def with_lengths(cls, y1, y2, y3, curve, ls1, ls2):
        """Measurement whose tendon-length preimages are already known.

        Only valid for noise-free samples of a taut tendon, where the inverse
        would return the true length anyway.
        """
        out = cls(y1, y2, y3, curve)
        out.__dict__["ls1"] = ls1
        out.__dict__["ls2"] = ls2
        return out


def contractile_lengths(state: PlantState, params: MuscleParams):
    """(L_C1, L_C2) from the length constraint L_m1 + L_m2 = C."""
    lc1 = state.x1 - state.x3
    lc2 = (params.C - state.x1) - state.x4
    if lc1 <= 0 or lc2 <= 0:
        warnings.warn(f"nonpositive contractile length ({lc1:.4g}, {lc2:.4g})", RuntimeWarning, stacklevel=2)
    return lc1, lc2


def contractile_derivatives(state: PlantState, inp: VirtualInput):
    return -inp.u1, -inp.u2


def check_domain(state: PlantState, params: MuscleParams, tau=None):
    lc1 = state.x1 - state.x3
    lc2 = (params.C - state.x1) - state.x4
    if not lc1 > MIN_CONTRACTILE_LENGTH:
        raise PlantDomainError("L_C1 > 0.05", lc1, tau)
    if not lc2 > MIN_CONTRACTILE_LENGTH:
        raise PlantDomainError("L_C2 > 0.05", lc2, tau)


def derivatives(state: PlantState, inp: VirtualInput, delta, params: MuscleParams, check=True):
    """Time derivative of the plant state as a numpy array."""
    if check:
        check_domain(state, params)
    curve = params.tendon
    x2 = state.x2
    acc = (tendon_force(state.x4, curve) - tendon_force(state.x3, curve)) / params.m + delta
    return np.array([x2, acc, x2 + inp.u1, -x2 + inp.u2])


def measure(state: PlantState, params: MuscleParams) -> Measurement:
    curve = params.tendon
    return Measurement(state.x1, tendon_force(state.x3, curve), tendon_force(state.x4, curve), curve)


def _outputs_and_rates(x, inp, delta, params):
    s = PlantState.from_array(x)
    y = measure(s, params).as_tuple()
    xdot = derivatives(s, inp, delta, params, check=False)
    c = params.tendon
    d3 = tendon_force_derivative(s.x3, c)
    d4 = tendon_force_derivative(s.x4, c)
    ydot = (xdot[0], d3 * xdot[2], d4 * xdot[3])
    return np.array(y + ydot)


def observability_rank(state: PlantState, inp: VirtualInput, params: MuscleParams,
                       perturbation=1e-6, delta=0.0, order=None, rtol=1e-6):
    """Numeric rank of d[y; dy/dt]/dx by central differences.

    ``order`` permutes the three measurement channels (rank must not care).
    Warns when a tendon length sits within ``perturbation`` of a breakpoint,
    where the finite differences straddle two branches.
    """
    c = params.tendon
    for L in (state.x3, state.x4):
        for b in (c.slack_end, c.toe_end):
            if abs(L - b) <= 10 * perturbation:
                warnings.warn(f"tendon length {L} at curve breakpoint {b}", RuntimeWarning, stacklevel=2)
    x0 = state.as_array()
    cols = []
    for i in range(4):
        dx = np.zeros(4)
        dx[i] = perturbation
        cols.append((_outputs_and_rates(x0 + dx, inp, delta, params)
                     - _outputs_and_rates(x0 - dx, inp, delta, params)) / (2 * perturbation))
    J = np.column_stack(cols)
    if order is not None:
        idx = list(order) + [k + 3 for k in order]
        J = J[idx]
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))
