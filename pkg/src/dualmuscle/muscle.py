"""Hill-type muscle primitives for the normalized two-muscle system.

Every quantity here is dimensionless. The tendon (series elastic) curve is a
piecewise function: zero while slack, a quintic toe region, then a straight
line. The quintic is stored in powers of ``L - slack_end`` because the
published coefficients in powers of ``L`` are ~1e8 in magnitude and cancel
catastrophically in float arithmetic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "MuscleDomainError",
    "ActivationSingularError",
    "TendonCurve",
    "MuscleParams",
    "tendon_force_refit",
    "tendon_force_verbatim",
    "tendon_force",
    "tendon_force_inverse",
    "tendon_force_derivative",
    "tendon_force_second_derivative",
    "parallel_force",
    "force_length",
    "hill_velocity",
    "hill_velocity_inverse",
    "hill_velocity_range",
    "activation_from",
]

# Published toe-region coefficients, highest power of L first.
VERBATIM_COEFFS = (
    "6760794.14",
    "-68434261.19",
    "277072371.99",
    "-560875494.46",
    "567666340.97",
    "-229806913.40",
)

Z_SINGULAR_TOL = 1e-9


class MuscleDomainError(ValueError):
    """Argument outside the domain of a muscle-model curve."""


class ActivationSingularError(ZeroDivisionError):
    """Activation recovery hit z = 0 (contraction velocity equal to 1)."""


@dataclass(frozen=True)
class TendonCurve:
    """Piecewise tendon force-length curve.

    ``quintic_coeffs`` holds c0..c5 of ``sum(c_k * s**k)`` with
    ``s = L - slack_end``, lowest power first.
    """

    slack_end: float = 2.0
    toe_end: float = 2.04
    quintic_coeffs: tuple = (0.0, 0.0, 0.0, 30048.0, -826318.75, 6760781.25)
    linear_offset: float = 0.5
    linear_slope: float = 19.2308

    def __post_init__(self):
        if not self.toe_end > self.slack_end:
            raise MuscleDomainError("toe_end must exceed slack_end")
        if len(self.quintic_coeffs) != 6:
            raise MuscleDomainError("quintic_coeffs needs 6 entries")


def tendon_force_refit(slack_end=2.0, toe_end=2.04, linear_offset=0.5, linear_slope=19.2308) -> TendonCurve:
    """Build the toe quintic from C2 matching at both breakpoints.

    Value, slope and curvature vanish at ``slack_end``; at ``toe_end`` the
    quintic meets the linear branch with equal value and slope and zero
    curvature. The first three conditions force c0 = c1 = c2 = 0, leaving a
    3x3 system for c3..c5.
    """
    if not toe_end > slack_end:
        raise MuscleDomainError("toe_end must exceed slack_end")
    d = toe_end - slack_end
    M = np.array([
        [d**3, d**4, d**5],
        [3 * d**2, 4 * d**3, 5 * d**4],
        [6 * d, 12 * d**2, 20 * d**3],
    ])
    rhs = np.array([linear_offset, linear_slope, 0.0])
    try:
        c345 = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise MuscleDomainError(f"singular refit system for toe width {d}") from exc
    coeffs = (0.0, 0.0, 0.0) + tuple(float(c) for c in c345)
    return TendonCurve(slack_end, toe_end, coeffs, linear_offset, linear_slope)


def tendon_force_verbatim() -> TendonCurve:
    """The tendon curve with the published (rounded) toe coefficients.

    The shift to powers of ``L - 2`` is done in exact rational arithmetic so
    the only error left is the rounding already present in the published
    numbers.
    """
    desc = [Fraction(c) for c in VERBATIM_COEFFS][::-1]  # lowest power first
    shift = Fraction(2)
    shifted = []
    for k in range(6):
        # coefficient of s**k in sum_i c_i (s + shift)**i
        shifted.append(sum(desc[i] * math.comb(i, k) * shift ** (i - k) for i in range(k, 6)))
    return TendonCurve(2.0, 2.04, tuple(float(c) for c in shifted), 0.5, 19.2308)


DEFAULT_CURVE = tendon_force_refit()


@dataclass(frozen=True)
class MuscleParams:
    """Physiological constants shared by both muscles."""

    W: float = 0.3
    A: float = 0.25
    g_max: float = 1.5
    tendon: TendonCurve = DEFAULT_CURVE
    C: float = 5.54
    m: float = 1.0

    def __post_init__(self):
        for name in ("W", "A", "C", "m"):
            if not getattr(self, name) > 0:
                raise MuscleDomainError(f"{name} must be positive")
        if not self.g_max > 1:
            raise MuscleDomainError("g_max must exceed 1")


def _quintic(c, s):
    return s**3 * (c[3] + s * (c[4] + s * c[5])) + c[0] + s * (c[1] + s * c[2])


def tendon_force(L_S, curve: TendonCurve = DEFAULT_CURVE):
    """Tendon force at length ``L_S``; zero while slack."""
    if L_S < curve.slack_end:
        return 0.0
    if L_S < curve.toe_end:
        return _quintic(curve.quintic_coeffs, L_S - curve.slack_end)
    return curve.linear_offset + curve.linear_slope * (L_S - curve.toe_end)


def tendon_force_derivative(L_S, curve: TendonCurve = DEFAULT_CURVE):
    """dF/dL_S. At a breakpoint the right-hand branch is used."""
    if L_S < curve.slack_end:
        return 0.0
    if L_S < curve.toe_end:
        c = curve.quintic_coeffs
        s = L_S - curve.slack_end
        return c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))
    return curve.linear_slope


def tendon_force_second_derivative(L_S, curve: TendonCurve = DEFAULT_CURVE):
    if L_S < curve.slack_end or L_S >= curve.toe_end:
        return 0.0
    c = curve.quintic_coeffs
    s = L_S - curve.slack_end
    return 2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))


def tendon_force_inverse(F, curve: TendonCurve = DEFAULT_CURVE, tol=1e-10, max_iter=200):
    """Tendon length producing force ``F``.

    ``F == 0`` maps to ``slack_end`` (the slack region makes the preimage a
    half-line). The toe branch is solved by Newton steps kept inside a
    shrinking bisection bracket, so it can never leave ``[slack_end, toe_end]``.
    """
    if not F >= 0:
        raise MuscleDomainError(f"negative tendon force {F!r} has no preimage")
    if F == 0:
        return curve.slack_end
    if F >= curve.linear_offset:
        return curve.toe_end + (F - curve.linear_offset) / curve.linear_slope
    c = curve.quintic_coeffs
    lo, hi = 0.0, curve.toe_end - curve.slack_end
    if _quintic(c, lo) > F:
        # only reachable with an offset quintic (published coefficients)
        return curve.slack_end
    # start from the pure-cubic guess, which is close near the slack end
    s = (F / c[3]) ** (1.0 / 3.0) if c[3] > 0 else 0.5 * hi
    if not lo < s < hi:
        s = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = _quintic(c, s) - F
        if r > 0:
            hi = s
        else:
            lo = s
        dr = c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))
        step = r / dr if dr > 0 else math.inf
        s_new = s - step
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= tol or hi - lo <= tol:
            s = s_new
            break
        s = s_new
    return curve.slack_end + s


def parallel_force(L_C):
    """Parallel elastic force; a cubic that engages at L_C = 1."""
    if L_C < 1.0:
        return 0.0
    return 8 * L_C**3 - 24 * L_C**2 + 24 * L_C - 8


def force_length(L_C, params: MuscleParams):
    return math.exp(-(((L_C - 1.0) / params.W) ** 2))


def hill_velocity(z, params: MuscleParams):
    """Contraction velocity from the force ratio z (the g^-1 curve).

    Concentric branch for z <= 1, eccentric branch with a pole at g_max above.
    """
    A, gm = params.A, params.g_max
    if z < 0:
        raise MuscleDomainError(f"force ratio z={z} must be nonnegative")
    if z <= 1.0:
        return (1.0 - z) / (1.0 + z / A)
    if z >= gm:
        raise MuscleDomainError(f"force ratio z={z} at or beyond the eccentric pole g_max={gm}")
    return -A * (z - 1.0) * (gm - 1.0) / ((A + 1.0) * (gm - z))


def hill_velocity_range(params: MuscleParams):
    """Range (u_min, 1] of ``hill_velocity``; the eccentric pole sends u_min to -inf."""
    return -math.inf, 1.0


def hill_velocity_inverse(u, params: MuscleParams):
    """Force ratio z with ``hill_velocity(z) == u``.

    Concentric: z = A(1-u)/(A+u). Eccentric (u < 0): solving
    u(A+1)(g_max - z) = -A(z-1)(g_max-1) for z gives
    z = (A(g_max-1) - u(A+1)g_max) / (A(g_max-1) - u(A+1)). The eccentric
    branch runs to -inf at the pole, so every u <= 1 has a preimage.
    """
    A, gm = params.A, params.g_max
    if not u <= 1.0 or math.isnan(u):
        raise MuscleDomainError(f"contraction velocity u={u} exceeds the concentric maximum 1")
    if u >= 0.0:
        return A * (1.0 - u) / (A + u)
    k = A * (gm - 1.0)
    return (k - u * (A + 1.0) * gm) / (k - u * (A + 1.0))


def activation_from(u, L_S, L_C, params: MuscleParams):
    """Activation that makes contraction velocity ``u`` consistent with the lengths.

    Returns ``(raw, clamped)``; ``clamped`` is limited to [0, 1].
    """
    z = hill_velocity_inverse(u, params)
    if z == 0.0:
        raise ActivationSingularError("z = 0 (u = 1): activation is unbounded")
    if abs(z) < Z_SINGULAR_TOL:
        warnings.warn(f"ill-conditioned activation recovery, |z|={abs(z):.3g}", RuntimeWarning, stacklevel=2)
    f = force_length(L_C, params)
    if not f > 0:
        raise ActivationSingularError(f"force-length factor underflowed at L_C={L_C}")
    a = (tendon_force(L_S, params.tendon) - parallel_force(L_C)) / (z * f)
    return a, min(max(a, 0.0), 1.0)
