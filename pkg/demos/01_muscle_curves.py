"""Muscle primitives: tendon toe region, Hill velocity curve, activation recovery.

Run from the repository root:  python demos/01_muscle_curves.py
Writes demo_muscle_curves.png next to the working directory.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dualmuscle.muscle import (
    MuscleParams, activation_from, force_length, hill_velocity, hill_velocity_inverse, parallel_force,
    tendon_force, tendon_force_inverse, tendon_force_refit, tendon_force_verbatim,
)

p = MuscleParams()
refit, verbatim = tendon_force_refit(), tendon_force_verbatim()

# The toe region is a quintic joined C2 to zero on the left and to the line on
# the right. The published coefficients were rounded in powers of L, so they
# carry a small constant, linear and quadratic residue.
L = np.linspace(1.99, 2.08, 400)
F_refit = np.array([tendon_force(v, refit) for v in L])
F_verb = np.array([tendon_force(v, verbatim) for v in L])
toe = (L >= 2.0) & (L < 2.04)
print("refit   F(2.02) =", tendon_force(2.02, refit))
print("verbatim F(2.02) =", tendon_force(2.02, verbatim))
print("max |refit - verbatim| over the toe:", np.abs(F_refit - F_verb)[toe].max())
print("verbatim shifted coefficients c0..c2:", verbatim.quintic_coeffs[:3])

# Inverting the tendon curve is how the observers turn a force reading into a length.
for f in (0.05, 0.25, 0.5, 1.0):
    print(f"F = {f:5.2f}  ->  L_S = {tendon_force_inverse(f):.6f}")

# Hill curve: concentric below z = 1, eccentric with a pole at g_max.
z = np.linspace(0.0, 1.45, 300)
u = np.array([hill_velocity(v, p) for v in z])
back = np.array([hill_velocity_inverse(v, p) for v in u])
print("hill round trip max error:", np.abs(back - z).max())

# Activation is algebraic once u and the lengths are known.
a = 0.6
L_C = 1.1
u_c = 0.05
F_s = a * hill_velocity_inverse(u_c, p) * force_length(L_C, p) + parallel_force(L_C)
print("recovered activation:", activation_from(u_c, tendon_force_inverse(F_s), L_C, p)[0])

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
ax[0].plot(L, F_refit, "k-", label="refit")
ax[0].plot(L, F_verb, "r--", label="published coefficients")
ax[0].axvspan(2.0, 2.04, color="0.9")
ax[0].set_xlabel("L_S")
ax[0].set_ylabel("tendon force")
ax[0].legend()
ax[1].plot(z, u, "k-")
ax[1].axvline(1.0, color="0.7", lw=0.8)
ax[1].set_xlabel("z")
ax[1].set_ylabel("contraction velocity u")
fig.tight_layout()
fig.savefig("demo_muscle_curves.png", dpi=110)
print("wrote demo_muscle_curves.png")
