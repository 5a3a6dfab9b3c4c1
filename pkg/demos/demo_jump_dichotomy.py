"""
==========================================
Continuous and separated harmonic profiles
==========================================

Solve the discrete ``(A, p)``-Dirichlet problem on ``[-1, 1]`` with
boundary data ``-1, +1`` under the weight ``|x|^alpha`` and watch the
value at ``x = 1/2`` under grid refinement.
"""

# %%
# Below the threshold
# -------------------
# With ``p = 2`` and ``alpha = 0.5`` the solution converges to the power
# profile ``sign(x)|x|^(1 - alpha p'/2)``.

from grushinlab.elliptic import SolveOptions, analytic_profile_1d, jump_experiment

opts = SolveOptions(method="newton")
ladder = [2.0 ** -k for k in range(5, 12)]
target = analytic_profile_1d(0.5, 2.0, 0.5)
for row in jump_experiment(2.0, 0.5, ladder, opts):
    print(f"h={row.h:.2e}  u(0.5)={row.u_at_half:.5f}  (profile {target:.5f})")

# %%
# From the threshold on
# ---------------------
# At ``alpha = 1.5`` the whole variation collapses into the origin: the
# value at ``1/2`` climbs to one and the weak residual of ``sign(x)``
# vanishes like ``h^(1/2)``.

for row in jump_experiment(2.0, 1.5, ladder, opts):
    print(f"h={row.h:.2e}  u(0.5)={row.u_at_half:.5f}  "
          f"gap={row.central_gap:.4f}  residual(sign)={row.residual_of_jump:.3e}")
