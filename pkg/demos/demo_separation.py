"""
==============================
Two halves that never meet
==============================

Start a flow with data on ``{x > 0}`` and measure how much mass reaches
``{x < 0}``. Above the threshold the leak disappears under refinement;
below it, it settles at a positive value.
"""

# %%
# Mass on the far side
# --------------------

from grushinlab.flow import support_confinement

ladder = [2.0 ** -k for k in range(6, 11)]
for alpha in (1.5, 0.5):
    print(f"alpha={alpha}")
    for row in support_confinement(2.0, alpha, ladder):
        print(f"  h={row.h:.2e}  mass(x<0)={row.mass_minus:.3e}  mass(x>0)={row.mass_plus:.4f}")

# %%
# Energy of the split
# -------------------
# Cutting a bump at the origin costs energy ``~ h^(1 + p alpha/2 - p)``,
# which vanishes exactly in the separated regime.

from grushinlab.inequalities import energy_additivity_check, truncator_integral

for p, alpha in [(2.0, 1.5), (3.0, 1.6), (2.0, 0.5)]:
    rep = energy_additivity_check(p, alpha)
    print(f"p={p:g} alpha={alpha}: exponent {rep.measured_exponent:.3f} "
          f"(expected {rep.params['expected_exponent']:.3f}), "
          f"{'vanishes' if rep.passed else 'does not vanish'}")

# %%
# The log truncator
# -----------------
# The same dichotomy in closed form: the truncator energy tends to zero
# from the threshold on and blows up far below it.

for n in (1e2, 1e4, 1e6):
    print(f"n={n:.0e}: alpha=1.5 -> {truncator_integral(n, 2, 1.5):.5f}, "
          f"alpha=0 -> {truncator_integral(n, 2, 0.0):.1f}")
