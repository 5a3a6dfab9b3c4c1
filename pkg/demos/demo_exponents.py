"""
=======================================
Homogeneous dimensions and decay rates
=======================================

Every weighted structure in the catalogue carries a homogeneous dimension
``D``. It fixes the exponents of the smoothing estimate for the p-Laplace
flow and the threshold at which the two halves of a Grushin plane stop
talking to each other.
"""

# %%
# Dimensions
# ----------
# A classical Grushin plane (weight ``x^2`` on the vertical direction)
# behaves like a three-dimensional space, and a one-dimensional monomial
# weight ``|x|`` like a two-dimensional one.

from grushinlab.exponents import (GrusinDims, classify_regularity, decay_exponents,
                                  grusin_dimension, monomial_dimension,
                                  separation_threshold)

print("Grushin(1,1,0,(2,)):", grusin_dimension(GrusinDims(1, 1, 0.0, (2.0,))))
print("Monomial((1,)):     ", monomial_dimension((1.0,)))
for a in (0.0, 0.5, 1.0, 1.5):
    print(f"1D weight |x|^{a}: D = {grusin_dimension(GrusinDims(1, 0, a)):.4f}")

# %%
# Decay exponents
# ---------------
# ``delta_q`` is the time exponent and ``gamma_q`` the data exponent of
# the L^q to L^infinity bound. For ``p = 2`` the data exponent is one.

for p, D in [(2.0, 3.0), (3.0, 5.0), (4.0, 9.0)]:
    for q in (1.0, 2.0):
        ex = decay_exponents(p, D, q)
        print(f"p={p:g} D={D:g} q={q:g}: delta={ex.delta_q:.4f} gamma={ex.gamma_q:.4f}")

# %%
# The continuity dichotomy
# ------------------------
# For the weight ``|x|^alpha`` the threshold is ``2/p'``.

for p in (1.5, 2.0, 3.0):
    t = separation_threshold(p)
    print(f"p={p:g}: threshold {t:.4f};",
          ", ".join(f"alpha={a}: {classify_regularity(a, p).label}" for a in (0.5, 1.5)))
