"""
=========================================
Dilations that respect the weights
=========================================

A Nash quotient built with the homogeneous dimension does not change
under the anisotropic dilations of the structure. Any other exponent
makes it drift.
"""

# %%

from grushinlab.exponents import structure_dimension
from grushinlab.inequalities import monomial_substitution_check, scale_invariance_check
from grushinlab.structures import GeneralizedGrusin, Monomial

for spec in (GeneralizedGrusin(1, 1, 0.0, (2.0,)), Monomial((1.0,))):
    D = structure_dimension(spec)
    for shift in (0.0, -0.5, 0.5):
        rep = scale_invariance_check(spec, D=D + shift)
        print(f"{spec}  D={D + shift:.2f}: quotients {[round(v, 6) for v in rep.values]}, "
              f"spread {rep.extra['spread']:.2e}")

# %%
# Straightening a monomial weight
# -------------------------------
# The substitution ``x = y^n`` with ``n = 1/(1 - alpha/2)`` turns the
# monomial energy into a power-weighted Euclidean energy.

rep = monomial_substitution_check((1.0,), nodes=4097)
print("sides", rep.values, "discrepancy", rep.extra["discrepancy"])
