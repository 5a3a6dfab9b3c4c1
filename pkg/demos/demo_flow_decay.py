"""
==============================
Smoothing of the weighted flow
==============================

Evolve a narrow bump with proximal implicit-Euler steps and fit the
decay of its sup norm against ``t^-delta``.
"""

# %%
# Heat flow on the line
# ---------------------
# ``p = 2`` without weight is the heat equation; the sup norm of a unit
# mass decays like ``t^(-1/2)``.

from grushinlab.flow import decay_experiment

trace, report = decay_experiment(2.0, 0.0, h=0.01, radius=0.05)
print(f"fitted slope {report['slope']:.4f}, predicted {-report['predicted_delta']:.4f}")
for t, linf in zip(trace.times, trace.linf):
    print(f"t={t:.4f}  sup={linf:.5f}")

# %%
# A nonlinear case
# ----------------
# For ``p = 3`` the Barenblatt rate is ``1/(D(p-2) + p) = 1/4``. A taller
# bump reaches the self-similar regime sooner.

trace, report = decay_experiment(3.0, 0.0, h=0.01, radius=0.05, height=10.0)
print(f"fitted slope {report['slope']:.4f}, predicted {-report['predicted_delta']:.4f}")
