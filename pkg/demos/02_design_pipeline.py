"""
Feedback synthesis, step by step
================================

Runs the full design pipeline on the reference plant and unpacks every
intermediate product: mode count, feedthrough constant, controllability,
gain, and the verified closed-loop spectrum.  Ends by poking the two
admissibility gates to show how bad requests are refused.
"""

import numpy as np

from delaypi import (
    DesignGateError,
    PlantParams,
    compute_equilibrium,
    design_feedback,
    kalman_check,
    verify_spectrum,
)

params = PlantParams(a=0.2, b=2.0, c=1.0, theta=np.pi / 3, h_m=0.5, h_M=1.5)
design = design_feedback(params, sim_modes=40)

# ---- what the pipeline decided ---------------------------------------------
basis = design.basis
gate = -2.0 * np.sqrt(5.0) * abs(params.c)
print(f"mode gate: lambda_(N+1) < {gate:.4f}")
print(f"  lambda_0..3 = {np.round(basis.lam[:4], 4)}  ->  N = {design.N}")

alpha = design.alpha
print(f"feedthrough alpha = {alpha.value:.10f} "
      f"(tail remainder <= {alpha.remainder:.1e} after {alpha.tail_terms} terms)")

aug = design.model
print(f"Kalman rank = {kalman_check(aug.A_a, aug.B_a)} of {aug.dim}")
print(f"gain K = {np.round(design.K, 6)}")
print(f"requested poles {np.real(aug.poles)}, "
      f"matched within {verify_spectrum(aug.A_K, aug.poles):.2e}")
print(f"placement conditioning {design.placement.cond:.3g}, "
      f"residual {design.placement.residual:.2e}")

eq = compute_equilibrium(aug, basis, r_e=5.0, p_e=2.0)
print(f"steady state for (r_e=5, p_e=2): u_e = {eq.u_e:.6f}, "
      f"boundary value {eq.trace_e:.8f}")

# ---- the gates actually bite -----------------------------------------------
for poles in [(-1.0, -2.0, -2.5), (-3.0, -5.0, -6.0)]:
    try:
        design_feedback(params, sim_modes=40, poles=poles)
    except DesignGateError as exc:
        print(f"refused poles {poles}: {exc}")

try:
    design_feedback(params, sim_modes=2)
except ValueError as exc:
    print(f"refused 2-mode basis: {exc}")
