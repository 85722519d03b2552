"""
Eigenstructure of the reaction-diffusion operator
=================================================

Builds the orthonormal sine basis for the reference plant, prints the
root/eigenvalue ladder, and checks the two closed-form identities that
the rest of the toolkit leans on.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from delaypi import PlantParams, build_basis, eigenfunction_matrix, inner_products

params = PlantParams(a=0.2, b=2.0, c=1.0, theta=np.pi / 3, h_m=0.5, h_M=1.5)
basis = build_basis(params, 12)

# ---- the root ladder -------------------------------------------------------
# r_n is the unique root of r cot(r) = -cot(theta) in (n pi, (n+1) pi);
# lambda_n = b + c - a r_n^2 drops like -a n^2 pi^2.
print("  n      r_n        r_n - (n+.5)pi    lambda_n")
for n in range(8):
    drift = basis.r[n] - (n + 0.5) * np.pi
    print(f"{n:3d}  {basis.r[n]:9.5f}   {drift:+12.3e}   {basis.lam[n]:10.4f}")
print(f"unstable modes: {np.sum(basis.lam > 0)}")

# ---- identities ------------------------------------------------------------
# a_n + lambda_n b_n collapses to a e_n'(0): the input enters every modal
# equation through the boundary derivative alone.
gap = np.abs(basis.a_n + basis.lam * basis.b_n - params.a * basis.ed0).max()
print(f"input-gain identity, worst abs deviation: {gap:.2e}")

gram = np.array([
    inner_products(lambda x, i=i: eigenfunction_matrix(basis, x)[:, i], basis)
    for i in range(len(basis))
])
print(f"orthonormality, worst |<e_i,e_j> - delta_ij|: "
      f"{np.abs(gram - np.eye(len(basis))).max():.2e}")

# ---- picture ---------------------------------------------------------------
x = np.linspace(0.0, 1.0, 400)
E = eigenfunction_matrix(basis, x)

fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.4))
for n in range(4):
    ax0.plot(x, E[:, n], label=f"$e_{n}$")
ax0.set_xlabel("x")
ax0.set_title("first eigenfunctions")
ax0.legend(fontsize=8)
ax1.axhline(0.0, color="k", lw=0.6)
ax1.plot(np.arange(len(basis)), basis.lam, "o-")
ax1.set_xlabel("n")
ax1.set_title(r"eigenvalues $\lambda_n$")
fig.tight_layout()
fig.savefig("demos_eigenstructure.png", dpi=130)
print("wrote demos_eigenstructure.png")
