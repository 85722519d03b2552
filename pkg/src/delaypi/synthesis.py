"""Design-model assembly, pole placement, spectral gates and equilibria.

The design acts on the first N+1 modes augmented by the integral
component: with A = diag(lambda_0..lambda_N), B_n = a_n + lambda_n b_n and
C = (e_n(1)),

    A_a = [[A, 0], [C, 0]],      B_a = [B; alpha],

and the feedback u = K Y_a + p places the spectrum of A_a + B_a K at the
requested poles.  Placement uses Ackermann's formula (single input, small
dimension) and is verified by an independent eigensolver: characteristic
polynomial via Faddeev-LeVerrier, simultaneous (Durand-Kerner) root
iteration, then a Newton polish.  That route deliberately avoids library
eigendecomposition so tests can cross-check against it.

Two spectral gates guard design emission: lambda_{N+1} < -2 sqrt(5) |c|
(mode-count rule) and Re mu < -3 |c| for every requested pole.  Designs
violating either are refused with DesignGateError.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .spectral import (
    AlphaResult,
    PlantParams,
    SpectralBasis,
    build_basis,
    compute_alpha,
    trace_tail,
)

__all__ = [
    "TruncatedModel",
    "AugmentedModel",
    "PlacementResult",
    "Equilibrium",
    "Design",
    "DesignGateError",
    "InsufficientModesError",
    "EigenSolverError",
    "select_mode_count",
    "assemble_truncated",
    "assemble_augmented",
    "kalman_check",
    "place_poles",
    "verify_spectrum",
    "with_gain",
    "default_poles",
    "compute_equilibrium",
    "design_feedback",
]

MODE_GATE_FACTOR = 2.0 * math.sqrt(5.0)   # lambda_{N+1} < -2 sqrt(5) |c|
POLE_GATE_FACTOR = 3.0                    # Re mu < -3 |c|


class DesignGateError(RuntimeError):
    """A spectral design gate refused to emit the requested design."""


class InsufficientModesError(ValueError):
    """The basis holds too few modes for the requested construction."""


class EigenSolverError(RuntimeError):
    """Polynomial eigensolver failed to converge."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=arr.dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TruncatedModel:
    """Diagonal truncation of the modal system to the design modes."""

    N: int
    A: np.ndarray   # (N+1, N+1) diagonal
    B: np.ndarray   # (N+1,) input coefficients a_n + lambda_n b_n
    C: np.ndarray   # (N+1,) output row e_n(1)


@dataclass(frozen=True)
class AugmentedModel:
    """Truncated model extended by the integral component."""

    base: TruncatedModel
    alpha: float
    A_a: np.ndarray                  # (N+2, N+2)
    B_a: np.ndarray                  # (N+2,)
    K: np.ndarray | None = None      # (N+2,) row gain, set by placement
    poles: np.ndarray | None = None  # requested closed-loop eigenvalues

    @property
    def dim(self) -> int:
        return self.A_a.shape[0]

    @property
    def A_K(self) -> np.ndarray:
        if self.K is None:
            raise ValueError("gain K has not been set on this model")
        return self.A_a + np.outer(self.B_a, self.K)


@dataclass(frozen=True)
class PlacementResult:
    """Gain plus the diagnostics of the placement that produced it."""

    K: np.ndarray
    residual: float          # max matched eigenvalue error of A_a + B_a K
    cond: float              # condition estimate of the controllability matrix
    warning: str | None = None


@dataclass(frozen=True)
class Equilibrium:
    """Steady state of the closed loop under constant (r_e, p_e)."""

    r_e: float
    p_e: float
    Y_ae: np.ndarray     # (N+2,) augmented design state
    u_e: float
    x_ne: np.ndarray     # modal equilibrium over every basis mode
    trace_e: float       # reconstructed boundary value X_e(1)

    @property
    def zeta_e(self) -> float:
        return float(self.Y_ae[-1])


@dataclass(frozen=True)
class Design:
    """Complete output of the synthesis pipeline."""

    basis: SpectralBasis
    N: int
    model: AugmentedModel
    placement: PlacementResult
    alpha: AlphaResult

    @property
    def params(self) -> PlantParams:
        return self.basis.params

    @property
    def K(self) -> np.ndarray:
        return self.model.K


def select_mode_count(basis: SpectralBasis, c: float) -> int:
    """Smallest N >= 0 with lambda_{N+1} < -2 sqrt(5) |c|."""
    threshold = -MODE_GATE_FACTOR * abs(c)
    lam = basis.lam
    for k in range(1, len(basis)):
        if lam[k] < threshold:
            return k - 1
    raise InsufficientModesError(
        f"no mode with lambda < {threshold:.6g} among the first {len(basis)}; "
        "extend the basis"
    )


def assemble_truncated(basis: SpectralBasis, N: int) -> TruncatedModel:
    if N + 1 > len(basis):
        raise InsufficientModesError(
            f"design order N={N} needs {N + 1} modes, basis has {len(basis)}"
        )
    lam = basis.lam[: N + 1]
    B = basis.input_gain[: N + 1]
    if np.any(B == 0.0):
        raise ValueError("vanishing modal input coefficient; plant degenerate")
    return TruncatedModel(
        N=N,
        A=_readonly(np.diag(lam)),
        B=_readonly(B),
        C=_readonly(basis.e1[: N + 1]),
    )


def assemble_augmented(model: TruncatedModel, alpha: float) -> AugmentedModel:
    n = model.N + 1
    A_a = np.zeros((n + 1, n + 1))
    A_a[:n, :n] = model.A
    A_a[n, :n] = model.C
    B_a = np.concatenate([model.B, [alpha]])
    return AugmentedModel(base=model, alpha=float(alpha),
                          A_a=_readonly(A_a), B_a=_readonly(B_a))


def _controllability(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    cols = np.empty((n, n))
    v = np.asarray(B, dtype=float)
    for k in range(n):
        cols[:, k] = v
        v = A @ v
    return cols


def kalman_check(A_a: np.ndarray, B_a: np.ndarray) -> int:
    """Rank of [B, AB, ..., A^{n-1}B] by column-pivoted QR."""
    ctrb = _controllability(np.asarray(A_a, float), np.asarray(B_a, float))
    R = scipy.linalg.qr(ctrb, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.sum(diag > diag[0] * ctrb.shape[0] * np.finfo(float).eps))


def _char_poly(M: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier."""
    n = M.shape[0]
    eye = np.eye(n)
    coeffs = [1.0]
    Mk = np.zeros((n, n))
    for k in range(1, n + 1):
        Mk = M @ (Mk + coeffs[-1] * eye)
        coeffs.append(-np.trace(Mk) / k)
    return np.array(coeffs)


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.full_like(z, coeffs[0])
    for c in coeffs[1:]:
        out = out * z + c
    return out


def _poly_roots(coeffs: np.ndarray, *, max_iter: int = 500) -> np.ndarray:
    """All roots of a monic polynomial by Durand-Kerner iteration.

    Deflation-free: every root is refined simultaneously, then polished
    with a few Newton steps.  Adequate for the well-separated spectra the
    design produces; clustering only slows convergence.
    """
    n = len(coeffs) - 1
    if n == 0:
        return np.array([], dtype=complex)
    mags = [abs(c) ** (1.0 / k) for k, c in enumerate(coeffs[1:], start=1) if c != 0.0]
    rho = max(2.0 * max(mags), 1e-3) if mags else 1.0
    # Fujiwara-bound circle with an irrational-ish twist to avoid symmetry traps.
    z = rho * np.exp(1j * (2.0 * np.pi * np.arange(n) / n + 0.4))
    cplx = coeffs.astype(complex)
    prev = np.inf
    for _ in range(max_iter):
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = diff.prod(axis=1)
        denom = np.where(denom == 0.0, 1e-300, denom)
        dz = _horner(cplx, z) / denom
        z = z - dz
        cur = float(np.max(np.abs(dz)))
        scale = max(1.0, float(np.max(np.abs(z))))
        # Rounding in the Horner evaluation puts a floor under |dz|; once
        # the updates are tiny and have stopped shrinking, more sweeps
        # only churn noise and the Newton polish below takes over.
        if cur <= 1e-13 * scale or (cur <= 1e-7 * scale and cur >= 0.5 * prev):
            break
        prev = cur
    dcoeffs = cplx[:-1] * np.arange(n, 0, -1)
    for _ in range(3):
        dp = _horner(dcoeffs, z)
        step = np.where(dp != 0.0, _horner(cplx, z) / np.where(dp == 0.0, 1.0, dp), 0.0)
        z = z - step
    dp = _horner(dcoeffs, z)
    final = np.abs(np.where(dp != 0.0, _horner(cplx, z) / np.where(dp == 0.0, 1.0, dp), 0.0))
    if float(np.max(final)) > 1e-6 * max(1.0, float(np.max(np.abs(z)))):
        raise EigenSolverError("polynomial root iteration did not converge")
    return z


def _greedy_match(computed: np.ndarray, expected: np.ndarray) -> float:
    """Max |computed - expected| under greedy nearest matching."""
    avail = list(computed)
    worst = 0.0
    for e in sorted(expected, key=abs, reverse=True):
        dists = [abs(z - e) for z in avail]
        i = int(np.argmin(dists))
        worst = max(worst, dists[i])
        avail.pop(i)
    return worst


def verify_spectrum(M: np.ndarray, expected) -> float:
    """Max matched distance between eig(M) and the expected poles.

    Independent of library eigendecomposition by design; see module
    docstring.  Dimension is capped because the characteristic-polynomial
    route loses accuracy for large matrices.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if M.shape[0] > 16:
        raise ValueError("verify_spectrum is limited to dimension <= 16")
    expected = np.atleast_1d(np.asarray(expected, dtype=complex))
    if expected.size != M.shape[0]:
        raise ValueError("expected pole count must match the dimension")
    roots = _poly_roots(_char_poly(M))
    return _greedy_match(roots, expected)


def _validate_poles(poles: np.ndarray, n: int) -> np.ndarray:
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    if poles.size != n:
        raise ValueError(f"need exactly {n} poles, got {poles.size}")
    scale = max(1.0, float(np.max(np.abs(poles))))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(poles[i] - poles[j]) <= 1e-8 * scale:
                raise ValueError("requested poles must be distinct")
    if not np.allclose(np.sort_complex(poles), np.sort_complex(poles.conj()),
                       rtol=0.0, atol=1e-12 * scale):
        raise ValueError("complex poles must come in conjugate pairs")
    return poles


def place_poles(A_a: np.ndarray, B_a: np.ndarray, poles) -> PlacementResult:
    """Gain K (convention u = +K x) making the eigenvalues of A_a + B_a K the poles.

    Single-input coefficient matching: det(sI - A + B F) equals the open
    loop characteristic polynomial plus F times a fixed polynomial vector,
    so the desired coefficients determine F = -K through one linear solve.
    Because that relation is exactly affine, re-solving against the
    achieved coefficients refines the gain to the numerical limit even
    when the gain is large.  Conditions beyond 1e12 attach a warning.
    """
    A = np.asarray(A_a, dtype=float)
    B = np.asarray(B_a, dtype=float).ravel()
    n = A.shape[0]
    poles = _validate_poles(poles, n)

    ctrb = _controllability(A, B)
    if kalman_check(A, B) < n:
        raise ValueError("pair (A_a, B_a) is not controllable; cannot place poles")
    cond = float(np.linalg.cond(ctrb))
    warning = None
    if cond > 1e12:
        warning = f"controllability matrix condition {cond:.3e} exceeds 1e12"

    q_des = np.poly(poles)
    if np.max(np.abs(q_des.imag)) > 1e-9 * max(1.0, np.max(np.abs(q_des.real))):
        raise ValueError("pole set does not yield a real characteristic polynomial")
    q_des = q_des.real

    # Rows of G are the adjugate-polynomial vectors w_k = A w_{k-1} + c_k B
    # (w_0 = B), with c_k the open-loop characteristic coefficients; then
    # charpoly(A - B F)[1:] = c[1:] + G F.
    c_open = _char_poly(A)
    G = np.empty((n, n))
    w = B.copy()
    G[0] = w
    for k in range(1, n):
        w = A @ w + c_open[k] * B
        G[k] = w
    F = np.linalg.solve(G, q_des[1:] - c_open[1:])
    for _ in range(2):
        q_act = _char_poly(A - np.outer(B, F))
        F += np.linalg.solve(G, q_des[1:] - q_act[1:])
    K = -F

    residual = verify_spectrum(A + np.outer(B, K), poles)
    return PlacementResult(K=_readonly(K), residual=float(residual),
                           cond=cond, warning=warning)


def with_gain(aug: AugmentedModel, K: np.ndarray, poles=None) -> AugmentedModel:
    """Attach a gain (and optionally the requested poles) to the model."""
    K = np.asarray(K, dtype=float).ravel()
    if K.size != aug.dim:
        raise ValueError(f"gain length {K.size} does not match dimension {aug.dim}")
    poles_arr = None if poles is None else _readonly(np.atleast_1d(np.asarray(poles)))
    return dataclasses.replace(aug, K=_readonly(K), poles=poles_arr)


def default_poles(basis: SpectralBasis, N: int, c: float) -> np.ndarray:
    """Evenly spaced real poles clearing the admissibility margin.

    Start one unit left of both the pole gate -3|c| and the slowest design
    eigenvalue, then step by -1; simple eigenvalues by construction.
    """
    start = min(-POLE_GATE_FACTOR * abs(c) - 1.0, float(np.min(basis.lam[: N + 1])) - 1.0)
    return start - np.arange(N + 2, dtype=float)


def compute_equilibrium(aug: AugmentedModel, basis: SpectralBasis,
                        r_e: float, p_e: float) -> Equilibrium:
    """Closed-loop steady state for constant reference and perturbation.

    Y_ae solves A_K Y = -(B_a p_e + Gamma_e) with Gamma_e = (0,...,0,-r_e);
    the modal tail follows from stationarity, x_ne = -(a_n + lambda_n b_n)
    / lambda_n * u_e.  The reconstructed boundary value trace_e uses the
    w-series over the basis plus the analytic remainder of the tail
    series, so its accuracy is set by the tail tolerance rather than by
    the basis length.
    """
    if aug.K is None:
        raise ValueError("model has no gain; place poles first")
    A_K = aug.A_K
    rhs = aug.B_a * p_e
    rhs = rhs.copy()
    rhs[-1] -= r_e
    Y = -np.linalg.solve(A_K, rhs)
    Y -= np.linalg.solve(A_K, A_K @ Y + rhs)    # refinement: residual re-solve
    u_e = float(aug.K @ Y + p_e)

    lam = basis.lam
    if np.any(np.abs(lam) < 1e-12):
        raise ValueError("equilibrium undefined: an eigenvalue vanishes")
    x_ne = -(basis.input_gain / lam) * u_e

    w_e1 = (x_ne + basis.b_n * u_e) * basis.e1
    trace_e = float(w_e1.sum())
    if u_e != 0.0:
        tail, _, _ = trace_tail(basis.params, len(basis),
                                tol=1e-8 / max(1.0, abs(u_e)))
        trace_e -= u_e * tail

    return Equilibrium(r_e=float(r_e), p_e=float(p_e), Y_ae=_readonly(Y),
                       u_e=u_e, x_ne=_readonly(x_ne), trace_e=trace_e)


def design_feedback(params: PlantParams, *, sim_modes: int = 40,
                    poles=None, alpha_tol: float = 1e-8,
                    basis: SpectralBasis | None = None) -> Design:
    """Full synthesis pipeline: basis, N, alpha, gates, placement.

    Refuses (DesignGateError) unless lambda_{N+1} < -2 sqrt(5) |c| and
    every requested pole satisfies Re mu < -3 |c|.
    """
    if basis is None:
        basis = build_basis(params, sim_modes)
    c = params.c
    N = select_mode_count(basis, c)
    mode_gate = -MODE_GATE_FACTOR * abs(c)
    if not basis.lam[N + 1] < mode_gate:
        raise DesignGateError(
            f"lambda_{N + 1} = {basis.lam[N + 1]:.6g} does not clear {mode_gate:.6g}"
        )

    trunc = assemble_truncated(basis, N)
    alpha = compute_alpha(basis, N, tol=alpha_tol)
    aug = assemble_augmented(trunc, alpha.value)

    pole_arr = default_poles(basis, N, c) if poles is None else np.atleast_1d(np.asarray(poles, dtype=complex))
    pole_gate = -POLE_GATE_FACTOR * abs(c)
    bad = [complex(p) for p in pole_arr if not p.real < pole_gate]
    if bad:
        shown = ", ".join(f"{p.real:g}" if p.imag == 0 else f"{p:g}" for p in bad)
        raise DesignGateError(
            f"poles [{shown}] violate Re mu < {pole_gate:.6g} (= -3|c|)"
        )

    rank = kalman_check(aug.A_a, aug.B_a)
    if rank < aug.dim:
        raise DesignGateError(
            f"Kalman rank {rank} < {aug.dim}; augmented pair not controllable"
        )
    placement = place_poles(aug.A_a, aug.B_a, pole_arr)
    if placement.residual > 1e-6:
        raise DesignGateError(
            f"placed spectrum off by {placement.residual:.3e} > 1e-6"
        )
    return Design(basis=basis, N=N, model=with_gain(aug, placement.K, pole_arr),
                  placement=placement, alpha=alpha)
