"""Sturm-Liouville eigenstructure of the delayed reaction-diffusion operator.

The operator A f = a f'' + (b + c) f on (0, 1) with f(0) = 0 and the Robin
condition cos(theta) f(1) + sin(theta) f'(1) = 0 has a simple discrete
spectrum.  Writing eigenfunctions as multiples of sin(r x), the condition
at x = 1 forces

    r cot(r) = -cot(theta),

with exactly one root r_n per branch (n pi, (n+1) pi), found here by
bisection.  The normalised eigenfunctions and eigenvalues are

    e_n(x) = kappa_n sin(r_n x),  kappa_n = 2 sqrt(r_n / (2 r_n - sin 2 r_n)),
    lambda_n = b + c - a r_n**2.

The boundary lift [L u](x) = (1 - x)^2 u turns the actuated boundary value
into an interior source; the design consumes its projections

    b_n = -<L1, e_n>,        a_n = <A L1, e_n>,

for which closed forms exist because A L1 = 2a + (b + c)(1 - x)^2:
with I(r) = int_0^1 (1-x)^2 sin(r x) dx = 1/r - 2(1 - cos r)/r^3,

    b_n = -kappa_n I(r_n),
    a_n = kappa_n (2 a (1 - cos r_n)/r_n + (b + c) I(r_n)),

and e_n'(0) = kappa_n r_n.  The exact identity a_n + lambda_n b_n =
a e_n'(0) follows by two integrations by parts and is enforced as an
invariant.  Adaptive quadrature is kept only as an independent
cross-check of the closed forms, never on the design path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .quadrature import adaptive_simpson

__all__ = [
    "PlantParams",
    "ModeData",
    "SpectralBasis",
    "RootSolverError",
    "TailConvergenceError",
    "find_root_rn",
    "build_basis",
    "eigenfunction_value",
    "eigenfunction_matrix",
    "inner_product",
    "inner_products",
    "AlphaResult",
    "compute_alpha",
    "trace_tail",
]

_BRACKET_EPS = 1e-9
_MAX_BISECT = 200
_RESIDUAL_TOL = 1e-12


class RootSolverError(RuntimeError):
    """Bisection failed; theta is pathologically close to 0 or pi/2."""


class TailConvergenceError(RuntimeError):
    """A spectral tail series did not converge within the term budget."""


@dataclass(frozen=True)
class PlantParams:
    """Parameters of y_t = a y_xx + b y + c y(t - h(t)) with h in [h_m, h_M]."""

    a: float
    b: float
    c: float
    theta: float
    h_m: float
    h_M: float

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError("diffusivity a must be positive")
        if self.c == 0.0:
            raise ValueError("delayed-reaction coefficient c must be nonzero")
        if not 0.0 < self.theta < 0.5 * math.pi:
            raise ValueError("Robin angle theta must lie strictly inside (0, pi/2)")
        if not 0.0 < self.h_m < self.h_M:
            raise ValueError("delay bounds must satisfy 0 < h_m < h_M")


@dataclass(frozen=True)
class ModeData:
    """Eigendata and projection constants of one mode."""

    n: int
    r: float      # root of r cot r = -cot theta in (n pi, (n+1) pi)
    lam: float    # eigenvalue b + c - a r^2
    e1: float     # e_n(1)
    ed0: float    # e_n'(0)
    a_n: float    # <A L1, e_n>
    b_n: float    # -<L1, e_n>


def _branch_residuals(r: np.ndarray, theta: float) -> np.ndarray:
    """Scaled residual |r cot r + cot theta| / max(1, r^2).

    The absolute residual of a correctly rounded root grows like eps * r^2
    at large r (rounding of r cot r alone), so the raw residual is not a
    meaningful accuracy measure across branches; the scaled one is ~eps.
    """
    g = r / np.tan(r) + 1.0 / math.tan(theta)
    return np.abs(g) / np.maximum(1.0, r * r)


def _find_roots(ns: np.ndarray, theta: float) -> np.ndarray:
    """Vectorised bisection for the branch roots of r cot r = -cot theta."""
    if not 0.0 < theta < 0.5 * math.pi:
        raise ValueError("theta must lie strictly inside (0, pi/2)")
    target = -1.0 / math.tan(theta)
    ns = np.asarray(ns, dtype=float)
    lo = ns * math.pi + _BRACKET_EPS
    hi = (ns + 1.0) * math.pi - _BRACKET_EPS

    def g(r):
        return r / np.tan(r) - target

    # r cot r decreases from +inf to -inf on each branch, so the endpoints
    # must straddle the root; they fail to only for theta at the excluded
    # boundary angles where cot blows up.
    if not (np.all(g(lo) > 0.0) and np.all(g(hi) < 0.0)):
        raise RootSolverError(
            f"bracket endpoints do not straddle the root for theta={theta!r}"
        )
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        above = g(mid) > 0.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    else:
        raise RootSolverError("bisection exhausted its iteration budget")

    r = 0.5 * (lo + hi)
    res = _branch_residuals(r, theta)
    if np.any(res >= _RESIDUAL_TOL):
        worst = int(np.argmax(res))
        raise RootSolverError(
            f"scaled residual {res[worst]:.3e} at branch n={int(ns[worst])} "
            f"exceeds {_RESIDUAL_TOL:g}"
        )
    return r


def find_root_rn(n: int, theta: float) -> float:
    """Unique root of r cot r = -cot(theta) in (n pi, (n+1) pi)."""
    if n < 0:
        raise ValueError("branch index n must be nonnegative")
    return float(_find_roots(np.array([n]), theta)[0])


def _mode_arrays(params: PlantParams, ns: np.ndarray):
    """Closed-form eigendata for the given branch indices, vectorised."""
    r = _find_roots(ns, params.theta)
    lam = params.b + params.c - params.a * r * r
    kappa = 2.0 * np.sqrt(r / (2.0 * r - np.sin(2.0 * r)))
    e1 = kappa * np.sin(r)
    ed0 = kappa * r
    omc = 1.0 - np.cos(r)
    lift = 1.0 / r - 2.0 * omc / r**3          # int (1-x)^2 sin(r x) dx
    b_n = -kappa * lift
    a_n = kappa * (2.0 * params.a * omc / r + (params.b + params.c) * lift)
    return r, lam, e1, ed0, a_n, b_n


@dataclass(frozen=True)
class SpectralBasis:
    """Ordered eigendata of the first len(modes) modes for one plant."""

    params: PlantParams
    modes: tuple[ModeData, ...]

    def __len__(self) -> int:
        return len(self.modes)

    def _field(self, name: str) -> np.ndarray:
        arr = np.array([getattr(m, name) for m in self.modes])
        arr.setflags(write=False)
        return arr

    @cached_property
    def r(self) -> np.ndarray:
        return self._field("r")

    @cached_property
    def lam(self) -> np.ndarray:
        return self._field("lam")

    @cached_property
    def e1(self) -> np.ndarray:
        return self._field("e1")

    @cached_property
    def ed0(self) -> np.ndarray:
        return self._field("ed0")

    @cached_property
    def a_n(self) -> np.ndarray:
        return self._field("a_n")

    @cached_property
    def b_n(self) -> np.ndarray:
        return self._field("b_n")

    @cached_property
    def input_gain(self) -> np.ndarray:
        """Modal input coefficients a_n + lambda_n b_n (= a e_n'(0))."""
        arr = self.a_n + self.lam * self.b_n
        arr.setflags(write=False)
        return arr


def build_basis(params: PlantParams, count: int) -> SpectralBasis:
    """First `count` modes of the plant's eigenstructure."""
    if count < 1:
        raise ValueError("count must be at least 1")
    ns = np.arange(count)
    r, lam, e1, ed0, a_n, b_n = _mode_arrays(params, ns)
    modes = tuple(
        ModeData(int(n), float(r[i]), float(lam[i]), float(e1[i]),
                 float(ed0[i]), float(a_n[i]), float(b_n[i]))
        for i, n in enumerate(ns)
    )
    return SpectralBasis(params, modes)


def _check_index(basis: SpectralBasis, n: int) -> ModeData:
    if not 0 <= n < len(basis):
        raise IndexError(f"mode index {n} out of range for basis of {len(basis)}")
    return basis.modes[n]


def eigenfunction_value(basis: SpectralBasis, n: int, x):
    """e_n(x) = kappa_n sin(r_n x); accepts scalar or array x."""
    mode = _check_index(basis, n)
    kappa = mode.ed0 / mode.r
    return kappa * np.sin(mode.r * np.asarray(x, dtype=float))


def eigenfunction_matrix(basis: SpectralBasis, x, count: int | None = None) -> np.ndarray:
    """Matrix E[i, n] = e_n(x_i) for the first `count` modes (default: all)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(basis) if count is None else int(count)
    if not 1 <= m <= len(basis):
        raise IndexError(f"count {m} out of range for basis of {len(basis)}")
    r = basis.r[:m]
    kappa = basis.ed0[:m] / r
    return np.sin(xs[:, None] * r[None, :]) * kappa[None, :]


def inner_product(f: Callable, basis: SpectralBasis, n: int, *, tol: float = 1e-10) -> float:
    """<f, e_n> by adaptive quadrature; f must accept array arguments."""
    _check_index(basis, n)
    return adaptive_simpson(
        lambda x: np.asarray(f(x), dtype=float) * eigenfunction_value(basis, n, x),
        0.0, 1.0, tol=tol,
    )


def inner_products(f: Callable, basis: SpectralBasis, *, count: int | None = None,
                   tol: float = 1e-10) -> np.ndarray:
    """<f, e_n> for the first `count` modes at once (shared subdivision)."""
    return np.atleast_1d(adaptive_simpson(
        lambda x: np.asarray(f(x), dtype=float)[:, None]
        * eigenfunction_matrix(basis, x, count),
        0.0, 1.0, tol=tol,
    ))


class AlphaResult(NamedTuple):
    value: float
    remainder: float     # bound on the neglected tail, |last term| * 10
    tail_terms: int      # number of terms summed beyond the design modes


def trace_tail(params: PlantParams, start: int, *, tol: float = 1e-8,
               hard_cap: int = 100_000, first_block: int = 64):
    """Sum_{n >= start} (a_n / lambda_n) e_n(1), extended until convergence.

    The terms decay like 1/r_n^3 with asymptotically alternating signs, so
    ten times the magnitude of the last included term is a conservative
    remainder bound.  Returns (value, remainder, n_terms).
    """
    if start < 0:
        raise ValueError("start must be nonnegative")
    total = 0.0
    n0 = start
    block = max(int(first_block), 1)
    terms = 0
    while terms < hard_cap:
        n1 = min(n0 + block, start + hard_cap)
        ns = np.arange(n0, n1)
        _, lam, e1, _, a_n, _ = _mode_arrays(params, ns)
        if np.any(np.abs(lam) < 1e-9):
            raise ValueError("an eigenvalue vanishes inside the tail series")
        term = a_n / lam * e1
        total += float(term.sum())
        terms += ns.size
        remainder = 10.0 * abs(float(term[-1]))
        if remainder < tol:
            return total, remainder, terms
        n0 = n1
        block *= 2
    raise TailConvergenceError(
        f"tail remainder still above {tol:g} after {hard_cap} terms"
    )


def compute_alpha(basis: SpectralBasis, N: int, tail_depth: int | None = None,
                  *, tol: float = 1e-8, hard_cap: int = 100_000) -> AlphaResult:
    """Input coefficient of the integral component,

        alpha = sum_{n<=N} b_n e_n(1) - sum_{n>N} (a_n / lambda_n) e_n(1).

    The tail starts with `tail_depth` terms (a modest default if omitted)
    and is extended adaptively until the remainder estimate drops below
    `tol`; a hard cap guards against non-convergence.
    """
    if not 0 <= N < len(basis):
        raise ValueError(f"design order N={N} outside basis of {len(basis)} modes")
    head = float(np.dot(basis.b_n[: N + 1], basis.e1[: N + 1]))
    tail, remainder, terms = trace_tail(
        basis.params, N + 1, tol=tol, hard_cap=hard_cap,
        first_block=tail_depth if tail_depth is not None else 64,
    )
    return AlphaResult(head - tail, remainder, terms)
