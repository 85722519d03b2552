"""Physical outputs and diagnostics reconstructed from modal trajectories.

Boundary values use the shifted coefficients w_n = x_n + b_n u rather than
the raw modal series: the raw series for y(t, 1) converges only on the
operator domain, while the w-series (state minus boundary lift) converges
for every input and decays one power faster.  The lift (1 - x)^2 u is
added back explicitly when a full spatial profile is requested.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .signals import Signal
from .spectral import SpectralBasis, eigenfunction_matrix
from .simulate import Trajectory

__all__ = [
    "RegulationReport",
    "DecayFit",
    "boundary_trace",
    "with_boundary_trace",
    "field_on_grid",
    "fit_decay_rate",
    "regulation_metrics",
]


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential rate of a norm history."""

    kappa_hat: float           # decay rate (positive = decaying)
    window: tuple              # (t_lo, t_hi) actually used
    residual: float            # RMS residual of the log-linear fit
    n_samples: int


@dataclass(frozen=True)
class RegulationReport:
    """Setpoint-tracking quality of one run."""

    final_error: float         # |y1(t_end) - r(t_end)|
    settled: bool
    settle_time: float | None  # first entry into the +-2% band, never leaving
    settle_band: float
    max_overshoot: float       # worst excursion past the final reference
    steady_mean_error: float   # mean |y1 - r| on the last 10% of the horizon
    steady_max_error: float    # max |y1 - r| on that window
    steady_window: tuple


def boundary_trace(basis: SpectralBasis, x_modal: np.ndarray, u) -> np.ndarray | float:
    """y(t, 1) = sum_n (x_n + b_n u) e_n(1), truncated at the modes given.

    x_modal may be one state (M,) or a stack (T, M); u scalar or (T,).
    """
    x = np.asarray(x_modal, dtype=float)
    m = x.shape[-1]
    if m > len(basis):
        raise ValueError(f"{m} modal values but basis holds {len(basis)}")
    b = basis.b_n[:m]
    e1 = basis.e1[:m]
    w = x + np.multiply.outer(np.asarray(u, dtype=float), b)
    out = w @ e1
    return float(out) if out.ndim == 0 else out


def with_boundary_trace(traj: Trajectory, basis: SpectralBasis | None = None) -> Trajectory:
    """Return the trajectory with its y1 column filled in."""
    if basis is None:
        basis = traj.scenario.design.basis
    y1 = np.asarray(boundary_trace(basis, traj.modal, traj.u))
    y1.setflags(write=False)
    return dataclasses.replace(traj, y1=y1)


def field_on_grid(basis: SpectralBasis, x_modal: np.ndarray, u: float,
                  xs) -> np.ndarray:
    """Spatial profile y(t, x) = sum (x_n + b_n u) e_n(x) + (1 - x)^2 u."""
    x = np.asarray(x_modal, dtype=float)
    m = x.shape[-1]
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    E = eigenfunction_matrix(basis, xs, m)
    w = x + basis.b_n[:m] * float(u)
    return E @ w + (1.0 - xs) ** 2 * float(u)


def fit_decay_rate(times, norms, window: tuple | None = None) -> DecayFit:
    """Fit norms ~ C exp(-kappa t) by log-linear least squares.

    Only strictly positive samples inside the window take part; fewer than
    ten make the fit meaningless and raise.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(norms, dtype=float)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    mask = (t >= window[0]) & (t <= window[1]) & (v > 1e-14)
    if mask.sum() < 10:
        raise ValueError("need at least 10 positive norm samples in the window")
    tw, vw = t[mask], np.log(v[mask])
    slope, intercept = np.polyfit(tw, vw, 1)
    resid = vw - (slope * tw + intercept)
    return DecayFit(kappa_hat=float(-slope),
                    window=(float(tw[0]), float(tw[-1])),
                    residual=float(np.sqrt(np.mean(resid ** 2))),
                    n_samples=int(mask.sum()))


def regulation_metrics(traj: Trajectory, r_signal: Signal | None = None,
                       *, band_fraction: float = 0.02,
                       steady_fraction: float = 0.10) -> RegulationReport:
    """Tracking metrics of a trajectory whose boundary trace is filled.

    The settle band is band_fraction times the final reference step size
    (falling back to |r_final| for constant references), measured about the
    final reference value; steady statistics live on the trailing
    steady_fraction of the horizon.
    """
    if traj.y1 is None:
        raise ValueError("trajectory has no boundary trace; fill it first")
    t = traj.times
    r = traj.r if r_signal is None else np.atleast_1d(r_signal(t)).astype(float)
    y = traj.y1
    err = y - r

    r_final = float(r[-1])
    step = abs(r_final - float(r[0]))
    scale = step if step > 0.0 else abs(r_final)
    band = band_fraction * scale if scale > 0.0 else band_fraction

    dev_final = np.abs(y - r_final)
    outside = dev_final > band
    if outside.any():
        last_out = int(np.nonzero(outside)[0][-1])
        settled = last_out + 1 < t.size
        settle_time = float(t[last_out + 1]) if settled else None
    else:
        settled, settle_time = True, float(t[0])

    direction = float(np.sign(r_final - float(y[0])))
    if direction == 0.0:
        direction = 1.0
    overshoot = float(np.max((y - r_final) * direction, initial=0.0))

    t_lo = float(t[-1]) - steady_fraction * (float(t[-1]) - float(t[0]))
    steady = t >= t_lo
    return RegulationReport(
        final_error=float(abs(err[-1])),
        settled=settled,
        settle_time=settle_time,
        settle_band=float(band),
        max_overshoot=overshoot,
        steady_mean_error=float(np.mean(np.abs(err[steady]))),
        steady_max_error=float(np.max(np.abs(err[steady]))),
        steady_window=(t_lo, float(t[-1])),
    )
