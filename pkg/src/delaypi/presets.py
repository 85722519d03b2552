"""Built-in experiment configurations.

Three presets cover the reference experiments:

* ``fig1``: time-varying delay h(t) = 1 + sin(5 pi t + pi/4)/2, reference
  raised to 5 through an oscillatory transient, perturbation p resting at
  1, surging smoothly to 25 around t = 30 s and settling at 6.
* ``fig2_sweep``: constant plant delays h in {1, 2, 3, 4} against a
  controller that always assumes h_hat = 1, same reference, constant p.
* ``stabilization_only``: r = p = 0, pure decay from the standard initial
  field.

Presets are plain config dicts (the same tree the YAML front end reads),
so they can be dumped, edited and re-run byte-identically.
"""

from __future__ import annotations

import math

__all__ = ["PRESETS", "preset_config"]


def _plant_fig1() -> dict:
    return {
        "a": 0.2, "b": 2.0, "c": 1.0, "theta": math.pi / 3.0,
        "h_m": 0.5, "h_M": 1.5,
    }


def _h_fig1() -> dict:
    return {"kind": "sinusoid", "offset": 1.0, "amplitude": 0.5,
            "omega": 5.0 * math.pi, "phase": math.pi / 4.0}


def _r_rise_to_5() -> dict:
    # 0 until t=10, then 2.5 - 2.5 cos(pi (t-10)/2): an oscillatory swing
    # between 0 and 5 that lands at 5 with zero slope at t=20 (C^1 overall).
    return {
        "kind": "piecewise",
        "breaks": [10.0, 20.0],
        "pieces": [
            {"kind": "constant", "value": 0.0},
            {"kind": "sinusoid", "offset": 2.5, "amplitude": 2.5,
             "omega": 0.5 * math.pi, "phase": 0.5 * math.pi - 5.0 * math.pi},
            {"kind": "constant", "value": 5.0},
        ],
    }


def _p_fig1() -> dict:
    # Plateau at 1, smooth surge to 25 by t=30, smooth fall to 6 by t=40.
    return {
        "kind": "piecewise",
        "breaks": [25.0, 30.0, 40.0],
        "pieces": [
            {"kind": "constant", "value": 1.0},
            {"kind": "smoothstep", "t0": 25.0, "t1": 30.0, "v0": 1.0, "v1": 25.0},
            {"kind": "smoothstep", "t0": 30.0, "t1": 40.0, "v0": 25.0, "v1": 6.0},
            {"kind": "constant", "value": 6.0},
        ],
    }


def _phi_standard() -> dict:
    # phi(tau, x) = 10 cos(3 pi tau) x (1 - x)^2
    return {
        "kind": "separable",
        "time": {"kind": "sinusoid", "offset": 0.0, "amplitude": 10.0,
                 "omega": 3.0 * math.pi, "phase": 0.5 * math.pi},
        "space": {"kind": "poly_bump", "scale": 1.0},
    }


def _fig1() -> dict:
    return {
        "plant": _plant_fig1(),
        "design": {"modes": 40, "poles": [-4.0, -5.0, -6.0]},
        "signals": {
            "h": _h_fig1(),
            "r": _r_rise_to_5(),
            "p": _p_fig1(),
        },
        "initial": {"field": _phi_standard(), "zeta0": "auto"},
        "integrator": {"t_end": 50.0, "dt": 1e-3, "store_stride": 10, "interp": 1},
    }


def _fig2_sweep() -> dict:
    plant = _plant_fig1()
    plant["h_M"] = 4.5   # must admit the swept constant delays up to 4
    return {
        "plant": plant,
        "design": {"modes": 40, "poles": [-4.0, -5.0, -6.0]},
        "signals": {
            "h": {"kind": "constant", "value": 1.0},
            "h_hat": {"kind": "constant", "value": 1.0},
            "r": _r_rise_to_5(),
            "p": {"kind": "constant", "value": 1.0},
        },
        "initial": {"field": _phi_standard(), "zeta0": "auto"},
        "integrator": {"t_end": 50.0, "dt": 1e-3, "store_stride": 10, "interp": 1},
        "sweep": {"h_values": [1.0, 2.0, 3.0, 4.0]},
    }


def _stabilization_only() -> dict:
    return {
        "plant": _plant_fig1(),
        "design": {"modes": 40, "poles": [-4.0, -5.0, -6.0]},
        "signals": {
            "h": _h_fig1(),
            "r": {"kind": "constant", "value": 0.0},
            "p": {"kind": "constant", "value": 0.0},
        },
        "initial": {"field": _phi_standard(), "zeta0": "auto"},
        "integrator": {"t_end": 10.0, "dt": 1e-3, "store_stride": 10, "interp": 1},
    }


PRESETS = {
    "fig1": _fig1,
    "fig2_sweep": _fig2_sweep,
    "stabilization_only": _stabilization_only,
}


def preset_config(name: str) -> dict:
    """Fresh config dict for a named preset."""
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return builder()
