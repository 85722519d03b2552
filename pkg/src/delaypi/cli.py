"""Scenario-driven command-line front end.

Verbs:

* ``design``  -- print the design report (eigenvalues, N, alpha, gain,
  closed-loop spectrum) for a preset or config file.
* ``run``     -- integrate one scenario and write trace.csv, report.json,
  optional field snapshots and a plotting script into --out.
* ``sweep``   -- run every value of the config's sweep block (one output
  directory per run) plus a comparison summary.

Configs are YAML trees; ``--preset`` names a built-in config.  Exit codes:
0 success, 2 config/validation error, 3 simulation divergence, 4 design
gate refusal.  All data files are written with 12 significant digits and
no timestamps, so identical configs produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import math
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import yaml

from .analysis import fit_decay_rate, regulation_metrics, with_boundary_trace
from .presets import PRESETS, preset_config
from .signals import as_signal
from .simulate import (
    DivergenceError,
    Scenario,
    ScenarioError,
    initial_field_from_dict,
    run,
)
from .spectral import PlantParams
from .synthesis import Design, DesignGateError, design_feedback, verify_spectrum

__all__ = [
    "RunConfig",
    "parse_scenario",
    "scenario_from_config",
    "scenario_to_config",
    "config_from_args",
    "run_experiment",
    "sweep_experiment",
    "design_report",
    "main",
]

_TOP_KEYS = {"plant", "design", "signals", "initial", "integrator", "sweep"}
_REQUIRED_HINT = ("required sections: plant {a,b,c,theta,h_m,h_M}, "
                  "signals {h,r,p}, initial {field}")


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: scenario source, output dir and overrides."""

    preset: str | None = None
    config_path: str | None = None
    out_dir: str | None = None
    dt: float | None = None
    modes: int | None = None
    t_end: float | None = None
    poles: tuple | None = None
    field_times: tuple = ()
    emit_plot: bool = True


def _reject_unknown(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(extra)}")


def _ctx(path: str, fn, *args, **kwargs):
    """Run a constructor, prefixing validation errors with the config path."""
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def load_config(cfg: RunConfig) -> dict:
    """Config dict from preset or YAML file, with overrides applied."""
    if (cfg.preset is None) == (cfg.config_path is None):
        raise ScenarioError("exactly one of --preset or --config is required")
    if cfg.preset is not None:
        if cfg.preset not in PRESETS:
            raise ScenarioError(
                f"unknown preset {cfg.preset!r}; available: {sorted(PRESETS)}"
            )
        tree = preset_config(cfg.preset)
    else:
        text = pathlib.Path(cfg.config_path).read_text()
        tree = _load_yaml(text)
    return apply_overrides(tree, cfg)


def _load_yaml(text: str) -> dict:
    tree = yaml.safe_load(text)   # YAMLError carries line/column marks
    if tree is None:
        raise ScenarioError(f"config is empty; {_REQUIRED_HINT}")
    if not isinstance(tree, dict):
        raise ScenarioError("config root must be a mapping of sections")
    return tree


def apply_overrides(tree: dict, cfg: RunConfig) -> dict:
    tree = copy.deepcopy(tree)
    if cfg.dt is not None or cfg.t_end is not None:
        integ = tree.setdefault("integrator", {})
        if cfg.dt is not None:
            integ["dt"] = cfg.dt
        if cfg.t_end is not None:
            integ["t_end"] = cfg.t_end
    if cfg.modes is not None or cfg.poles is not None:
        design = tree.setdefault("design", {})
        if cfg.modes is not None:
            design["modes"] = cfg.modes
        if cfg.poles is not None:
            design["poles"] = list(cfg.poles)
    return tree


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a YAML scenario config."""
    return scenario_from_config(_load_yaml(text))


def _design_from_config(tree: dict) -> Design:
    if "plant" not in tree:
        raise ScenarioError(f"missing 'plant' section; {_REQUIRED_HINT}")
    plant = tree["plant"]
    if not isinstance(plant, dict):
        raise ScenarioError("plant: must be a mapping")
    _reject_unknown(plant, {"a", "b", "c", "theta", "h_m", "h_M"}, "plant")
    missing = {"a", "b", "c", "theta", "h_m", "h_M"} - set(plant)
    if missing:
        raise ScenarioError(f"plant: missing key(s) {sorted(missing)}")
    params = _ctx("plant", PlantParams, **{k: float(v) for k, v in plant.items()})

    dsec = tree.get("design", {}) or {}
    if not isinstance(dsec, dict):
        raise ScenarioError("design: must be a mapping")
    _reject_unknown(dsec, {"modes", "poles", "alpha_tol"}, "design")
    modes = int(dsec.get("modes", 40))
    if modes < 1:
        raise ScenarioError("design.modes: must be a positive integer")
    poles = dsec.get("poles")
    if poles is not None:
        poles = [complex(p) if isinstance(p, complex) else float(p) for p in poles]
    alpha_tol = float(dsec.get("alpha_tol", 1e-8))
    return design_feedback(params, sim_modes=modes, poles=poles,
                           alpha_tol=alpha_tol)


def scenario_from_config(tree: dict) -> Scenario:
    """Build a validated Scenario (including the design) from a config tree."""
    if not isinstance(tree, dict):
        raise ScenarioError("config root must be a mapping of sections")
    _reject_unknown(tree, _TOP_KEYS, "top level")
    design = _design_from_config(tree)

    if "signals" not in tree or not isinstance(tree["signals"], dict):
        raise ScenarioError(f"missing 'signals' section; {_REQUIRED_HINT}")
    sig = tree["signals"]
    _reject_unknown(sig, {"h", "h_hat", "r", "p"}, "signals")
    for key in ("h", "r", "p"):
        if key not in sig:
            raise ScenarioError(f"signals: missing required signal {key!r}")
    h = _ctx("signals.h", as_signal, sig["h"])
    r = _ctx("signals.r", as_signal, sig["r"])
    p = _ctx("signals.p", as_signal, sig["p"])
    h_hat = _ctx("signals.h_hat", as_signal, sig["h_hat"]) if "h_hat" in sig else None

    if "initial" not in tree or not isinstance(tree["initial"], dict):
        raise ScenarioError(f"missing 'initial' section; {_REQUIRED_HINT}")
    init = tree["initial"]
    _reject_unknown(init, {"field", "zeta0"}, "initial")
    if "field" not in init:
        raise ScenarioError("initial: missing 'field' descriptor")
    phi = _ctx("initial.field", initial_field_from_dict, init["field"])
    zeta0 = init.get("zeta0", "auto")
    if zeta0 != "auto":
        zeta0 = _ctx("initial.zeta0", as_signal, zeta0)

    integ = tree.get("integrator", {}) or {}
    if not isinstance(integ, dict):
        raise ScenarioError("integrator: must be a mapping")
    _reject_unknown(integ, {"t_end", "dt", "store_stride", "interp"}, "integrator")

    return _ctx("scenario", Scenario,
                design=design, h=h, r=r, p=p, phi=phi, h_hat=h_hat, zeta0=zeta0,
                t_end=float(integ.get("t_end", 10.0)),
                dt=float(integ.get("dt", 1e-3)),
                interp=int(integ.get("interp", 1)),
                store_stride=int(integ.get("store_stride", 10)))


def scenario_to_config(scn: Scenario) -> dict:
    """Config tree reproducing the scenario; inverse of scenario_from_config.

    Callable initial data or zeta0 seeds have no dict form and raise.
    """
    p = scn.params
    design = scn.design
    poles = design.model.poles
    if poles is None:
        raise ScenarioError("scenario design carries no poles to serialise")
    if np.max(np.abs(np.imag(np.asarray(poles, complex)))) > 0.0:
        raise ScenarioError("complex poles have no config form")
    tree = {
        "plant": {"a": p.a, "b": p.b, "c": p.c, "theta": p.theta,
                  "h_m": p.h_m, "h_M": p.h_M},
        "design": {"modes": len(design.basis),
                   "poles": [float(np.real(v)) for v in poles]},
        "signals": {"h": scn.h.to_dict(), "r": scn.r.to_dict(),
                    "p": scn.p.to_dict()},
        "initial": {"field": scn.phi.to_dict()},
        "integrator": {"t_end": scn.t_end, "dt": scn.dt,
                       "store_stride": scn.store_stride,
                       "interp": scn.interp},
    }
    if scn.h_hat is not None:
        tree["signals"]["h_hat"] = scn.h_hat.to_dict()
    if isinstance(scn.zeta0, str):
        tree["initial"]["zeta0"] = scn.zeta0
    elif hasattr(scn.zeta0, "to_dict"):
        tree["initial"]["zeta0"] = scn.zeta0.to_dict()
    else:
        raise ScenarioError("callable zeta0 seeds have no config form")
    return tree


# ---------------------------------------------------------------------------
# artifacts


def _write_trace(path: pathlib.Path, traj):
    cols = np.column_stack([
        traj.times, traj.y1, traj.u, traj.zeta, traj.state_norm,
        traj.r, traj.p, traj.h, traj.h_hat,
    ])
    np.savetxt(path, cols, fmt="%.12g", delimiter=",",
               header="t,y1,u,zeta,state_norm,r,p,h,h_hat", comments="")


def _write_field_snapshots(out: pathlib.Path, traj, basis, field_times):
    from .analysis import field_on_grid

    xs = np.linspace(0.0, 1.0, 201)
    written = []
    for t_req in field_times:
        i = int(np.argmin(np.abs(traj.times - t_req)))
        field = field_on_grid(basis, traj.modal[i], float(traj.u[i]), xs)
        name = f"field_t{traj.times[i]:g}.csv"
        rows = np.vstack([xs, field])
        np.savetxt(out / name, rows, fmt="%.12g", delimiter=",")
        written.append(name)
    return written


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot the trace.csv next to this script (needs numpy + matplotlib).\"\"\"
import pathlib

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
d = np.genfromtxt(here / "trace.csv", delimiter=",", names=True)

fig, ax = plt.subplots(4, 1, sharex=True, figsize=(8, 11))
ax[0].plot(d["t"], d["y1"], label="y(t,1)")
ax[0].plot(d["t"], d["r"], "--", label="r(t)")
ax[0].set_ylabel("boundary trace")
ax[0].legend(loc="best")
ax[1].plot(d["t"], d["u"], color="tab:red")
ax[1].set_ylabel("u(t)")
ax[2].plot(d["t"], d["p"], label="p(t)")
ax[2].plot(d["t"], d["h"], label="h(t)")
ax[2].plot(d["t"], d["h_hat"], ":", label="h_hat(t)")
ax[2].set_ylabel("signals")
ax[2].legend(loc="best")
ax[3].semilogy(d["t"], np.maximum(d["state_norm"], 1e-300), color="tab:green")
ax[3].set_ylabel("state norm")
ax[3].set_xlabel("t")
fig.tight_layout()
fig.savefig(here / "trace.png", dpi=150)
print(here / "trace.png")
"""

_SWEEP_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Overlay the boundary traces of every sweep run (needs matplotlib).\"\"\"
import pathlib

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
fig, ax = plt.subplots(figsize=(8, 5))
for sub in sorted(here.glob("h_*/trace.csv")):
    d = np.genfromtxt(sub, delimiter=",", names=True)
    ax.plot(d["t"], d["y1"], label=sub.parent.name)
    ref = d["r"]
ax.plot(d["t"], ref, "k--", label="r(t)")
ax.set_xlabel("t")
ax.set_ylabel("y(t,1)")
ax.legend(loc="best")
fig.tight_layout()
fig.savefig(here / "sweep.png", dpi=150)
print(here / "sweep.png")
"""


def _design_summary(design: Design) -> dict:
    n_show = design.N + 2
    lam = [float(v) for v in design.basis.lam[:n_show]]
    residual = verify_spectrum(design.model.A_K, design.model.poles)
    return {
        "lambda": lam,
        "N": design.N,
        "mode_gate": -2.0 * math.sqrt(5.0) * abs(design.params.c),
        "alpha": design.alpha.value,
        "alpha_remainder": design.alpha.remainder,
        "alpha_tail_terms": design.alpha.tail_terms,
        "kalman_rank": design.model.dim,
        "K": [float(v) for v in design.K],
        "poles": [float(np.real(v)) for v in design.model.poles],
        "spectrum_residual": float(residual),
        "conditioning": design.placement.cond,
        "warning": design.placement.warning,
    }


def run_experiment(cfg: RunConfig) -> int:
    """Run one scenario and write its artifacts; returns the exit status."""
    tree = load_config(cfg)
    tree.pop("sweep", None)
    scenario = scenario_from_config(tree)
    if cfg.out_dir is None:
        raise ScenarioError("an output directory is required (--out)")
    out = pathlib.Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    traj = with_boundary_trace(run(scenario))
    metrics = regulation_metrics(traj)
    try:
        decay = dataclasses.asdict(fit_decay_rate(
            traj.times, traj.state_norm,
            window=(0.2 * float(traj.times[-1]), float(traj.times[-1]))))
    except ValueError:
        decay = None

    _write_trace(out / "trace.csv", traj)
    snapshots = _write_field_snapshots(out, traj, scenario.design.basis,
                                       cfg.field_times)
    if cfg.emit_plot:
        (out / "plot_trace.py").write_text(_PLOT_SCRIPT)

    report = {
        "design": _design_summary(scenario.design),
        "regulation": dataclasses.asdict(metrics),
        "decay": decay,
        "scenario": tree,
        "artifacts": ["trace.csv"] + snapshots
        + (["plot_trace.py"] if cfg.emit_plot else []),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def sweep_experiment(cfg: RunConfig) -> int:
    """Run the config's sweep block: one subdirectory per swept delay."""
    tree = load_config(cfg)
    sweep = tree.get("sweep")
    if not sweep or "h_values" not in sweep:
        raise ScenarioError("sweep requires a 'sweep: {h_values: [...]}' block")
    _reject_unknown(sweep, {"h_values"}, "sweep")
    values = [float(v) for v in sweep["h_values"]]
    if not values:
        raise ScenarioError("sweep.h_values must not be empty")
    if cfg.out_dir is None:
        raise ScenarioError("an output directory is required (--out)")
    out = pathlib.Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(h_value: float):
        sub_tree = copy.deepcopy(tree)
        sub_tree.pop("sweep", None)
        sub_tree["signals"]["h"] = {"kind": "constant", "value": h_value}
        scenario = scenario_from_config(sub_tree)
        sub_out = out / f"h_{h_value:g}"
        sub_out.mkdir(parents=True, exist_ok=True)
        traj = with_boundary_trace(run(scenario))
        metrics = regulation_metrics(traj)
        _write_trace(sub_out / "trace.csv", traj)
        if cfg.emit_plot:
            (sub_out / "plot_trace.py").write_text(_PLOT_SCRIPT)
        report = {
            "design": _design_summary(scenario.design),
            "regulation": dataclasses.asdict(metrics),
            "scenario": sub_tree,
        }
        (sub_out / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
        return h_value, metrics

    with ThreadPoolExecutor(max_workers=min(4, len(values))) as pool:
        results = list(pool.map(one, values))

    summary = {
        "h_values": values,
        "h_hat": tree["signals"].get("h_hat"),
        "runs": [
            {"h": h, "dir": f"h_{h:g}",
             "final_error": m.final_error,
             "steady_max_error": m.steady_max_error,
             "settled": m.settled}
            for h, m in results
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if cfg.emit_plot:
        (out / "plot_sweep.py").write_text(_SWEEP_PLOT_SCRIPT)
    return 0


def design_report(cfg: RunConfig) -> str:
    """Deterministic text summary of the design for a config or preset."""
    tree = load_config(cfg)
    design = _design_from_config(tree)
    s = _design_summary(design)
    p = design.params
    lines = [
        f"plant: a={p.a:g} b={p.b:g} c={p.c:g} theta={p.theta:.10g} "
        f"delay range [{p.h_m:g}, {p.h_M:g}]",
        f"basis modes: {len(design.basis)}",
    ]
    for i, lam in enumerate(s["lambda"]):
        lines.append(f"lambda_{i} = {lam:.4f}")
    lines += [
        f"mode gate -2*sqrt(5)*|c| = {s['mode_gate']:.4f}  ->  N = {s['N']}",
        f"alpha = {s['alpha']:.10g} (tail remainder <= {s['alpha_remainder']:.3g} "
        f"after {s['alpha_tail_terms']} terms)",
        f"kalman rank = {s['kalman_rank']} / {design.model.dim}",
        "K = [" + " ".join(f"{v:.12g}" for v in s["K"]) + "]",
        "requested poles: " + " ".join(f"{v:g}" for v in s["poles"]),
        f"closed-loop spectrum residual = {s['spectrum_residual']:.3g}",
        f"controllability conditioning = {s['conditioning']:.6g}",
    ]
    if s["warning"]:
        lines.append(f"warning: {s['warning']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing


def _parse_poles(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad pole list {text!r}: {exc}")


def _parse_times(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}: {exc}")


def _add_source_flags(sp):
    sp.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    sp.add_argument("--config", dest="config_path", metavar="FILE",
                    help="YAML scenario config")
    sp.add_argument("--modes", type=int, help="override simulated mode count")
    sp.add_argument("--poles", type=_parse_poles, metavar="P0,P1,...",
                    help="override closed-loop poles (use --poles=-4,-5,-6)")


def _add_run_flags(sp):
    sp.add_argument("--out", dest="out_dir", metavar="DIR", required=True,
                    help="output directory for artifacts")
    sp.add_argument("--dt", type=float, help="override integrator step")
    sp.add_argument("--t-end", dest="t_end", type=float, help="override horizon")
    sp.add_argument("--no-plot", dest="emit_plot", action="store_false",
                    help="skip emitting the plotting script")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        preset=getattr(args, "preset", None),
        config_path=getattr(args, "config_path", None),
        out_dir=getattr(args, "out_dir", None),
        dt=getattr(args, "dt", None),
        modes=getattr(args, "modes", None),
        t_end=getattr(args, "t_end", None),
        poles=getattr(args, "poles", None),
        field_times=getattr(args, "field_times", ()) or (),
        emit_plot=getattr(args, "emit_plot", True),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaypi",
        description="Boundary PI control of a delayed reaction-diffusion "
                    "equation: design and closed-loop simulation.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("design", help="print the design report")
    _add_source_flags(sp)

    sp = sub.add_parser("run", help="run one scenario and write artifacts")
    _add_source_flags(sp)
    _add_run_flags(sp)
    sp.add_argument("--field-times", type=_parse_times, metavar="T0,T1,...",
                    help="emit field snapshots nearest these times")

    sp = sub.add_parser("sweep", help="run the config's delay sweep")
    _add_source_flags(sp)
    _add_run_flags(sp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        if args.verb == "design":
            print(design_report(cfg))
            return 0
        if args.verb == "run":
            return run_experiment(cfg)
        return sweep_experiment(cfg)
    except DesignGateError as exc:
        print(f"design gate refusal: {exc}", file=sys.stderr)
        return 4
    except DivergenceError as exc:
        print(f"simulation divergence: {exc}", file=sys.stderr)
        return 3
    except yaml.YAMLError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
