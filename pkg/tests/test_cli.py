"""Command-line front end: config validation, artifacts, exit codes."""

import json
import pathlib

import numpy as np
import pytest
import yaml

from delaypi import run
from delaypi.cli import (
    RunConfig,
    design_report,
    load_config,
    main,
    parse_scenario,
    scenario_from_config,
    scenario_to_config,
)
from delaypi.presets import PRESETS, preset_config
from delaypi.simulate import ScenarioError

FIG1_YAML = yaml.safe_dump(preset_config("fig1"))


def short_tree(preset="stabilization_only", t_end=2.0):
    tree = preset_config(preset)
    tree.setdefault("integrator", {})["t_end"] = t_end
    return tree


class TestParsing:
    def test_fig1_preset_parameters(self):
        scn = parse_scenario(FIG1_YAML)
        p = scn.params
        assert (p.a, p.b, p.c) == (0.2, 2.0, 1.0)
        assert p.theta == pytest.approx(np.pi / 3)
        assert (p.h_m, p.h_M) == (0.5, 1.5)
        np.testing.assert_allclose(scn.design.model.poles, [-4, -5, -6])
        assert scn.t_end == 50.0
        # Moving targets: p walks 1 -> 25 -> 6, r ends at 5.
        assert scn.p(0.0) == 1.0
        assert scn.p(30.0) == pytest.approx(25.0, abs=1e-9)
        assert scn.p(45.0) == 6.0
        assert scn.r(0.0) == 0.0
        assert scn.r(30.0) == 5.0
        assert scn.h(0.0) == pytest.approx(1.3535533905932737)

    def test_empty_config_lists_required_keys(self):
        with pytest.raises(ScenarioError, match="plant"):
            parse_scenario("")

    def test_yaml_error_carries_position(self):
        with pytest.raises(yaml.YAMLError, match="line"):
            parse_scenario("plant: {a: 0.2,\n  b: [unclosed")

    def test_unknown_top_level_key(self):
        tree = short_tree()
        tree["plnt"] = {}
        with pytest.raises(ScenarioError, match="plnt"):
            scenario_from_config(tree)

    def test_unknown_signal_kind_names_path(self):
        tree = short_tree()
        tree["signals"]["h"] = {"kind": "wiggle", "value": 1.0}
        with pytest.raises(ScenarioError, match="signals.h"):
            scenario_from_config(tree)

    def test_missing_plant_key(self):
        tree = short_tree()
        del tree["plant"]["theta"]
        with pytest.raises(ScenarioError, match="theta"):
            scenario_from_config(tree)

    def test_delay_amplitude_out_of_bounds(self):
        tree = short_tree()
        tree["signals"]["h"] = {"kind": "constant", "value": 2.0}
        scn = scenario_from_config(tree)   # static config is fine
        with pytest.raises(ScenarioError, match="h"):
            run(scn)                       # the bound is checked on the grid

    def test_round_trip_yields_equivalent_run(self):
        scn = scenario_from_config(short_tree(t_end=1.0))
        clone = scenario_from_config(scenario_to_config(scn))
        ta, tb = run(scn), run(clone)
        assert np.array_equal(ta.modal, tb.modal)
        assert np.array_equal(ta.u, tb.u)


class TestPresets:
    def test_known_names(self):
        assert set(PRESETS) == {"fig1", "fig2_sweep", "stabilization_only"}
        with pytest.raises(ValueError, match="available"):
            preset_config("fig3")

    def test_all_presets_parse(self):
        for name in PRESETS:
            scn = scenario_from_config(preset_config(name))
            assert scn.design.N == 1

    def test_fig2_sweep_block(self):
        tree = preset_config("fig2_sweep")
        assert tree["sweep"]["h_values"] == [1.0, 2.0, 3.0, 4.0]
        assert tree["signals"]["h_hat"] == {"kind": "constant", "value": 1.0}
        assert tree["plant"]["h_M"] >= 4.0

    def test_stabilization_preset_is_autonomous(self):
        tree = preset_config("stabilization_only")
        scn = scenario_from_config(tree)
        ts = np.linspace(0.0, scn.t_end, 7)
        assert np.all(scn.r(ts) == 0.0)
        assert np.all(scn.p(ts) == 0.0)


class TestDesignVerb:
    def test_report_contents(self):
        text = design_report(RunConfig(preset="fig1"))
        assert "lambda_0 = 2.3005" in text
        assert "lambda_1 = -1.6683" in text
        assert "lambda_2 = -9.5665" in text
        assert "N = 1" in text
        assert "alpha = 0.2077193111" in text
        assert "kalman rank = 3 / 3" in text
        assert "-4 -5 -6" in text

    def test_report_deterministic(self):
        cfg = RunConfig(preset="fig1")
        assert design_report(cfg) == design_report(cfg)

    def test_exit_codes(self, capsys):
        assert main(["design", "--preset", "fig1"]) == 0
        assert main(["design", "--preset", "fig1", "--poles=-1,-2,-3"]) == 4
        err = capsys.readouterr().err
        assert "-3" in err and "refusal" in err
        assert main(["design", "--preset", "fig1", "--modes", "2"]) == 2
        assert main(["design", "--config", "/no/such/file.yaml"]) == 2


class TestRunVerb:
    def test_artifacts_and_header(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "--preset", "stabilization_only",
                     "--out", str(out), "--t-end", "2",
                     "--field-times", "0,2"])
        assert code == 0
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "t,y1,u,zeta,state_norm,r,p,h,h_hat"
        assert len(trace) == 2 + 200   # header + t=0..2 at stride 10
        assert (out / "plot_trace.py").exists()
        assert (out / "field_t0.csv").exists()
        assert (out / "field_t2.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["design"]["N"] == 1
        assert report["decay"]["kappa_hat"] > 0.0
        assert report["scenario"]["integrator"]["t_end"] == 2

    def test_field_snapshot_layout(self, tmp_path):
        out = tmp_path / "run"
        main(["run", "--preset", "stabilization_only", "--out", str(out),
              "--t-end", "1", "--field-times", "0"])
        rows = (out / "field_t0.csv").read_text().splitlines()
        assert len(rows) == 2
        xs = np.array([float(v) for v in rows[0].split(",")])
        assert xs.size == 201
        assert xs[0] == 0.0 and xs[-1] == 1.0
        assert len(rows[1].split(",")) == xs.size

    def test_determinism_byte_identical(self, tmp_path):
        args = ["run", "--preset", "stabilization_only", "--t-end", "1"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        for name in ("trace.csv", "report.json"):
            assert ((tmp_path / "a" / name).read_bytes()
                    == (tmp_path / "b" / name).read_bytes())

    def test_divergence_exit_code(self, tmp_path, capsys):
        cfg = short_tree()
        cfg["initial"]["field"]["space"]["scale"] = 1e308
        path = tmp_path / "blowup.yaml"
        path.write_text(yaml.safe_dump(cfg))
        code = main(["run", "--config", str(path), "--out",
                     str(tmp_path / "out")])
        assert code == 3
        assert "divergence" in capsys.readouterr().err

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("plant: {a: 0.2}\n")
        assert main(["run", "--config", str(path),
                     "--out", str(tmp_path / "out")]) == 2

    def test_overrides_reach_scenario(self):
        cfg = RunConfig(preset="stabilization_only", dt=2e-3, t_end=3.0,
                        modes=30, poles=(-4.5, -5.5, -6.5))
        scn = scenario_from_config(load_config(cfg))
        assert scn.dt == 2e-3
        assert scn.t_end == 3.0
        assert len(scn.design.basis) == 30
        np.testing.assert_allclose(scn.design.model.poles, [-4.5, -5.5, -6.5])


class TestSweepVerb:
    def test_sweep_outputs(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--preset", "fig2_sweep", "--out", str(out),
                     "--t-end", "2"])
        assert code == 0
        subdirs = sorted(d.name for d in out.iterdir() if d.is_dir())
        assert subdirs == ["h_1", "h_2", "h_3", "h_4"]
        for sub in subdirs:
            assert (out / sub / "trace.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["h_values"] == [1.0, 2.0, 3.0, 4.0]
        assert [r["h"] for r in summary["runs"]] == [1.0, 2.0, 3.0, 4.0]
        assert (out / "plot_sweep.py").exists()

    def test_sweep_requires_block(self, tmp_path):
        assert main(["sweep", "--preset", "fig1",
                     "--out", str(tmp_path / "x")]) == 2

    def test_sweep_honours_h_hat(self, tmp_path):
        out = tmp_path / "sweep"
        main(["sweep", "--preset", "fig2_sweep", "--out", str(out),
              "--t-end", "1"])
        trace = np.genfromtxt(out / "h_3" / "trace.csv", delimiter=",",
                              names=True)
        assert np.all(trace["h"] == 3.0)
        assert np.all(trace["h_hat"] == 1.0)
