"""Experiment driver tests: config validation, audit bundles, scaling-law
sweeps, power-law fitting, and the command-line entry point."""

import dataclasses
import json

import numpy as np
import pytest

from hypwhitney.cli import (
    SWEEP_HEADER,
    ExperimentConfig,
    load_config,
    main,
    run_audits,
    run_scaling_law,
)
from hypwhitney.extension import QuadratureSpec
from hypwhitney.reports import fit_power_law


def small_config(**overrides):
    base = dict(
        rho_grid=(2.0**-4,),
        delta_grid=(2.0**-4,),
        tv_delta_grid=(2.0**-2, 2.0**-3),
        scaling_delta_grid=(2.0**-1, 2.0**-2, 2.0**-3, 2.0**-4),
        straight_delta_grid=(2.0, 4.0),
        samples=150,
        whitney_cap=256,
        quad=QuadratureSpec(truncation=(2.0**10,) * 3, freq_grid=(12, 12, 12)),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.p > 5.0 / 3.0 and cfg.q >= 2.0
        assert all(d > 0 for d in cfg.delta_grid)

    def test_json_roundtrip(self):
        cfg = small_config(seed=11, threads=2, negative_controls=True)
        data = json.loads(json.dumps(cfg.to_json_dict()))
        back = ExperimentConfig.from_json_dict(data)
        assert back.to_json_dict() == cfg.to_json_dict()
        assert back.quad == cfg.quad

    def test_exponent_window(self):
        with pytest.raises(ValueError):
            ExperimentConfig(p=5.0 / 3.0)
        with pytest.raises(ValueError):
            ExperimentConfig(q=1.5)
        # conjugate-exponent gap only binds in the linear regime
        ExperimentConfig(p=1.75)
        with pytest.raises(ValueError):
            ExperimentConfig(linear_regime=True, p=2.0, q=2.0)
        ExperimentConfig(linear_regime=True, p=4.0, q=2.0)

    def test_grids_must_be_dyadic(self):
        with pytest.raises(ValueError):
            ExperimentConfig(rho_grid=(0.3,))
        with pytest.raises(ValueError):
            ExperimentConfig(delta_grid=(2.0**-3, 0.75))
        with pytest.raises(ValueError):
            ExperimentConfig(C0=24.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_json_dict({"no_such_field": 1})

    def test_load_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 9, "samples": 5}))
        cfg = load_config(path)
        assert cfg.seed == 9 and cfg.samples == 5


class TestFitPowerLaw:
    def test_exact_square_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_power_law(x, x**2)
        assert fit.exponent == pytest.approx(2.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_noisy_half_power(self):
        rng = np.random.default_rng(3)
        x = np.geomspace(1.0, 64.0, 12)
        y = 3.0 * np.sqrt(x) * (1.0 + 0.01 * rng.standard_normal(12))
        fit = fit_power_law(x, y)
        assert abs(fit.exponent - 0.5) <= 0.05
        assert np.exp(fit.log_prefactor) == pytest.approx(3.0, rel=0.05)

    def test_single_x_errors(self):
        with pytest.raises(ValueError):
            fit_power_law([2.0], [5.0])
        with pytest.raises(ValueError):
            fit_power_law([2.0, 2.0], [5.0, 6.0])


class TestRunAudits:
    def test_empty_grids_empty_bundle(self):
        cfg = ExperimentConfig(rho_grid=(), delta_grid=(), tv_delta_grid=(),
                               samples=10)
        bundle = run_audits(cfg)
        assert bundle["audits"] == []
        assert bundle["passed"] is True
        assert bundle["schema"] == "hypwhitney/1"

    def test_bundle_structure(self):
        bundle = run_audits(small_config())
        names = [a["name"] for a in bundle["audits"]]
        assert names[0] == "surface_identities"
        assert "tau_bounds:rho=2^-4,delta=2^-4" in names
        assert "reduction_residual:rho=2^-4,delta=2^-4" in names
        assert "prototype_tv_stability" in names
        assert "whitney_disjoint:rho=2^-4" in names
        assert "sumset_x:rho=2^-4,delta=2^-4" in names
        for entry in bundle["audits"]:
            assert entry["negative_control"] is False
            assert entry["expected_pass"] is True
            assert isinstance(entry["pass"], bool)

    def test_negative_controls_marked_and_failing(self):
        bundle = run_audits(small_config(negative_controls=True))
        ncs = [a for a in bundle["audits"] if a["negative_control"]]
        assert {a["name"] for a in ncs} == {
            "nc:tau_bounds_corrupted",
            "nc:sumset_x_shrunken",
            "nc:overlap_kappa_tiny",
        }
        for entry in ncs:
            assert entry["expected_pass"] is False
            assert entry["pass"] is False
        # controls never enter the aggregate
        base = {a["name"]: a["pass"] for a in run_audits(small_config())["audits"]}
        assert bundle["passed"] == all(base.values())

    def test_deterministic_and_thread_independent(self):
        cfg = small_config(seed=21)
        one = json.dumps(run_audits(cfg), sort_keys=True)
        two = json.dumps(run_audits(cfg), sort_keys=True)
        assert one == two
        threaded = run_audits(dataclasses.replace(cfg, threads=4))
        threaded["config"]["threads"] = 1
        assert json.dumps(threaded, sort_keys=True) == one


class TestRunScalingLaw:
    def test_prototype_regime(self):
        res = run_scaling_law(small_config(), "prototype")
        assert res["regime"] == "prototype"
        assert res["theory_exponent"] == pytest.approx(0.5)
        assert len(res["rows"]) == 4
        for row in res["rows"]:
            assert set(row) == {"delta", "rho", "p", "q", "ratio",
                                "truncation", "refinement_delta"}
            assert row["rho"] == 1.0 and row["ratio"] > 0
        assert res["band"][0] == pytest.approx(0.5 - 0.15)
        assert res["within_band"] == (res["fit"]["exponent"] >= res["band"][0])

    def test_prototype_ratios_decrease_with_scale(self):
        res = run_scaling_law(small_config(), "prototype")
        ratios = [r["ratio"] for r in sorted(res["rows"], key=lambda r: r["delta"])]
        assert ratios == sorted(ratios)

    def test_straight_regime(self):
        res = run_scaling_law(small_config(), "straight")
        assert res["theory_exponent"] == pytest.approx(0.0)
        assert len(res["rows"]) == 2
        for row in res["rows"]:
            assert row["rho"] == 2.0**-6
            assert row["truncation"] == 2.0**13
        lo, hi = res["band"]
        assert res["within_band"] == (lo <= res["fit"]["exponent"] <= hi)

    def test_theory_exponent_general_q(self):
        res = run_scaling_law(small_config(p=4.0, q=4.0), "prototype")
        assert res["theory_exponent"] == pytest.approx(5.0 - 3.0 / 4.0 - 6.0 / 4.0)
        res = run_scaling_law(small_config(p=4.0, q=4.0), "straight")
        assert res["theory_exponent"] == pytest.approx(2.0 * (1.0 - 0.25 - 0.25))

    def test_preconditions(self):
        with pytest.raises(ValueError):
            run_scaling_law(small_config(), "nonsense")
        with pytest.raises(ValueError):
            run_scaling_law(small_config(scaling_delta_grid=(0.5, 0.25)), "prototype")
        with pytest.raises(ValueError):
            run_scaling_law(small_config(scaling_delta_grid=(1.0, 0.5, 0.25, 0.125)),
                            "prototype")
        with pytest.raises(ValueError):
            run_scaling_law(small_config(straight_delta_grid=(2.0,)), "straight")
        with pytest.raises(ValueError):
            run_scaling_law(small_config(straight_delta_grid=(0.5, 2.0)), "straight")

    def test_deterministic(self):
        cfg = small_config()
        assert run_scaling_law(cfg, "prototype") == run_scaling_law(cfg, "prototype")


class TestMain:
    def write_config(self, tmp_path, **overrides):
        cfg = small_config(**overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_json_dict()))
        return path

    def test_audit_subcommand(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out = tmp_path / "run"
        code = main(["audit", "--config", str(cfgp), "--out", str(out), "--seed", "5"])
        report = json.loads((out / "report.json").read_text())
        assert report["schema"] == "hypwhitney/1"
        assert report["config"]["seed"] == 5
        assert code == (0 if report["passed"] else 1)

    def test_decompose_subcommand(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out = tmp_path / "dec"
        assert main(["decompose", "--config", str(cfgp), "--out", str(out)]) == 0
        payload = json.loads((out / "decomposition.json").read_text())
        assert len(payload["decompositions"]) == 1
        assert (out / "pairs_rho_4.jsonl").read_text().strip()

    def test_transversality_subcommand(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out = tmp_path / "tv"
        assert main(["transversality", "--config", str(cfgp), "--out", str(out)]) == 0
        payload = json.loads((out / "transversality.json").read_text())
        assert payload["passed"] is True

    def test_sumsets_subcommand(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out = tmp_path / "ss"
        main(["sumsets", "--config", str(cfgp), "--out", str(out),
              "--negative-controls"])
        payload = json.loads((out / "sumsets.json").read_text())
        flags = [a["negative_control"] for a in payload["audits"]]
        assert True in flags and False in flags
        shrunken = [a for a in payload["audits"] if a["negative_control"]]
        assert all(not a["pass"] for a in shrunken)

    def test_scaling_law_subcommand_outputs(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out = tmp_path / "sl"
        main(["scaling-law", "--config", str(cfgp), "--out", str(out)])
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 1 + 4 + 2
        for line in lines[1:]:
            assert len(line.split(",")) == 7
        payload = json.loads((out / "scaling.json").read_text())
        assert payload["prototype"]["fit"]["r_squared"] <= 1.0

    def test_byte_identical_reruns(self, tmp_path):
        cfgp = self.write_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["scaling-law", "--config", str(cfgp), "--out", str(out1)])
        main(["scaling-law", "--config", str(cfgp), "--out", str(out2)])
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
        j1 = json.loads((out1 / "scaling.json").read_text())
        j2 = json.loads((out2 / "scaling.json").read_text())
        j1["config"]["output_dir"] = j2["config"]["output_dir"] = ""
        assert j1 == j2

    def test_flag_overrides(self, tmp_path):
        cfgp = self.write_config(tmp_path, seed=1)
        out = tmp_path / "ov"
        main(["transversality", "--config", str(cfgp), "--out", str(out),
              "--seed", "99", "--threads", "2"])
        payload = json.loads((out / "transversality.json").read_text())
        assert payload["config"]["seed"] == 99
        assert payload["config"]["threads"] == 2
