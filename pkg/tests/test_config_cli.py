import json
import os

import numpy as np
import pytest
import yaml

from sfqsim.cli import dispatch, main
from sfqsim.config import ConfigError, config_from_dict, paper_defaults_dict, parse_config
from sfqsim.quasiparticles import QPDecayModel, decay_law

MINIMAL_RABI = """
experiment: rabi
transmon: {frequency_hz: 4.958e9, anharmonicity_hz: -220e6, dim: 2}
coupling: {c_c_f: 400e-18, c_f: 86.66e-15}
rabi:
  subharmonic: 3
  durations_s: {start: 0.0, stop: 30e-9, num: 16}
"""


class TestParseConfig:
    def test_minimal_rabi(self):
        cfg = parse_config(MINIMAL_RABI)
        assert cfg.experiment == "rabi"
        assert cfg.seed == 0
        assert cfg.physics.decoherence is None
        assert cfg.params["subharmonic"] == 3
        assert cfg.params["durations"].size == 16

    def test_paper_defaults_preset_loads_cleanly(self):
        cfg = parse_config("", preset="paper-defaults")
        phys = cfg.physics
        assert phys.transmon.omega10 == pytest.approx(2 * np.pi * 4.958e9)
        assert phys.transmon.alpha == pytest.approx(-2 * np.pi * 220e6)
        assert phys.decoherence.t1_residual == pytest.approx(23.6e-6)
        assert phys.decoherence.t2_star_residual == pytest.approx(24.4e-6)
        assert phys.coupling.c_c == pytest.approx(400e-18)
        assert phys.delta_theta() == pytest.approx(np.pi / 46, rel=1e-9)
        assert phys.qp.eta == pytest.approx(1.6e-3)

    def test_every_experiment_block_in_preset_validates(self):
        for experiment in ("rabi", "chevron", "ramsey", "rabi2d", "staircase",
                           "rb", "qp-poison", "qp-recovery", "dispersion"):
            cfg = parse_config("", preset="paper-defaults",
                               overrides={"experiment": experiment})
            assert cfg.experiment == experiment

    def test_t2_exceeding_2t1_names_field(self):
        doc = MINIMAL_RABI + "decoherence: {t1_s: 10e-6, t2_star_s: 25e-6}\n"
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert any("t2_star" in e for e in err.value.errors)

    def test_unknown_keys_rejected(self):
        doc = MINIMAL_RABI + "bogus_block: 1\n"
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert any("bogus_block" in e and "unknown" in e for e in err.value.errors)

    def test_all_errors_collected(self):
        doc = """
experiment: rabi
transmon: {frequency_hz: -1.0, anharmonicity_hz: -220e6, dim: 1, junk: 2}
coupling: {c_c_f: 400e-18}
rabi: {durations_s: []}
"""
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        text = "\n".join(err.value.errors)
        assert "frequency_hz" in text
        assert "dim" in text
        assert "junk" in text
        assert "c_f" in text
        assert "durations_s" in text
        assert len(err.value.errors) >= 5

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError) as err:
            parse_config("experiment: warp\n")
        assert any("experiment" in e for e in err.value.errors)

    def test_overrides_win(self):
        cfg = parse_config(MINIMAL_RABI, overrides={"seed": 99, "output_dir": "zz"})
        assert cfg.seed == 99
        assert cfg.output_dir == "zz"

    def test_document_wins_over_preset(self):
        doc = "experiment: rabi\ntransmon: {frequency_hz: 5.0e9, anharmonicity_hz: -220e6}\n"
        cfg = parse_config(doc, preset="paper-defaults")
        assert cfg.physics.transmon.omega10 == pytest.approx(2 * np.pi * 5.0e9)

    def test_invalid_yaml(self):
        with pytest.raises(ConfigError):
            parse_config("experiment: [unclosed\n")

    def test_explicit_grid_list(self):
        doc = MINIMAL_RABI.replace("{start: 0.0, stop: 30e-9, num: 16}", "[0.0, 1e-9, 2e-9]")
        cfg = parse_config(doc)
        np.testing.assert_allclose(cfg.params["durations"], [0.0, 1e-9, 2e-9])

    def test_shots_validated(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL_RABI + "shots: -5\n")
        cfg = parse_config(MINIMAL_RABI + "shots: 100\n")
        assert cfg.shots == 100


class TestDispatch:
    def run(self, tmp_path, experiment, extra=None, seed=0):
        data = paper_defaults_dict()
        data["experiment"] = experiment
        data["output_dir"] = str(tmp_path)
        data["seed"] = seed
        # desk-scale grids for test speed
        data["rabi"]["durations_s"] = {"start": 0.0, "stop": 30e-9, "num": 13}
        data["chevron"]["detunings_hz"] = [-5e6, 0.0, 5e6]
        data["chevron"]["durations_s"] = {"start": 0.0, "stop": 30e-9, "num": 7}
        data["ramsey"]["delays_s"] = {"start": 0.0, "stop": 1e-6, "num": 11}
        data["rabi2d"]["phases_rad"] = [0.0, 0.5, 1.0]
        data["rabi2d"]["durations_s"] = {"start": 0.0, "stop": 15e-9, "num": 5}
        data["staircase"]["durations_s"] = {"start": 0.0, "stop": 50e-9, "num": 9}
        data["rb"]["sequence_lengths"] = [1, 2, 4, 8]
        data["rb"]["randomizations"] = 4
        if extra:
            for key, value in extra.items():
                data[key] = value
        return config_from_dict(data), dispatch(config_from_dict(data))

    @pytest.mark.parametrize("experiment", ["rabi", "staircase", "chevron", "ramsey", "rabi2d"])
    def test_sweep_experiments_produce_artifacts(self, tmp_path, experiment):
        cfg, status = self.run(tmp_path, experiment)
        assert status == 0
        csv = tmp_path / f"{experiment}.csv"
        assert csv.exists()
        header = csv.read_text().splitlines()[0].split(",")
        assert header[-4:] == ["p0", "p1", "p2", "p3"]
        assert (tmp_path / f"{experiment}.meta.json").exists()
        assert (tmp_path / f"{experiment}_summary.txt").exists()

    def test_rabi_csv_columns(self, tmp_path):
        cfg, status = self.run(tmp_path, "rabi")
        assert status == 0
        header = (tmp_path / "rabi.csv").read_text().splitlines()[0]
        assert header == "duration_s,p0,p1,p2,p3"

    def test_reruns_byte_identical(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        self.run(out_a, "rabi", seed=7)
        self.run(out_b, "rabi", seed=7)
        assert (out_a / "rabi.csv").read_bytes() == (out_b / "rabi.csv").read_bytes()

    def test_metadata_round_trips(self, tmp_path):
        cfg, status = self.run(tmp_path, "rabi", seed=3)
        meta = json.loads((tmp_path / "rabi.meta.json").read_text())
        round_tripped = config_from_dict(meta["config"])
        assert round_tripped.experiment == cfg.experiment
        assert round_tripped.seed == cfg.seed
        assert round_tripped.physics == cfg.physics
        np.testing.assert_array_equal(round_tripped.params["durations"],
                                      cfg.params["durations"])

    def test_rb_run_writes_report(self, tmp_path):
        cfg, status = self.run(tmp_path, "rb")
        assert status == 0
        report = (tmp_path / "rb_report.txt").read_text()
        assert "p =" in report
        assert "average Clifford fidelity" in report
        assert "gate fidelity" in report
        assert (tmp_path / "rb_reference_survivals.csv").exists()
        assert (tmp_path / "rb_interleaved_survivals.csv").exists()
        assert (tmp_path / "gate_table.txt").exists()
        assert (tmp_path / "clifford_table.txt").exists()
        fits = (tmp_path / "rb_fits.csv").read_text().strip().splitlines()
        assert fits[0] == "role,label,A,B,p,A_err,B_err,p_err,residual_norm"
        assert fits[1].startswith("reference,")
        assert fits[2].startswith("interleaved,X/2,")

    def test_rabi_bias_sweep(self, tmp_path):
        cfg, status = self.run(
            tmp_path, "rabi",
            extra={"rabi": {
                "subharmonic": 3,
                "durations_s": {"start": 0.0, "stop": 20e-9, "num": 5},
                "bias": {"values": [0.5, 0.8], "window": [0.7, 0.9]},
            }},
        )
        assert status == 0
        lines = (tmp_path / "rabi.csv").read_text().strip().splitlines()
        assert lines[0] == "bias,duration_s,p0,p1,p2,p3"
        assert len(lines) == 1 + 2 * 5
        summary = (tmp_path / "rabi_summary.txt").read_text()
        assert "bias window" in summary

    def test_bad_bias_window_rejected(self):
        data = paper_defaults_dict()
        data["rabi"]["bias"] = {"values": [0.5], "window": [0.9, 0.7]}
        with pytest.raises(ConfigError, match="bias.window"):
            config_from_dict(data)

    def test_qp_poison_outputs(self, tmp_path):
        cfg, status = self.run(tmp_path, "qp-poison")
        assert status == 0
        rows = (tmp_path / "qp-poison.csv").read_text().strip().splitlines()
        assert rows[0] == "n_slips,n_qp_added,n_qp_end"
        first = rows[1].split(",")
        assert float(first[1]) == 0.0

    def test_qp_recovery_outputs(self, tmp_path):
        cfg, status = self.run(tmp_path, "qp-recovery")
        assert status == 0
        summary = (tmp_path / "qp-recovery_summary.txt").read_text()
        assert "fitted trapping time" in summary

    def test_dispersion_outputs(self, tmp_path):
        cfg, status = self.run(tmp_path, "dispersion")
        assert status == 0
        summary = (tmp_path / "dispersion_summary.txt").read_text()
        assert "parametric slope" in summary
        header = (tmp_path / "dispersion.csv").read_text().splitlines()[0]
        assert header == "recovery_time_s,n_qp,gamma_qp_per_s,delta_omega_rad_s"

    def test_fit_decay_on_synthetic_dataset(self, tmp_path):
        truth = QPDecayModel(n_qp=1.03, t1_qp=5e-6, t1_r=23.6e-6)
        times = np.linspace(0.05e-6, 100e-6, 60)
        data = tmp_path / "decay.csv"
        with open(data, "w") as fh:
            fh.write("time_s,p1\n")
            for t, p in zip(times, decay_law(times, truth)):
                fh.write(f"{t:.17g},{p:.17g}\n")
        cfg, status = self.run(
            tmp_path, "fit-decay",
            extra={"fit-decay": {"input_csv": str(data), "fix": None}},
        )
        assert status == 0
        result = json.loads((tmp_path / "fit-decay.json").read_text())
        assert result["params"]["n_qp"] == pytest.approx(1.03, rel=1e-3)

    def test_failure_writes_marker(self, tmp_path):
        cfg, status = self.run(
            tmp_path, "fit-decay",
            extra={"fit-decay": {"input_csv": str(tmp_path / "missing.csv"), "fix": None}},
        )
        assert status == 1
        marker = tmp_path / "fit-decay.FAILED"
        assert marker.exists()
        assert "missing.csv" in marker.read_text()

    def test_writes_only_inside_output_dir(self, tmp_path):
        out = tmp_path / "only_here"
        before = set(os.listdir(tmp_path))
        self.run(out, "rabi")
        after = set(os.listdir(tmp_path))
        assert after - before == {"only_here"}


class TestMain:
    def test_preset_run(self, tmp_path, capsys):
        status = main(["rabi", "--preset", "paper-defaults", "--out", str(tmp_path),
                       "--seed", "5"])
        assert status == 0
        assert (tmp_path / "rabi.csv").exists()
        meta = json.loads((tmp_path / "rabi.meta.json").read_text())
        assert meta["seed"] == 5

    def test_config_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(MINIMAL_RABI + f"output_dir: {tmp_path / 'out'}\n")
        status = main(["rabi", "--config", str(path)])
        assert status == 0
        assert (tmp_path / "out" / "rabi.csv").exists()

    def test_requires_config_or_preset(self, capsys):
        assert main(["rabi"]) == 2
        assert "required" in capsys.readouterr().err

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("experiment: rabi\n")
        assert main(["rabi", "--config", str(path)]) == 2
        assert "invalid configuration" in capsys.readouterr().err

    def test_missing_file_exits_2(self, capsys):
        assert main(["rabi", "--config", "/nonexistent/x.yaml"]) == 2

    def test_json_config_accepted(self, tmp_path):
        data = yaml.safe_load(MINIMAL_RABI)
        data["output_dir"] = str(tmp_path / "out")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        assert main(["rabi", "--config", str(path)]) == 0
