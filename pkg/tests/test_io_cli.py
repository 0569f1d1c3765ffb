import json
import math
from pathlib import Path

import numpy as np
import pytest

from noonscope import io
from noonscope.cli import main
from noonscope.config import ExperimentConfig, load_config, parse_override
from noonscope.errors import ConfigError, SchemaError
from noonscope.interference import InterferenceModel, PhotonBudget
from noonscope.optics import BeamGeometry, MaterialModel
from noonscope.scan import HeightMap, ScanConfig, StepProfile, default_positions, make_q_relief, scan_1d, scan_2d

GEOM = BeamGeometry(11.25, 45.0)
QMODEL = InterferenceModel(2, 0.952, 0.41)
# short scans keep the CLI tests quick
FAST = ["--set", "scan.step_um=2.0", "--threads", "1"]


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), *([] if "--threads" in args else ["--threads", "1"])])


class TestCsv:
    def test_round_trip(self, tmp_path):
        cols = {"a": [1.0, 2.5, 1e-12], "b": [3, 4, 5]}
        io.write_csv(tmp_path / "t.csv", cols, {"seed": 7, "note": "x"})
        meta, back = io.read_csv(tmp_path / "t.csv")
        assert meta == {"seed": "7", "note": "x"}
        np.testing.assert_array_equal(back["a"], cols["a"])

    def test_ten_significant_digits(self):
        assert io.fmt(math.pi) == "3.141592654"
        assert io.fmt(np.int64(5)) == "5"

    def test_scan_round_trip(self, tmp_path):
        cfg = ScanConfig(QMODEL, GEOM, PhotonBudget(460, 2), default_positions(step=5.0), 99)
        rec = scan_1d(StepProfile(17.3), cfg)
        io.write_scan_csv(tmp_path / "s.csv", rec, {"probe": "quantum"}, MaterialModel())
        back, mat, meta = io.read_scan_csv(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.sampled_counts, rec.sampled_counts)
        np.testing.assert_allclose(back.expected_counts, rec.expected_counts, rtol=1e-9)
        assert back.config.model == QMODEL and back.config.rng_seed == 99
        assert mat == MaterialModel() and meta["format"] == "noonscope-scan"

    def test_2d_round_trip(self, tmp_path):
        rec = scan_2d(HeightMap(make_q_relief(16), 5.0), ScanConfig(QMODEL, GEOM, PhotonBudget(460, 2)))
        io.write_scan_csv(tmp_path / "s.csv", rec)
        back, _, _ = io.read_scan_csv(tmp_path / "s.csv")
        assert back.shape == (16, 16)
        np.testing.assert_array_equal(back.image(), rec.image())

    def test_bad_column(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# dims=1\nx,sampled_counts\n0,1\n1,abc\n")
        with pytest.raises(SchemaError, match="sampled_counts"):
            io.read_csv(p)

    def test_negative_counts(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# dims=1\nx,sampled_counts\n0,1\n1,-2\n")
        with pytest.raises(SchemaError, match="row 2"):
            io.read_scan_csv(p)

    def test_missing_metadata(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("# dims=1\nx,sampled_counts\n0,1\n1,2\n")
        with pytest.raises(SchemaError, match="model.n_photons"):
            io.read_scan_csv(p)


class TestPgm:
    def test_round_trip(self, tmp_path):
        img = np.arange(12, dtype=float).reshape(3, 4) * 2 + 10
        io.write_pgm(tmp_path / "i.pgm", img, "demo")
        levels, comment = io.read_pgm(tmp_path / "i.pgm")
        assert levels.shape == (3, 4) and levels.min() == 0 and levels.max() == 65535
        np.testing.assert_allclose(10 + levels / 65535 * 22, img, atol=22 / 65535)
        assert "0 -> 10" in comment and "65535 -> 32" in comment and "demo" in comment

    def test_header_layout(self, tmp_path):
        io.write_pgm(tmp_path / "i.pgm", np.ones((2, 5)))
        raw = (tmp_path / "i.pgm").read_bytes()
        assert raw.startswith(b"P5\n#") and b"\n5 2\n65535\n" in raw
        assert len(raw) - raw.index(b"65535\n") - 6 == 2 * 5 * 2


class TestConfig:
    def test_defaults_valid(self):
        cfg = load_config()
        assert cfg.quantum.visibility == 0.952 and cfg.selected_probe().n_photons == 2

    def test_unknown_key_in_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"quantum": {"visibilty": 0.9}}))
        with pytest.raises(ConfigError, match="quantum.visibilty"):
            load_config(p)

    def test_partial_file_merges(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"quantum": {"visibility": 0.9}, "seed": 3}))
        cfg = load_config(p)
        assert cfg.quantum.visibility == 0.9 and cfg.quantum.bias_phase == 0.41 and cfg.seed == 3

    def test_override(self):
        cfg = load_config(overrides=["quantum.visibility=0.8", "probe=classical"])
        assert cfg.quantum.visibility == 0.8 and cfg.probe == "classical"

    @pytest.mark.parametrize("bad", ["quantum.nope=1", "novalue", "quantum.visibility=\"x\"",
                                     "quantum.visibility=1.5", "seed=-1", "probe=both"])
    def test_rejected_overrides(self, bad):
        with pytest.raises(ConfigError):
            load_config(overrides=[bad])

    def test_parse_override_json_and_string(self):
        assert parse_override("a.b=[1,2]") == (["a", "b"], [1, 2])
        assert parse_override("sample.heightmap=map.txt") == (["sample", "heightmap"], "map.txt")

    def test_hash_ignores_output_and_threads(self):
        a = ExperimentConfig()
        b = load_config(out="elsewhere", threads=3)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != load_config(seed=1).config_hash()


class TestCli:
    def test_fringe(self, tmp_path, capsys):
        assert run(tmp_path, "fringe") == 0
        m1, c1 = io.read_csv(tmp_path / "fringe_N1.csv")
        m2, c2 = io.read_csv(tmp_path / "fringe_N2.csv")
        assert abs(float(m2["fit.period"]) - math.pi) < 0.02 * math.pi
        assert abs(float(m2["fit.visibility"]) - 0.952) < 0.02
        assert m1["seed"] == str(ExperimentConfig().seed) and "config_hash" in m1

    def test_fringe_without_visibility(self, tmp_path, capsys):
        code = run(tmp_path, "fringe", "--set", "quantum.visibility=0")
        assert code == 2
        meta, _ = io.read_csv(tmp_path / "fringe_N2.csv")
        assert meta["fit_status"].startswith("failed")
        assert "visibility fit failed" in capsys.readouterr().err

    def test_fringe_deterministic(self, tmp_path):
        run(tmp_path / "a", "fringe")
        run(tmp_path / "b", "fringe")
        for name in ("fringe_N1.csv", "fringe_N2.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_scan_and_analyze_quantum(self, tmp_path, capsys):
        assert run(tmp_path, "scan", "--set", "sample.step_phase_rad=0.0626", "--seed", "5") == 0
        assert (tmp_path / "scan_quantum.config.json").is_file()
        assert run(tmp_path, "analyze", str(tmp_path / "scan_quantum.csv")) == 0
        out = capsys.readouterr().out
        assert "SNR" in out
        meta, cols = io.read_csv(tmp_path / "scan_quantum_snr.csv")
        assert 1.4 < cols["snr"][0] < 3.0
        assert meta["source_seed"] == "5"

    def test_scan_and_analyze_classical(self, tmp_path, capsys):
        args = ["--set", "probe=classical", "--set", "sample.step_phase_rad=0.0626", "--seed", "5"]
        assert run(tmp_path, "scan", *args) == 0
        assert run(tmp_path, "analyze", str(tmp_path / "scan_classical.csv")) == 0
        _, cols = io.read_csv(tmp_path / "scan_classical_snr.csv")
        assert 1.0 < cols["snr"][0] < 2.3

    def test_scan_deterministic_across_threads(self, tmp_path):
        run(tmp_path / "a", "scan", "--threads", "1")
        run(tmp_path / "b", "scan", "--threads", "2")
        assert (tmp_path / "a" / "scan_quantum.csv").read_bytes() == (tmp_path / "b" / "scan_quantum.csv").read_bytes()

    def test_q_relief_image(self, tmp_path):
        assert run(tmp_path, "scan", "--set", "sample.mode=heightmap2d") == 0
        levels, comment = io.read_pgm(tmp_path / "scan_quantum.pgm")
        record, _, _ = io.read_scan_csv(tmp_path / "scan_quantum.csv")
        img = record.image().astype(float)
        bg = 460 * QMODEL.background_probability
        assert levels.shape == (64, 64)
        assert np.max(np.abs(img - bg)) > 3 * math.sqrt(bg)

    def test_flat_heightmap_image(self, tmp_path):
        p = tmp_path / "flat.txt"
        np.savetxt(p, np.full((12, 12), 4.0))
        assert run(tmp_path, "scan", "--set", "sample.mode=heightmap2d", "--set", f"sample.heightmap={p}") == 0
        record, _, _ = io.read_scan_csv(tmp_path / "scan_quantum.csv")
        img = record.image()
        assert np.ptp(img) <= 6 * math.sqrt(460 * QMODEL.background_probability)

    def test_missing_heightmap(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = main(["scan", "--set", "sample.mode=heightmap2d", "--set", "sample.heightmap=/nonexistent.txt",
                     "--out", str(out)])
        assert code == 1
        assert not out.exists()
        assert "not found" in capsys.readouterr().err

    def test_truncated_csv(self, tmp_path, capsys):
        run(tmp_path, "scan")
        p = tmp_path / "scan_quantum.csv"
        text = p.read_text()
        p.write_text(text[: len(text) // 2].rsplit(",", 1)[0] + "\n")
        assert run(tmp_path, "analyze", str(p)) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        assert run(tmp_path, "scan", "--set", "scan.bogus=1") == 1
        assert "scan.bogus" in capsys.readouterr().err

    def test_bad_usage(self, capsys):
        assert main(["nosuchcommand"]) == 1

    def test_bias_sweep(self, tmp_path):
        args = ["--set", "sweep.points=3", "--set", "sweep.seeds_per_point=4", *FAST]
        assert run(tmp_path, "bias-sweep", *args) == 0
        meta, cols = io.read_csv(tmp_path / "bias_sweep_quantum.csv")
        assert meta["total_photons"] == "1150"
        assert len(cols["snr_analytic"]) == 3 and np.all(cols["snr_analytic"] > 0)


REDUCED = ["--set", "analysis.ensemble_seeds=12", "--set", "sweep.points=2", "--set", "sweep.seeds_per_point=4",
           "--set", "scan.step_um=2.0"]


class TestReproduce:
    def _rows(self, path):
        return {line.split("|")[1].strip(): line for line in Path(path).read_text().splitlines()
                if line.startswith("| ") and "|" in line[2:]}

    def test_report_and_determinism(self, tmp_path, capsys):
        run(tmp_path / "a", "reproduce", *REDUCED)
        run(tmp_path / "b", "reproduce", *REDUCED)
        a = (tmp_path / "a" / "reproduce.md").read_text()
        assert a == (tmp_path / "b" / "reproduce.md").read_text()
        row = self._rows(tmp_path / "a" / "reproduce.md")["quantum advantage (optimal SNR ratio)"]
        assert "| 1.3505 |" in row and "1.35 ± 0.12" in row and row.rstrip().endswith("PASS |")

    def test_low_quantum_visibility_fails(self, tmp_path, capsys):
        code = run(tmp_path, "reproduce", *REDUCED, "--set", "quantum.visibility=0.8")
        row = self._rows(tmp_path / "reproduce.md")["quantum advantage (optimal SNR ratio)"]
        assert row.rstrip().endswith("FAIL |")
        assert code == 2
