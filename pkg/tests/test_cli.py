import csv
import json
import numpy as np
import pytest

from conftest import small_config, small_growth
from wipersim.cli import main
from wipersim.config import default_config_dict
from wipersim.experiment import control_trajectory
from wipersim.pnm import write_pgm


def small_config_doc(**protocol_overrides) -> dict:
    doc = default_config_dict()
    doc["field"]["cell_size_mm"] = 2.5
    doc["growth"].update(rate_per_day=0.3, seed_rate_per_day=3.0,
                         colony_radius_mm=4.0)
    doc["render"].update(frame_width=160, frame_height=120)
    doc["protocol"].update(observation_days=[0, 2, 4], replicates=2)
    doc["seed"] = 7
    doc["policy"]["horizon_days"] = 6
    doc["protocol"].update(protocol_overrides)
    return doc


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(small_config_doc()))
    return path


def test_simulate_outputs(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config_file),
                 "--out", str(out), "--quiet"]) == 0
    report = (out / "report.csv").read_text()
    lines = report.splitlines()
    assert lines[0].startswith("day,arm,replicate")
    assert len(lines) == 1 + 3 * 2 * 2
    for name in ("plotdata.csv", "frames_manifest.csv",
                 "mse_vs_reference.png", "control_vs_treated.png"):
        assert (out / name).exists()
    frames = sorted((out / "frames").glob("*.pgm"))
    assert len(frames) == 12


def test_simulate_deterministic_bytes(tmp_path, config_file):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(config_file),
                     "--out", str(tmp_path / name), "--quiet"]) == 0
    assert ((tmp_path / "a" / "report.csv").read_bytes()
            == (tmp_path / "b" / "report.csv").read_bytes())
    assert ((tmp_path / "a" / "plotdata.csv").read_bytes()
            == (tmp_path / "b" / "plotdata.csv").read_bytes())


def test_seed_flag_overrides_config(tmp_path, config_file):
    for name, seed in (("a", "3"), ("b", "4")):
        assert main(["simulate", "--config", str(config_file),
                     "--out", str(tmp_path / name), "--seed", seed,
                     "--quiet"]) == 0
    assert ((tmp_path / "a" / "report.csv").read_bytes()
            != (tmp_path / "b" / "report.csv").read_bytes())


def test_malformed_config_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"growth": {"rate_per_dayz": 0.2}}))
    code = main(["simulate", "--config", str(path),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "rate_per_dayz" in capsys.readouterr().err


def test_config_syntax_error_exits_2_with_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{ not json }")
    code = main(["simulate", "--config", str(path),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "line 1" in capsys.readouterr().err


def test_missing_config_exits_3(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 3


def test_unknown_flag_exits_2(config_file, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(config_file),
              "--out", str(tmp_path / "out"), "--frobnicate"])
    assert exc.value.code == 2


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--out", "--seed", "--quiet"):
        assert flag in out


def test_analyze_round_trip_reproduces_simulation(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(config_file),
                 "--out", str(out), "--quiet"]) == 0
    assert main(["analyze", "--config", str(config_file),
                 "--manifest", str(out / "frames_manifest.csv"),
                 "--out", str(tmp_path / "analysis.csv"), "--quiet"]) == 0

    def keyed(path):
        with open(path, newline="") as handle:
            return {(r["day"], r["arm"], r["replicate"]):
                    (r["mse_vs_day0"], r["mse_control_vs_treated"])
                    for r in csv.DictReader(handle)}

    sim = keyed(out / "report.csv")
    ana = keyed(tmp_path / "analysis.csv")
    assert set(sim) <= set(ana)
    for key, values in sim.items():
        for got, want in zip(ana[key], values):
            assert abs(float(got) - float(want)) < 1e-12


def test_analyze_reference_only_manifest(tmp_path):
    ref = np.full((30, 40), 200, dtype=np.uint8)
    write_pgm(tmp_path / "ref.pgm", ref)
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("day,arm,path\n0,reference,ref.pgm\n")
    out = tmp_path / "single.csv"
    assert main(["analyze", "--manifest", str(manifest),
                 "--out", str(out), "--quiet"]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("0,reference,0,0.000000,")


def test_analyze_identical_files_mse_zero(tmp_path):
    img = (np.arange(1200, dtype=np.uint8).reshape(30, 40) % 200) + 40
    write_pgm(tmp_path / "ref.pgm", img)
    write_pgm(tmp_path / "same.pgm", img)
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "day,arm,path\n0,reference,ref.pgm\n5,control,same.pgm\n")
    out = tmp_path / "pair.csv"
    assert main(["analyze", "--manifest", str(manifest),
                 "--out", str(out), "--quiet"]) == 0
    row = out.read_text().splitlines()[2]
    assert row.startswith("5,control,0,0.000000,")


def test_analyze_ingests_rgb_ppm_via_luma(tmp_path):
    from wipersim.pnm import write_ppm

    gray = np.full((30, 40), 120, dtype=np.uint8)
    write_pgm(tmp_path / "ref.pgm", gray)
    rgb = np.zeros((30, 40, 3), dtype=np.uint8)
    rgb[..., 0] = 120  # red-only: luma differs from the gray reference
    rgb[..., 1] = 120
    rgb[..., 2] = 120
    write_ppm(tmp_path / "color.ppm", rgb)
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "day,arm,path\n0,reference,ref.pgm\n2,control,color.ppm\n")
    out = tmp_path / "rgb.csv"
    assert main(["analyze", "--manifest", str(manifest),
                 "--out", str(out), "--quiet"]) == 0
    # equal-luma RGB binarizes identically to the gray reference
    assert out.read_text().splitlines()[2].startswith("2,control,0,0.000000,")


def test_analyze_size_mismatch_exits_4(tmp_path, capsys):
    write_pgm(tmp_path / "ref.pgm", np.zeros((30, 40), dtype=np.uint8))
    write_pgm(tmp_path / "off.pgm", np.zeros((20, 20), dtype=np.uint8))
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "day,arm,path\n0,reference,ref.pgm\n3,control,off.pgm\n")
    code = main(["analyze", "--manifest", str(manifest),
                 "--out", str(tmp_path / "x.csv")])
    assert code == 4
    assert "off.pgm" in capsys.readouterr().err


def test_calibrate_zero_targets(tmp_path, config_file):
    targets = tmp_path / "targets.csv"
    targets.write_text("day,mse\n0,0\n2,0\n4,0\n")
    out = tmp_path / "fit.json"
    assert main(["calibrate", "--config", str(config_file),
                 "--targets", str(targets), "--out", str(out),
                 "--quiet"]) == 0
    document = json.loads(out.read_text())
    assert document["growth"]["rate_per_day"] == 0.0
    assert document["growth"]["seed_rate_per_day"] == 0.0
    assert document["residual"] == 0.0


def test_calibrate_self_generated_targets(tmp_path, config_file):
    # generating parameters sit on the CLI's default 5-point grid
    cfg = small_config(growth=small_growth(rate_per_day=0.6,
                                           seed_rate_per_day=8.0))
    traj = control_trajectory(cfg)
    targets = tmp_path / "targets.csv"
    targets.write_text("day,mse\n" + "".join(
        f"{d},{v:.12f}\n" for d, v in zip(cfg.observation_days, traj)))
    out = tmp_path / "fit.json"
    assert main(["calibrate", "--config", str(config_file),
                 "--targets", str(targets), "--out", str(out),
                 "--quiet"]) == 0
    document = json.loads(out.read_text())
    assert document["residual"] <= 1e-4
    assert document["growth"]["rate_per_day"] == pytest.approx(0.6)
    assert document["growth"]["seed_rate_per_day"] == pytest.approx(8.0)


def test_calibrate_result_merges_into_config(tmp_path, config_file):
    targets = tmp_path / "targets.csv"
    targets.write_text("day,mse\n0,0\n2,0\n4,0\n")
    fit = tmp_path / "fit.json"
    assert main(["calibrate", "--config", str(config_file),
                 "--targets", str(targets), "--out", str(fit),
                 "--quiet"]) == 0
    doc = small_config_doc()
    doc["growth"] = json.loads(fit.read_text())["growth"]
    merged = tmp_path / "merged.json"
    merged.write_text(json.dumps(doc))
    assert main(["simulate", "--config", str(merged),
                 "--out", str(tmp_path / "out"), "--quiet"]) == 0


def test_calibrate_non_monotone_targets_exit_5(tmp_path, config_file, capsys):
    targets = tmp_path / "targets.csv"
    targets.write_text("day,mse\n0,0\n2,0.05\n4,0.01\n")
    code = main(["calibrate", "--config", str(config_file),
                 "--targets", str(targets), "--out", str(tmp_path / "f.json")])
    assert code == 5
    assert "non-decreasing" in capsys.readouterr().err


def test_closed_loop_null_trigger_zero_cleanings(tmp_path):
    doc = small_config_doc()
    doc["policy"].update(mse_trigger=None, hysteresis=0.0)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "timeline.csv"
    assert main(["closed-loop", "--config", str(path),
                 "--out", str(out), "--quiet"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "day,mse,decision,cumulative_energy_J"
    assert len(lines) == 1 + 6
    assert all(",hold," in line for line in lines[1:])


def test_closed_loop_zero_budget_zero_cleanings(tmp_path):
    doc = small_config_doc()
    doc["policy"].update(mse_trigger=0.001, hysteresis=0.0,
                         max_energy_budget_J=0.0)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "timeline.csv"
    assert main(["closed-loop", "--config", str(path),
                 "--out", str(out), "--quiet"]) == 0
    assert all(",clean," not in line for line in out.read_text().splitlines())


def test_closed_loop_default_policy_cleans(tmp_path):
    doc = small_config_doc()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "timeline.csv"
    assert main(["closed-loop", "--config", str(path),
                 "--out", str(out), "--quiet"]) == 0
    assert any(",clean," in line for line in out.read_text().splitlines())
    assert out.with_suffix(".png").exists()


def test_print_config_round_trips(capsys, tmp_path):
    assert main(["print-config"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mechanism"]["motor"]["rated_voltage_V"] == 6.0
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    from wipersim.config import load_config
    assert load_config(path) == load_config(None)
