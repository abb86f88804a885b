import json

import numpy as np

from mwimage.cli import main
from mwimage.dataio import load_dataset, load_map


def run(argv):
    return main(argv)


def test_dump_config_lists_defaults(capsys):
    assert run(["synth", "--dump-config"]) == 0
    out = capsys.readouterr().out
    assert "scene = sim1" in out
    assert "snr_db = none" in out
    assert run(["invert-mmv", "--dump-config"]) == 0
    out = capsys.readouterr().out
    assert "patience = 30" in out


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("not_a_key = 1\n")
    assert run(["synth", "--out", str(tmp_path / "d.txt"), "--config", str(cfg)]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_missing_data_file_is_data_error(tmp_path, capsys):
    rc = run(["invert-lsm", "--data", str(tmp_path / "absent.txt"),
              "--out-prefix", str(tmp_path / "o")])
    assert rc == 3


def test_synth_invert_metrics_end_to_end(tmp_path, capsys):
    data = tmp_path / "d.txt"
    # small, fast configuration: one circle, 6 transmitters, coarse ring
    rc = run([
        "synth", "--out", str(data), "--scene", "circle", "--circle-y", "0.4",
        "--n-tx", "6", "--rx-step-deg", "10", "--snr-db", "30",
        "--cv-fraction", "0.2", "--cv-arc-len", "0.6",
    ])
    assert rc == 0
    mset = load_dataset(data)
    assert mset.layout.cv_indices.size > 0

    prefix = str(tmp_path / "mmv")
    rc = run([
        "invert-mmv", "--data", str(data), "--out-prefix", prefix,
        "--x-min", "-0.8", "--x-max", "0.8", "--y-min", "-0.4", "--y-max", "1.2",
        "--dx", "0.1", "--max-iters", "200",
    ])
    assert rc == 0
    for suffix in (".map", ".pgm", ".png", "_trace.tsv", "_residuals.png", "_summary.json"):
        assert (tmp_path / ("mmv" + suffix)).exists()
    summary = json.loads((tmp_path / "mmv_summary.json").read_text())
    assert summary["method"] == "MMV"
    assert summary["N"] == 16 * 16
    assert summary["P"] == 6
    assert summary["iterations"] > 0
    assert summary["complexity_multiplications"] == 3 * summary["iterations"] * summary["Q"] * summary["N"]

    prefix_lsm = str(tmp_path / "lsm")
    rc = run([
        "invert-lsm", "--data", str(data), "--out-prefix", prefix_lsm,
        "--x-min", "-0.8", "--x-max", "0.8", "--y-min", "-0.4", "--y-max", "1.2",
        "--dx", "0.1",
    ])
    assert rc == 0

    capsys.readouterr()
    rc = run(["metrics", "--ref", prefix + ".map", "--img", prefix_lsm + ".map"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("r_corr = ")
    val = float(out.split("=")[1])
    assert 0.0 <= val <= 1.0


def test_invert_ilsm_end_to_end(tmp_path):
    data = tmp_path / "d.txt"
    assert run([
        "synth", "--out", str(data), "--scene", "circle", "--circle-y", "0.4",
        "--n-tx", "6", "--rx-step-deg", "10", "--snr-db", "30",
    ]) == 0
    prefix = str(tmp_path / "ilsm")
    rc = run([
        "invert-ilsm", "--data", str(data), "--out-prefix", prefix,
        "--x-min", "-0.8", "--x-max", "0.8", "--y-min", "-0.4", "--y-max", "1.2",
        "--dx", "0.1", "--radius-a", "0.3",
    ])
    assert rc == 0
    m = load_map(prefix + ".map")
    assert m.kind == "improved-LSM"


def test_invert_mmv_without_cv_needs_sigma(tmp_path, capsys):
    data = tmp_path / "d.txt"
    assert run([
        "synth", "--out", str(data), "--scene", "circle", "--circle-y", "0.4",
        "--n-tx", "4", "--rx-step-deg", "15", "--snr-db", "20",
    ]) == 0
    rc = run(["invert-mmv", "--data", str(data), "--out-prefix", str(tmp_path / "x"),
              "--dx", "0.2"])
    assert rc == 2
    assert "CV receivers" in capsys.readouterr().err


def test_config_file_values_and_flag_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n_tx = 4\nrx_step_deg = 15\nsnr_db = none  # noiseless\nscene = circle\ncircle_y = 0.4\n")
    data = tmp_path / "d.txt"
    assert run(["synth", "--out", str(data), "--config", str(cfg), "--n-tx", "5"]) == 0
    mset = load_dataset(data)
    assert mset.layout.n_tx == 5  # flag wins over config file
    assert mset.snr_db is None


def test_fresnel_import_cli(tmp_path):
    raw = tmp_path / "raw.txt"
    lines = ["# header"]
    rng = np.random.default_rng(2)
    for p in range(4):
        for rxa in np.arange(60.0, 301.0, 5.0):
            v = rng.standard_normal(4)
            lines.append("%g %g %g %.8g %.8g %.8g %.8g" % (90.0 * p, rxa, 3.0, *v))
    raw.write_text("\n".join(lines) + "\n")
    out = tmp_path / "ds.txt"
    rc = run(["import-fresnel", "--data", str(raw), "--out", str(out),
              "--frequency-ghz", "3.0", "--tx-count", "2"])
    assert rc == 0
    mset = load_dataset(out)
    assert mset.layout.n_tx == 2
    assert mset.layout.n_rx == 72
