import json

import numpy as np
import pytest

from kp5.cli import main
from kp5.config import (
    SimConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    rng_from_seed,
)
from kp5.errors import ConfigError
from kp5.reporting import write_csv
from kp5.spectral import load_snapshot


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_is_all_defaults(tmp_path):
    p = write(tmp_path, "")
    assert load_config(p) == SimConfig()


def test_unknown_section_rejected(tmp_path):
    p = write(tmp_path, "grids:\n  nx: 32\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "grids" in str(info.value)


def test_unknown_key_names_section_and_key(tmp_path):
    p = write(tmp_path, "time:\n  horizons: 2.0\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "time" in str(info.value) and "horizons" in str(info.value)


def test_range_violation_names_field(tmp_path):
    p = write(tmp_path, "grid:\n  nx: 7\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "grid.nx" in str(info.value)


def test_type_violation_names_field(tmp_path):
    p = write(tmp_path, "time:\n  horizon: fast\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "time.horizon" in str(info.value)


def test_sigma_over_guard_names_admissible_max(tmp_path):
    p = write(tmp_path, "grid:\n  nx: 32\n  ny: 32\ngevrey:\n  sigma1: 1e6\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    msg = str(info.value)
    # 32 modes on a 32*pi box put xi_max at 1, so the guard sits at 650
    assert "sigma1" in msg and "650" in msg


def test_parse_error_carries_line_number(tmp_path):
    p = write(tmp_path, "grid:\n  nx: 32\n   ny: bad indent\n")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert "line" in str(info.value)


def test_bad_kind_rejected(tmp_path):
    p = write(tmp_path, "initial:\n  kind: vortex\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_dict_round_trip():
    cfg = SimConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_loaded_config_round_trips(tmp_path):
    p = write(
        tmp_path,
        "grid:\n  nx: 64\n  ny: 32\n"
        "time:\n  horizon: 2.5\n  cfl: 0.8\n"
        "initial:\n  kind: exp_spectrum\n  amplitude: 0.7\n  phases: random\n"
        "gevrey:\n  sigma1: 0.75\n  ladder: [0.01, 0.02]\n"
        "seed: 99\n",
    )
    cfg = load_config(p)
    assert cfg.grid.nx == 64 and cfg.grid.ny == 32
    assert cfg.time.horizon == 2.5
    assert cfg.initial.phases == "random"
    assert cfg.gevrey.ladder == (0.01, 0.02)
    assert cfg.seed == 99
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_rng_streams_reproducible():
    a = rng_from_seed(42).standard_normal(5)
    b = rng_from_seed(42).standard_normal(5)
    c = rng_from_seed(43).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_csv_floats_round_trip(tmp_path):
    values = [0.1, 1 / 3, 1e-17, 1.0000000000000002, -2.5e300]
    path = tmp_path / "vals.csv"
    write_csv(path, ["v"], [[v] for v in values])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "v"
    for line, v in zip(lines[1:], values):
        assert float(line) == v  # repr formatting is lossless


SMALL_YAML = """\
grid:
  nx: 32
  ny: 32
time:
  horizon: 0.1
  samples: 3
initial:
  kind: gaussian
  amplitude: 0.8
  width: 2.0
gevrey:
  sigma1: 0.25
"""


def test_cli_simulate_and_determinism(tmp_path):
    cfg = write(tmp_path, SMALL_YAML)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1), "--quiet"]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()
    m1 = json.loads((out1 / "manifest.json").read_text())
    assert m1["tool"] == "kp5"
    assert m1["command"] == "simulate"
    assert m1["constants"]["c0"] > 0
    assert m1["constants"]["c_emp"] > 0
    assert config_from_dict(m1["config"]).time.horizon == 0.1
    header = (out1 / "series.csv").read_text().splitlines()[0]
    assert header.startswith("t,l2,gevrey_")


def test_cli_snapshots_load(tmp_path):
    cfg = write(tmp_path, SMALL_YAML + "output:\n  snapshot_times: [0.05]\n")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    snaps = sorted((out / "snapshots").glob("*.kp5s"))
    assert len(snaps) == 1
    field = load_snapshot(snaps[0])
    assert field.grid.nx == 32
    assert field.hermitian


def test_cli_simulate_zero_horizon_one_row(tmp_path):
    cfg = write(
        tmp_path,
        "grid:\n  nx: 32\n  ny: 32\ntime:\n  horizon: 0.0\n",
    )
    out = tmp_path / "frozen"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = (out / "series.csv").read_text().strip().splitlines()
    assert len(rows) == 2  # header plus the t = 0 diagnostics
    assert rows[1].startswith("0.0,")


def test_cli_config_error_exit_code(tmp_path):
    bad = write(tmp_path, "grid:\n  nx: 7\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_cli_blow_up_exit_code_and_partial_output(tmp_path):
    cfg = write(
        tmp_path,
        "grid:\n  nx: 32\n  ny: 32\n"
        "time:\n  horizon: 0.1\n  samples: 2\n"
        "initial:\n  kind: gaussian\n  amplitude: 1e100\n  width: 2.0\n",
    )
    out = tmp_path / "boom"
    with np.errstate(all="ignore"):
        code = main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert code == 3
    series = (out / "series.csv").read_text().strip().splitlines()
    assert len(series) == 2  # header plus the t = 0 row
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "blow-up"


def test_cli_picard(tmp_path):
    cfg = write(tmp_path, SMALL_YAML)
    out = tmp_path / "pic"
    assert main(["picard", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    rows = (out / "picard.csv").read_text().strip().splitlines()
    assert rows[0] == "n,distance,ratio,sup_norm"
    assert len(rows) > 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["converged"] is True
    assert manifest["doubling_ratio"] <= 2.0


def test_cli_accept_subset():
    assert main(["accept", "--only", "A8,A11"]) == 0


def test_cli_accept_rejects_unknown_id():
    with pytest.raises(ValueError):
        main(["accept", "--only", "A99"])
