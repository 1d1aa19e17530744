import json
import warnings

import numpy as np
import pytest

from shotnoise_sbd import cli, experiments, sheriff
from shotnoise_sbd.config import (ConfigError, SmallWindowWarning, config_to_text, default_config,
                                  load_config, parse_config, parse_grid)
from shotnoise_sbd.domain import sample_rain

SMALL = """
[window]
side = 6

[kernel]
kind = indicator
K = 1
R = 1

[run]
lambda = 1
seed = 7
t1 = 4
replicates = 2
grid = 0:4:5
"""


def test_defaults_are_desk_scale():
    cfg = parse_config("")
    assert cfg.window.L == 10.0 and cfg.window.topology == "torus"
    assert cfg.kernel.K == 1.0 and cfg.lam == 1.0
    lo, hi = cfg.subwindow
    np.testing.assert_allclose(hi - lo, 2.5)


def test_parse_values_and_grid():
    cfg = parse_config(SMALL)
    assert cfg.seed == 7 and cfg.replicates == 2
    np.testing.assert_allclose(cfg.time_grid, [0, 1, 2, 3, 4])
    assert parse_grid("1, 2.5") == (1.0, 2.5)
    assert parse_grid("") == ()
    with pytest.raises(ConfigError):
        parse_grid("1:2")


@pytest.mark.parametrize("text", [
    "[nonsense]\na = 1\n",
    "[run]\nlamda = 1\n",
    "[run]\nlambda = abc\n",
    "[run]\nengine = magic\n",
    "[kernel]\nkind = gaussian\n",
    "[run]\nt0 = 5\nt1 = 5\n",
    "[window]\ntopology = sphere\n",
    "[kernel]\nK = -1\n",
])
def test_bad_configs_raise(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_small_window_warns():
    with pytest.warns(SmallWindowWarning):
        parse_config("[window]\nside = 4\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_config("[window]\nside = 5\n")


@pytest.mark.parametrize("kernel", [
    "kind = indicator\nK = 2\nR = 0.5",
    "kind = truncated-power\nK = 1\nR = 1.5\npower = 2",
    "kind = exponential\nK = 1\nrate = 3",
])
def test_roundtrip(kernel):
    cfg = parse_config(f"[kernel]\n{kernel}\n[run]\ngrid = 0,1.5\nseed = 3\n[subwindow]\nside = 2\n")
    again = parse_config(config_to_text(cfg))
    assert again == cfg


def test_tabulated_kernel_relative_path(tmp_path):
    (tmp_path / "f.csv").write_text("r,f\n0,1\n0.5,1\n1,0\n")
    (tmp_path / "run.ini").write_text("[kernel]\nkind = tabulated\ntable = f.csv\n")
    cfg = load_config(tmp_path / "run.ini")
    assert cfg.kernel.support_radius == pytest.approx(1.0)


def _ini(tmp_path, extra=""):
    p = tmp_path / "run.ini"
    p.write_text(SMALL + extra)
    return str(p)


def test_simulate_is_deterministic(tmp_path):
    ini = _ini(tmp_path)
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", ini, "--out", str(tmp_path / d)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "replicate_000_points.csv" in files and "intensity.csv" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resume_matches_in_memory_extension(tmp_path):
    ini = _ini(tmp_path)
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--config", ini, "--out", str(out)]) == 0
    cfg = load_config(ini)
    via_csv = experiments.resume(cfg, out / "replicate_001_points.csv", 1, 7.0)
    first = experiments.simulate(cfg).outcomes[1]
    _, oracle = experiments.replicate_inputs(cfg, experiments.EXP_SIMULATE, 1, cfg.t0, cfg.t1)
    new = sample_rain(cfg.window, cfg.lam, cfg.t1, 7.0,
                      experiments.child_seed(cfg.seed, experiments.EXP_SIMULATE, 1, experiments.SLOT_CHUNK + 1),
                      first_index=len(first.points))
    in_memory = sheriff.extend(first, oracle, 7.0, new)
    assert via_csv.death.tobytes() == in_memory.death.tobytes()
    assert via_csv.killer.tobytes() == in_memory.killer.tobytes()
    # and both equal a one-shot resolution of all arrivals over [0, 7)
    once = sheriff.resolve(in_memory.points, oracle, 7.0, cfg.variant)
    assert once.death.tobytes() == in_memory.death.tobytes()
    assert cli.main(["simulate", "--config", ini, "--out", str(out), "--resume",
                     str(out / "replicate_001_points.csv"), "--replicate", "1", "--resume-to", "7"]) == 0


def test_cli_couple_and_stationary_and_approx(tmp_path, capsys):
    ini = _ini(tmp_path, "\n[burnin]\nsnapshots = 3\n")
    assert cli.main(["couple", "--config", ini, "--t1", "6", "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "coupling.json").read_text())
    assert rep["audit_violations"] == 0
    assert cli.main(["stationary", "--config", ini, "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "stationary.json").exists()
    assert cli.main(["approx", "--order", "2", "--out", str(tmp_path / "g.csv")]) == 0
    assert (tmp_path / "g.csv").read_text().startswith("r,g_hat")
    assert "beta_hat = 0.745363" in capsys.readouterr().out


def test_cli_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nfoo = 1\n")
    assert cli.main(["simulate", "--config", str(bad)]) == 2
    assert cli.main(["simulate", "--resume", "x.csv"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["approx", "--order", "5"])
