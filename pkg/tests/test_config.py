import pathlib

import pytest

from edgeoffload.config import ENV_CONFIG, ConfigError, RunConfig, load_config

ROOT = pathlib.Path(__file__).resolve().parents[1]


def _write(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return str(p)


def test_defaults(monkeypatch):
    monkeypatch.delenv(ENV_CONFIG, raising=False)
    cfg = load_config()
    assert cfg == RunConfig()
    assert cfg.xi == 0.001 and cfg.on_infeasible == "raise"


def test_bundled_config_loads():
    cfg = load_config(str(ROOT / "configs" / "reference.ini"))
    assert cfg.utilizations == (0.1, 0.2, 0.3)
    assert cfg.delay_min == pytest.approx(0.005) and cfg.deadline_max == pytest.approx(0.28)
    assert cfg.xi == pytest.approx(0.001)
    assert cfg.method == "all" and cfg.strict is False


def test_ms_scaling(tmp_path):
    cfg = load_config(_write(tmp_path, "[game]\nxi_ms = 10\n[experiment]\nsweep_xi_ms = 0.1, 1\n"))
    assert cfg.xi == pytest.approx(0.01)
    assert cfg.sweep_xis == pytest.approx((0.0001, 0.001))


def test_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_CONFIG, _write(tmp_path, "[scenario]\nseed = 9\n"))
    assert load_config().seed == 9


@pytest.mark.parametrize("text, needle", [
    ("[scenario]\nutilisation = 0.2\n", ":2: [scenario] utilisation: unknown key"),
    ("[bogus]\nx = 1\n", "unknown section [bogus]"),
    ("[scenario]\nseed = 1\nutilization = 1.5\n", "outside (0, 1)"),
    ("[game]\nxi_ms = -1\n", "xi: must be positive"),
    ("[game]\n\ninit_mode = initial_X\n", "init_mode"),
    ("[experiment]\nrepetitions = many\n", ":2: [experiment] repetitions"),
    ("[experiment]\nstrict = maybe\n", "strict"),
    ("[game]\nxi_ms = 1\n[scenario]\nseed = 1\n[game]\nmax_rounds = 2\n", ""),
])
def test_diagnostics(tmp_path, text, needle):
    path = _write(tmp_path, text)
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert needle in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "nope.ini"))
