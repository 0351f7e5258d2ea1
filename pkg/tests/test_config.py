import pytest

from scarlab.config import ConfigError, RunConfig, config_lines, parse_config


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, "# empty\n"), "bs-lyapunov")
    assert cfg.L == 1024
    assert cfg.hopping == 1.0
    assert cfg.mu == 2.5
    assert cfg.resolved_eta() == pytest.approx(3.0 / 1024)
    assert cfg.tol == 1e-10


def test_experiment_defaults_differ(tmp_path):
    fs = parse_config(write(tmp_path, ""), "floquet-scan")
    assert fs.J == 0.1
    po = parse_config(write(tmp_path, ""), "perturbed-otoc")
    assert po.epsilon == 0.3
    assert 8.0 * po.J * po.alpha_sq == pytest.approx(3.0)
    mfld = parse_config(write(tmp_path, ""), "meanfield")
    assert mfld.tol == 1e-11
    assert mfld.temperature == [0.5, 1.0, 2.0, 5.0]


def test_epsilon_above_gap_rejected(tmp_path):
    p = write(tmp_path, "epsilon = 0.6\nmu = 2.5\nhopping = 1\n")
    with pytest.raises(ConfigError, match="below the gap"):
        parse_config(p, "perturbed-otoc")


def test_unknown_key_with_suggestion(tmp_path):
    p = write(tmp_path, "alpha = 2\n")
    with pytest.raises(ConfigError, match="alpha_sq"):
        parse_config(p, "perturbed-otoc")


def test_all_violations_reported_with_line_numbers(tmp_path):
    p = write(tmp_path, "alpha = 2\nepsilon = 0.9\nL = not_a_number\n")
    with pytest.raises(ConfigError) as err:
        parse_config(p, "perturbed-otoc")
    msg = str(err.value)
    assert ":1: unknown key 'alpha'" in msg
    assert "epsilon = 0.9 must stay below" in msg
    assert ":3: bad value for 'L'" in msg


def test_key_not_used_by_experiment(tmp_path):
    p = write(tmp_path, "beta_sq = 1\n")
    with pytest.raises(ConfigError, match="not used by experiment"):
        parse_config(p, "meanfield")


def test_duplicate_key(tmp_path):
    p = write(tmp_path, "L = 64\nL = 128\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(p, "selfenergy")


def test_sweep_list_and_comments(tmp_path):
    p = write(tmp_path, "temperature = 0.5, 1, 2  # sweep\nL = 64\n")
    cfg = parse_config(p, "meanfield")
    assert cfg.temperature == [0.5, 1.0, 2.0]


def test_experiment_in_file(tmp_path):
    p = write(tmp_path, "experiment = ssb\nmu = 1\nJ = 1\n")
    cfg = parse_config(p)
    assert cfg.experiment == "ssb"
    with pytest.raises(ConfigError, match="was requested"):
        parse_config(p, "meanfield")


def test_missing_experiment(tmp_path):
    with pytest.raises(ConfigError, match="no experiment"):
        parse_config(write(tmp_path, "L = 8\n"))


def test_bool_parsing(tmp_path):
    cfg = parse_config(write(tmp_path, "emit_svg = true\n"), "selfenergy")
    assert cfg.emit_svg is True
    with pytest.raises(ConfigError, match="boolean"):
        parse_config(write(tmp_path, "emit_svg = maybe\n"), "selfenergy")


def test_gapless_rejected(tmp_path):
    with pytest.raises(ConfigError, match="gapped"):
        parse_config(write(tmp_path, "mu = 2.0\n"), "selfenergy")


def test_ssb_allows_negative_gap(tmp_path):
    cfg = parse_config(write(tmp_path, "mu = 1.0\nJ = 1\n"), "ssb")
    assert cfg.gap() == pytest.approx(-1.0)


def test_config_lines_round_trip(tmp_path):
    src = write(tmp_path, "L = 128\ntemperature = 1,2\nJ = 0.5\n")
    cfg = parse_config(src, "meanfield")
    echoed = write(tmp_path, "\n".join(config_lines(cfg)) + "\n", "echo.cfg")
    again = parse_config(echoed)
    assert again == cfg or (again.eta == cfg.resolved_eta()
                            and {k: v for k, v in vars(again).items() if k != "eta"}
                            == {k: v for k, v in vars(cfg).items() if k != "eta"})


def test_unparseable_line(tmp_path):
    with pytest.raises(ConfigError, match="key = value"):
        parse_config(write(tmp_path, "just some words\n"), "ssb")
