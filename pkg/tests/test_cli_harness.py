import csv

import numpy as np
import pytest

from netcheb.cli_harness import (
    ExperimentConfig,
    convergence_rate,
    indicator,
    main,
    parse_config,
    profile_l1_gap,
    relative_l1_error,
    run_experiment,
    single_edge_initial,
)
from netcheb.errors import ConfigError, NonPositiveError, ZeroReference


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- metrics --------------------------------------------------------------------


def test_relative_error_examples(rng):
    ref = [rng.uniform(0.1, 1, size=n) for n in (5, 6, 7)]
    assert relative_l1_error(ref, ref) == 0.0
    assert relative_l1_error([2 * r for r in ref], ref) == pytest.approx(1.0)


def test_relative_error_with_sampler():
    pts = [np.linspace(-1, 1, 5)] * 2
    sampler = lambda h, x: np.ones_like(x) * (h + 1)
    assert relative_l1_error([np.ones(5), np.ones(5)], sampler, pts) == pytest.approx(5 / 15)
    with pytest.raises(ValueError):
        relative_l1_error([np.ones(5)], sampler)


def test_relative_error_zero_reference():
    with pytest.raises(ZeroReference):
        relative_l1_error([np.ones(3)], [np.zeros(3)])


def test_relative_error_shape_mismatch():
    with pytest.raises(ValueError):
        relative_l1_error([np.ones(3)], [np.ones(4)])


def test_convergence_rate_examples():
    assert convergence_rate([(10, 0.4), (20, 0.2)]) == pytest.approx([1.0])
    assert convergence_rate([(10, 0.4), (20, 0.1)]) == pytest.approx([2.0])
    assert convergence_rate([(60, 2.1928e-1), (120, 1.1380e-1)])[0] == pytest.approx(0.9463, abs=5e-5)


def test_convergence_rate_errors():
    with pytest.raises(NonPositiveError):
        convergence_rate([(10, 0.1), (20, 0.0)])
    with pytest.raises(ValueError):
        convergence_rate([(10, 0.1)])
    with pytest.raises(ValueError):
        convergence_rate([(20, 0.1), (10, 0.05)])


def test_profile_gap():
    x = np.cos(np.pi * np.arange(9) / 8)
    assert profile_l1_gap(x, x) == 0.0
    assert profile_l1_gap(np.zeros(9), np.ones(5)) == pytest.approx(2.0)


def test_initial_data_left_limit_convention():
    u = indicator(-0.5, 0.0)
    np.testing.assert_array_equal(u(np.array([-0.5, -0.25, 0.0, 0.1])), [0, 1, 1, 0])
    u0 = single_edge_initial()
    assert u0(np.array([-0.5]))[0] == 1.0
    assert u0(np.array([0.5]))[0] == pytest.approx(4 / 3)
    assert u0(np.array([-0.25]))[0] == 1.0


# --- config ---------------------------------------------------------------------


def test_parse_config_with_comments_and_lists(tmp_path):
    cfg = parse_config(
        """
        # a comment
        experiment = validation   # trailing comment
        method = both
        n = 60, 120
        dt = 1e-4
        output_times = 0.1 0.15
        output_dir = %s
        """ % tmp_path
    )
    assert cfg.n == (60, 120) and cfg.method == "both"
    assert cfg.output_times == (0.1, 0.15)
    assert cfg.t_final == pytest.approx(1 / 6)
    assert cfg.flux == "lwr"


@pytest.mark.parametrize(
    "text,match",
    [
        ("experiment = tsunami", "experiment"),
        ("method = weno", "method"),
        ("colour = blue", "unknown key"),
        ("n 60", "key = value"),
        ("dt = fast", "bad value"),
        ("t_final = 0", "t_final"),
        ("flux = greenberg", "unknown flux"),
        ("method = cheb2d", "single_edge_2d"),
    ],
)
def test_config_rejections(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_cfl_rejection_quotes_bound():
    with pytest.raises(ConfigError, match=r"CFL bound 6\.85\d*e-06"):
        parse_config("n = 600\ndt = 1e-4")
    cfg = parse_config("n = 600\ndt = 1e-4\ncap_dt = true")
    assert cfg.step_for(600) == pytest.approx(6.852e-6, rel=1e-3)


def test_overrides_win():
    cfg = parse_config("n = 60\nmethod = fvs", {"n": "30,40", "method": "chebyshev", "dt": None})
    assert cfg.n == (30, 40) and cfg.method == "chebyshev"


# --- runs -----------------------------------------------------------------------


RIEMANN = """
experiment = riemann_junction
method = both
n = 24
dt = 1e-3
t_final = 0.2
output_times = 0.1
"""


def test_riemann_experiment_outputs(tmp_path):
    cfg = parse_config(RIEMANN + f"output_dir = {tmp_path}")
    report = run_experiment(cfg)
    rows = read_csv(tmp_path / "profiles_chebyshev_N24.csv")
    assert rows[0] == ["edge", "x", "u", "t"]
    assert len(rows) == 1 + 2 * 3 * 25
    timing = read_csv(tmp_path / "timing.csv")
    assert timing[0] == ["method", "N", "steps", "seconds"] and len(timing) == 3
    jt = read_csv(tmp_path / "junction_fvs_N24.csv")
    assert jt[0] == ["t", "u_b", "mismatch"]
    assert max(float(r[2]) for r in jt[1:]) <= 1e-10
    assert not (tmp_path / "rates.csv").exists()
    assert report.run("fvs", 24).steps == 200


def test_runs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_experiment(parse_config(RIEMANN + f"output_dir = {out}"))
    for name in ("profiles_chebyshev_N24.csv", "profiles_fvs_N24.csv", "junction_chebyshev_N24.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_validation_rates_csv(tmp_path):
    cfg = parse_config(
        f"experiment = validation\nmethod = fvs\nn = 20, 40\ndt = 1e-3\nreference_m = 6000\noutput_dir = {tmp_path}"
    )
    report = run_experiment(cfg)
    rows = read_csv(tmp_path / "rates.csv")
    assert rows[0] == ["method", "N", "error", "rate", "error_network", "rate_network"]
    assert [r[:2] for r in rows[1:]] == [["fvs", "20"], ["fvs", "40"]]
    assert rows[1][3] == "" and float(rows[2][3]) > 0
    assert report.rates[1]["rate"] == pytest.approx(float(rows[2][3]))


def test_main_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text(RIEMANN)
    assert main(["run", str(good), "--out", str(tmp_path / "o"), "--method", "fvs", "--n", "16"]) == 0
    assert (tmp_path / "o" / "profiles_fvs_N16.csv").exists()

    bad = tmp_path / "bad.cfg"
    bad.write_text("n = 600\ndt = 1e-4\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o2")]) == 1
    assert "CFL bound" in capsys.readouterr().err

    assert main(["run", str(tmp_path / "missing.cfg")]) == 1

    failing = tmp_path / "fail.cfg"
    failing.write_text("experiment = single_edge_2d\nmethod = cheb2d\nn = 6\nmax_newton = 2\nmax_fixed_point = 5\n")
    assert main(["run", str(failing), "--out", str(tmp_path / "o3")]) == 2
    assert "single_edge_2d" in capsys.readouterr().err


def test_dt_override_is_validated(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(RIEMANN)
    assert main(["run", str(cfg), "--dt", "0.5", "--out", str(tmp_path)]) == 1
