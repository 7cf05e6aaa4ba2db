import json

import numpy as np
import pytest

from hypercbo import cli, io
from hypercbo.config import ExperimentConfig, parse_config, serialize_config
from hypercbo.dynamics import RunTrace, SimConfig, run
from hypercbo.errors import ParseError, ValidationError
from hypercbo.manifold import Sphere
from hypercbo.meanfield import coupled_meanfield_rate
from hypercbo.objective import make_ackley
from hypercbo.presets import evaluate_preset

PRESET_FLAGS = [
    "--manifold", "sphere:radius=1,dim=3", "--objective", "ackley:vstar=0,0,1", "--n", "20", "--dt", "0.05",
    "--sigma", "0.25", "--alpha", "50", "--lambda", "1.0", "--tmax", "5", "--seed", "42",
]


# -- configuration -----------------------------------------------------------

def test_minimal_file_gives_defaults():
    cfg = parse_config("[hypercbo]\n")
    assert cfg.lam == 1.0 and cfg.stop_rule == "fixed"
    sim = cfg.sim_config()
    assert sim.lam == 1.0 and sim.stop_rule.kind == "fixed"


def test_zero_dt_is_rejected():
    with pytest.raises(ValidationError, match="dt must be positive"):
        parse_config("dt = 0\n")


def test_all_violations_are_listed():
    with pytest.raises(ValidationError) as exc:
        parse_config("dt = -1\nsigma = -2\nn = 0\n")
    assert {"dt must be positive", "sigma must be nonnegative", "n must be at least 1"} <= set(exc.value.errors)


def test_preset_flags_echo_into_sim_config():
    args = cli.build_parser().parse_args(["run", *PRESET_FLAGS])
    sim = cli._config_from_args(args).sim_config()
    assert (sim.n_particles, sim.dt, sim.sigma, sim.alpha, sim.lam, sim.t_max) == (20, 0.05, 0.25, 50.0, 1.0, 5.0)
    np.testing.assert_array_equal(sim.objective.known_minimizer, [0.0, 0.0, 1.0])


def test_flags_override_file():
    cfg = parse_config("sigma = 0.5\nalpha = 10\n", {"sigma": 0.1, "alpha": None})
    assert cfg.sigma == 0.1 and cfg.alpha == 10.0


@pytest.mark.parametrize("cfg", [
    ExperimentConfig(),
    ExperimentConfig(command="rates-coupled", manifold="torus:R=1,r=0.5", objective="ackley:vstar=0,1,0.5",
                     sigma=0.1 + 0.2, n_values=[16, 64], n_repeats=30, t_check=0.5, n_jobs=2, out="x.csv"),
    ExperimentConfig(command="defect-scan", dt_list=[0.1, 0.05], unprojected=True, stop_rule="diameter:0.001"),
])
def test_serialize_round_trip(cfg):
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


def test_parse_error_carries_line_and_field():
    with pytest.raises(ParseError) as exc:
        parse_config("dt = 0.05\nthis line is broken\n")
    assert exc.value.line == 2
    with pytest.raises(ParseError) as exc:
        parse_config("[hypercbo]\ndt = 0.05\nbogus = 1\n")
    assert exc.value.line == 3 and exc.value.field == "bogus"
    with pytest.raises(ParseError) as exc:
        parse_config("n = 2.5\n")
    assert exc.value.field == "n"


# -- outputs -----------------------------------------------------------------

def test_empty_trace_writes_header_only(tmp_path):
    path = tmp_path / "t.csv"
    io.write_trace_csv(RunTrace.empty(3), path)
    assert path.read_text() == ",".join(io.trace_header(3)) + "\n"


def test_hundred_steps_give_hundred_and_one_rows(tmp_path):
    trace = run(SimConfig(Sphere(), make_ackley([0.0, 0.0, 1.0]), t_max=5.0, dt=0.05, seed=1))
    path = tmp_path / "t.csv"
    io.write_trace_csv(trace, path)
    header, rows = io.read_trace_csv(path)
    assert header[:4] == ["step", "t", "consensus_0", "consensus_1"]
    assert len(rows) == 101
    assert rows[0][:2] == [0.0, 0.0] and rows[-1][0] == 100.0
    np.testing.assert_array_equal(np.array(rows)[:, 2:5], trace.consensus)


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["run", *PRESET_FLAGS, "--out", str(a)]) == 0
    assert cli.main(["run", *PRESET_FLAGS, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_summary_makes_run_reproducible(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["run", *PRESET_FLAGS, "--out", str(out)]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert {"config", "seed", "build_id", "wall_time_s", "final_consensus"} <= set(summary)
    assert summary["seed"] == 42
    cfg = parse_config(flags=summary["config"])
    out2 = tmp_path / "again.csv"
    cli.execute(parse_config(flags={**summary["config"], "out": str(out2), "summary": str(tmp_path / "s.json")}))
    assert out2.read_bytes() == out.read_bytes()
    assert cfg.seed == 42


def test_config_file_is_used(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[hypercbo]\nmanifold = torus:R=1,r=0.5\nobjective = ackley:vstar=0,1,0.5\ntmax = 0.5\n")
    out = tmp_path / "t.csv"
    assert cli.main(["run", "--config", str(ini), "--out", str(out)]) == 0
    header, rows = io.read_trace_csv(out)
    assert len(rows) == 11


# -- exit codes --------------------------------------------------------------

def test_exit_code_validation(capsys):
    assert cli.main(["run", "--dt", "0"]) == 1
    assert "dt must be positive" in capsys.readouterr().err
    assert cli.main(["run", "--manifold", "cube:side=1"]) == 1


def test_exit_code_runtime(capsys):
    # the noise amplitude overflows to inf on the first step
    code = cli.main(["run", "--sigma", "1e200", "--tmax", "1"])
    assert code == 2
    assert "runtime error" in capsys.readouterr().err


def test_exit_code_io(tmp_path):
    assert cli.main(["run", "--tmax", "0.1", "--out", str(tmp_path / "missing" / "t.csv")]) == 3
    assert cli.main(["run", "--config", str(tmp_path / "nope.ini")]) == 3


# -- other subcommands -------------------------------------------------------

def test_rates_command_writes_csv_and_slope(tmp_path):
    out = tmp_path / "r.csv"
    code = cli.main(["rates", "lln", "--n-values", "16,64", "--repeats", "20", "--m-reference", "5000",
                     "--alpha", "1", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[0] == "N,mse"
    summary = json.loads(out.with_suffix(".json").read_text())
    assert {"slope", "intercept", "slope_half_width_95", "build_id", "seed"} <= set(summary)


def test_defect_scan_command(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert cli.main(["defect-scan", "--tmax", "1", "--seed", "42", "--out", str(out)]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["dt"] == [0.05, 0.025, 0.0125]
    assert summary["strictly_decreasing"] is True
    assert cli.main(["defect-scan", "--dt-list", "0.05,0.03"]) == 1


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--preset", "sphere", "--seeds", "10", "--jobs", "2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 11
    assert "sphere" in capsys.readouterr().out


def test_parallel_repeats_match_serial():
    cfg = SimConfig(Sphere(), make_ackley([0.0, 0.0, 1.0]))
    a = coupled_meanfield_rate(cfg, [8, 16], 512, 0.5, 12, seed=1, n_jobs=1)
    b = coupled_meanfield_rate(cfg, [8, 16], 512, 0.5, 12, seed=1, n_jobs=4)
    assert a.mse_values == b.mse_values
    s = evaluate_preset("torus", range(6), n_jobs=1)
    p = evaluate_preset("torus", range(6), n_jobs=3)
    assert np.array_equal(s.distances, p.distances)
