import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from regretlab import cli
from regretlab.config import ExperimentConfig, parse_config_text, parse_seeds
from regretlab.harness import CHECKS, check_rng, run_checks, run_experiment, write_reports
from regretlab.mdp import UsageError, save
from regretlab.environments import make_two_state_chain


def test_parse_seeds():
    assert parse_seeds("0-3,7") == (0, 1, 2, 3, 7)
    assert parse_seeds("5") == (5,)
    for bad in ("3-1", "x"):
        with pytest.raises(UsageError):
            parse_seeds(bad)


def test_parse_config_text():
    cfg = parse_config_text("""
        # demo
        env = riverswim:n_states=4
        agents = psrl, ucrl2
        horizon = 100   # rounds
        seeds = 0-4
        preset = theory
        rho = 0.1
        jobs = 2
        out = /tmp/x
        checks = beta_anti
    """)
    assert cfg.env == "riverswim:n_states=4" and cfg.agents == ("psrl", "ucrl2")
    assert cfg.horizon == 100 and cfg.seeds == (0, 1, 2, 3, 4) and cfg.preset == "theory"
    assert cfg.rho == 0.1 and cfg.jobs == 2 and cfg.checks == ("beta_anti",)


@pytest.mark.parametrize("text", [
    "horizon = 0", "seeds = ", "agents = dqn", "env = nowhere", "preset = fast",
    "color = red", "horizon = 10\nhorizon = 20", "horizon", "horizon = ten", "jobs = 0",
])
def test_config_errors(text):
    with pytest.raises(UsageError):
        parse_config_text(text)


def _cfg(tmp_path, **kw):
    base = dict(env="riverswim:n_states=4", agents=("psrl",), horizon=100, seeds=(0,),
                out=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_run_writes_one_trace(tmp_path):
    run_experiment(_cfg(tmp_path))
    files = sorted(os.listdir(tmp_path / "out"))
    assert files == ["summary.csv", "trace_psrl_seed0.csv"]
    lines = (tmp_path / "out" / "trace_psrl_seed0.csv").read_text().splitlines()
    assert lines[0] == "t,reward,cumulative_regret,epoch_index" and len(lines) == 101


def test_summary_rows(tmp_path):
    summary, _ = run_experiment(_cfg(tmp_path, agents=("psrl", "ucrl2"), seeds=tuple(range(5))))
    with open(tmp_path / "out" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["agent"] for r in rows] == ["psrl", "ucrl2"]
    assert list(rows[0]) == ["agent", "env", "T", "seeds", "mean_final_regret", "std_final_regret"]
    assert all(r["seeds"] == "5" and r["T"] == "100" for r in rows)
    finals = [np.loadtxt(tmp_path / "out" / f"trace_psrl_seed{s}.csv", delimiter=",",
                         skiprows=1)[-1, 2] for s in range(5)]
    assert float(rows[0]["mean_final_regret"]) == pytest.approx(np.mean(finals))
    assert float(rows[0]["std_final_regret"]) == pytest.approx(np.std(finals, ddof=1))


def _snapshot(path):
    return {f: open(os.path.join(path, f), "rb").read() for f in sorted(os.listdir(path))}


def test_rerun_and_parallel_identical(tmp_path):
    cfg = _cfg(tmp_path, agents=("psrl", "ucrl2"), seeds=(0, 1, 2), horizon=300)
    run_experiment(cfg)
    first = _snapshot(cfg.out)
    run_experiment(cfg)
    assert _snapshot(cfg.out) == first
    par = cfg.override(out=str(tmp_path / "par"), jobs=3)
    run_experiment(par)
    assert _snapshot(par.out) == first


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(UsageError):
        run_experiment(_cfg(tmp_path, out=str(blocker / "sub")))


def test_aborted_run_exits_nonzero(tmp_path, monkeypatch, capsys):
    from regretlab import harness
    from regretlab.agents import RunAbortedError

    def boom(*args, **kwargs):
        raise RunAbortedError("planner failed twice")

    monkeypatch.setattr(harness, "run_psrl", boom)
    assert cli.main(["run", "--out", str(tmp_path / "o")]) == 1
    assert "aborted" in capsys.readouterr().err


def test_empty_check_list_header_only(tmp_path):
    path = tmp_path / "c.csv"
    write_reports(run_checks([]), path)
    assert path.read_text() == "name,trials,estimate,target,direction,standard_error,pass\n"


def test_named_check_passes():
    reports = run_checks(["beta_anti"], seed=0)
    assert len(reports) == 1 and reports[0].passed and reports[0].name == "beta_anti"


def test_unknown_check():
    with pytest.raises(UsageError):
        run_checks(["nope"])


def test_check_streams_independent_of_order():
    a = run_checks(["chernoff", "beta_anti"], seed=3)
    b = run_checks(["beta_anti", "chernoff"], seed=3)
    assert a[0] == b[1] and a[1] == b[0]
    assert check_rng("x", 1).random() != check_rng("y", 1).random()


def test_full_check_suite_passes():
    reports = run_checks(list(CHECKS), seed=0)
    assert all(r.passed for r in reports), [str(r) for r in reports if not r.passed]


def test_cli_check_writes_csv(tmp_path, capsys):
    assert cli.main(["check", "beta_anti", "chernoff", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "checks.csv")))
    assert rows[0][0] == "name" and [r[0] for r in rows[1:]] == ["beta_anti", "chernoff"]


def test_cli_solve_and_validate(tmp_path, capsys):
    assert cli.main(["solve", "two_state:p=0.5,q=0.25"]) == 0
    out = capsys.readouterr().out
    values = dict(line.split(" ", 1) for line in out.splitlines())
    assert float(values["diameter"]) == pytest.approx(4.0, abs=1e-6)
    assert float(values["gain"]) == pytest.approx(2 / 3, abs=1e-6)
    path = tmp_path / "m.txt"
    save(make_two_state_chain(0.5, 0.5), path)
    assert cli.main(["validate", str(path)]) == 0
    path.write_text("1 1 0\n0 0 2.0 1.0\n")
    assert cli.main(["validate", str(path)]) == 1
    assert cli.main(["solve", "nowhere"]) == 2


def test_cli_run_with_config_and_overrides(tmp_path):
    conf = tmp_path / "exp.cfg"
    conf.write_text(f"env = two_state:p=0.5,q=0.5\nagents = psrl\nhorizon = 50\nseeds = 0-2\n"
                    f"out = {tmp_path / 'a'}\n")
    assert cli.main(["run", "--config", str(conf), "--seed", "9", "--out", str(tmp_path / "b"),
                     "--preset", "theory"]) == 0
    assert sorted(os.listdir(tmp_path / "b")) == ["summary.csv", "trace_psrl_seed9.csv"]


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "regretlab.cli", "check"], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "name,trials,estimate,target,direction,standard_error,pass"
