import json

import pytest

from rpgcache import benchmarks
from rpgcache.cli import main, parse_range
from rpgcache.logic import Backend, read_formula
from rpgcache.pipeline import EXIT_BACKEND, EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_OK


@pytest.fixture
def robot_file(tmp_path):
    p = tmp_path / "robot.rpg"
    assert main(["bench", "robot-collect", "-o", str(p)]) == EXIT_OK
    return p


@pytest.fixture
def chain_file(tmp_path):
    p = tmp_path / "chain.rpg"
    p.write_text(benchmarks.benchmark_text("chain-simple", 1))
    return p


def test_bench_stdout(capsys):
    assert main(["bench", "chain-simple", "--k", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out == benchmarks.benchmark_text("chain-simple", 2)
    assert "(locations" in out and "l2" in out


def test_check(robot_file, capsys, tmp_path):
    assert main(["check", str(robot_file)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"
    bad = tmp_path / "bad.rpg"
    bad.write_text("(theory LIA) (inputs) (vars (x Int)) (locations l) (transitions (l (> x 0) () l)) (objective (buchi l))")
    assert main(["check", str(bad), "--json"]) == EXIT_INVALID
    data = json.loads(capsys.readouterr().out)
    assert data["ok"] is False and data["locations"]["l"]["cover"] is False


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "broken.rpg"
    p.write_text("(theory LIA")
    assert main(["solve", str(p)]) == EXIT_INVALID
    assert "invalid game" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "missing.rpg")]) == EXIT_INVALID


def test_solve_json_robot(robot_file, capsys):
    assert main(["solve", str(robot_file), "--mode", "cache", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    g, _ = benchmarks.robot_collect()
    with Backend() as b:
        f = read_formula(data["winning"]["base"], g.var_names)
        assert b.equiv(f, g.inv["base"])
    assert data["realizable_from"] == ["base", "mine", "move"]
    assert data["stats"]["mode"] == "cache"


def test_solve_inconclusive(robot_file, capsys):
    code = main(["solve", str(robot_file), "--mode", "baseline", "--accel", "off", "--max-iters", "30", "--json"])
    assert code == EXIT_INCONCLUSIVE
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "inconclusive" and "mine" in data["last_iterate"]


def test_solve_backend_failure(robot_file, capsys):
    assert main(["solve", str(robot_file), "--solver-cmd", "no-such-solver-binary"]) == EXIT_BACKEND
    assert "solver failure" in capsys.readouterr().err


def test_solver_env_variable(robot_file, monkeypatch, capsys):
    monkeypatch.setenv("RPG_SOLVER_CMD", "no-such-solver-binary")
    assert main(["check", str(robot_file)]) == EXIT_BACKEND


def test_emit_and_reload_cache(chain_file, tmp_path, capsys):
    cache = tmp_path / "cache.json"
    props = tmp_path / "props.json"
    prefix = tmp_path / "abs"
    args = ["solve", str(chain_file), "--emit-cache", str(cache), "--emit-proposals", str(props),
            "--emit-dot", str(prefix), "--json"]
    assert main(args) == EXIT_OK
    first = json.loads(capsys.readouterr().out)
    entries = json.loads(cache.read_text())
    assert entries and json.loads(props.read_text())
    assert (tmp_path / "abs.up.dot").read_text().startswith("digraph")
    assert main(["solve", str(chain_file), "--mode", "baseline", "--load-cache", str(cache), "--json"]) == EXIT_OK
    second = json.loads(capsys.readouterr().out)
    assert second["winning"] == first["winning"]
    assert second["stats"]["cache_hits"]
    assert main(["oracle", str(chain_file), "--check-cache", str(cache), "--compare"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] and report["symbolic_agrees"] and all(c["ok"] for c in report["cache"])


def test_oracle_templates(chain_file, capsys):
    assert main(["oracle", str(chain_file), "--check-templates", "--default-range=-1..1"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert any(t.get("ok") for t in report["templates"])


def test_oracle_ranges(robot_file, capsys):
    assert main(["oracle", str(robot_file), "--range", "samp=0..2", "--range", "req=0..2", "--range", "i=0..1"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["env_states"] == 27 and report["closed"]


def test_abstract_command(robot_file, tmp_path, capsys):
    assert main(["abstract", str(robot_file), "--emit-dot", str(tmp_path / "r")]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert [g["direction"] for g in data["games"]] == ["up", "down"]
    assert (tmp_path / "r.down.dot").exists()


def test_parse_range():
    assert parse_range("-1..2") == [-1, 0, 1, 2]
    assert [str(x) for x in parse_range("0..1:0.5")] == ["0", "1/2", "1"]
