import json

import pytest

from gmeasure import __version__
from gmeasure.cli import COMMANDS, EXIT_CONFIG, EXIT_HORIZON, EXIT_OK, main
from gmeasure.config import ExperimentConfig, canonical_json

MARKOV = {"family": "markov", "s": 2, "order": 1, "table": [[0.6, 0.4], [0.3, 0.7]]}
BK = {"family": "bk", "eps": 0.1, "r": 0.75, "m": {"rule": "arithmetic", "start": 1, "step": 2}}
BK_FAST = {"family": "bk", "eps": 0.05, "r": 0.9, "m": {"rule": "fast", "factor": 10}}


def write_config(tmp_path, kernel, name="cfg.json", **sections):
    path = tmp_path / name
    path.write_text(json.dumps({"kernel": kernel, **sections}))
    return str(path)


def run(tmp_path, cmd, cfg, *extra, out="out"):
    return main([cmd, "--config", cfg, "--out", str(tmp_path / out), *extra])


def report(tmp_path, cmd, out="out"):
    return json.loads((tmp_path / out / f"{cmd}.json").read_text())


def test_sample_markov_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, MARKOV, run={"n": 10})
    assert run(tmp_path, "sample", cfg, "--seed", "5", out="a") == EXIT_OK
    assert run(tmp_path, "sample", cfg, "--seed", "5", out="b") == EXIT_OK
    a = (tmp_path / "a" / "sample.csv").read_text()
    assert a == (tmp_path / "b" / "sample.csv").read_text()
    assert len(a.strip().splitlines()) == 11  # header plus one row per position
    rep = report(tmp_path, "sample", "a")
    assert rep["result"]["status"] == "ok"
    assert rep["config"]["run"]["seed"] == 5
    assert rep["version"] == __version__


def test_decompose_bk_first_weight(tmp_path):
    cfg = write_config(tmp_path, BK, decomposition={"mode": "discrete"})
    assert run(tmp_path, "decompose", cfg) == EXIT_OK
    res = report(tmp_path, "decompose")["result"]
    assert res["weights"][0] == pytest.approx(0.2, abs=1e-15)
    assert res["entropy"]["value"] == pytest.approx(2.4385043224303633, abs=1e-9)


def test_theta_fast_bk_hits_horizon(tmp_path, capsys):
    cfg = write_config(tmp_path, BK_FAST, run={"replicas": 50})
    code = run(tmp_path, "theta", cfg, "--horizon", "1000")
    assert code == EXIT_HORIZON
    res = report(tmp_path, "theta")["result"]
    assert res["censored"] > 0
    assert "P(theta>1000)" in capsys.readouterr().out
    assert (tmp_path / "out" / "theta_survival.csv").exists()


def test_sample_horizon_failure_reports_partial(tmp_path):
    cfg = write_config(tmp_path, BK_FAST, run={"n": 50})
    assert run(tmp_path, "sample", cfg, "--horizon", "2") == EXIT_HORIZON
    res = report(tmp_path, "sample")["result"]
    assert res["status"] == "horizon_exceeded"
    assert 0 < res["survival_at_horizon"] <= 1


@pytest.mark.parametrize("sections, needle", [
    ({"analysis": {"eps": [-0.1]}}, "eps"),
    ({"run": {"n": 0}}, "run.n"),
    ({"run": {"bogus": 1}}, "unknown keys"),
    ({"decomposition": {"mode": "discrete"}}, "discrete"),
])
def test_config_errors_exit_one(tmp_path, capsys, sections, needle):
    cfg = write_config(tmp_path, MARKOV, **sections)
    assert run(tmp_path, "sample", cfg) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InvalidParams" and needle in err["message"]
    assert not (tmp_path / "out").exists()


def test_missing_and_malformed_config(tmp_path, capsys):
    assert main(["criteria", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    assert "cannot read" in json.loads(capsys.readouterr().err)["message"]
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["criteria", "--config", str(bad)]) == EXIT_CONFIG
    bad_kernel = write_config(tmp_path, {"family": "bk", "eps": 0.7, "r": 0.75,
                                         "m": {"rule": "arithmetic", "start": 1, "step": 2}})
    assert main(["criteria", "--config", bad_kernel]) == EXIT_CONFIG


def test_digest_tracks_normalized_config(tmp_path):
    cfg = write_config(tmp_path, MARKOV)
    assert run(tmp_path, "criteria", cfg) == EXIT_OK
    rep = report(tmp_path, "criteria")
    c = ExperimentConfig.load(cfg)
    assert rep["config_digest"] == c.digest()
    # defaults written out explicitly give the same digest
    explicit = write_config(tmp_path, MARKOV, "explicit.json", run={"n": 100, "replicas": 1000})
    assert ExperimentConfig.load(explicit).digest() == c.digest()
    assert c.with_overrides(seed=1).digest() != c.digest()


def test_reports_are_reproducible(tmp_path):
    cfg = write_config(tmp_path, MARKOV, run={"n": 20, "replicas": 200},
                       analysis={"eps": [0.2], "block": 2})
    for cmd in COMMANDS:
        run(tmp_path, cmd, cfg, out="a")
        run(tmp_path, cmd, cfg, out="b")
        a, b = report(tmp_path, cmd, "a"), report(tmp_path, cmd, "b")
        a.pop("timestamp"), b.pop("timestamp")
        assert canonical_json(a) == canonical_json(b), cmd


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize("cmd", ["concentration", "entropy-rate"])
def test_horizon_in_sampling_commands_exits_two(tmp_path, cmd):
    cfg = write_config(tmp_path, BK_FAST, run={"n": 10, "replicas": 100}, analysis={"block": 2})
    assert run(tmp_path, cmd, cfg, "--horizon", "50") == EXIT_HORIZON
    res = report(tmp_path, cmd)["result"]
    assert res["status"] == "horizon_exceeded" and res["horizon_limit"] == 50
    assert isinstance(res["replica"], int)
