from __future__ import annotations

import csv
import json
import os

import numpy as np
import pytest

from conesolve import cli


def _run(tmp_path, *args, config=None):
    argv = ["--out", str(tmp_path)]
    if config is not None:
        cfg = tmp_path / "run.cfg"
        cfg.write_text(config)
        argv += ["--config", str(cfg)]
    return cli.main(argv + list(args))


def _csv(path):
    with open(path) as fh:
        first = fh.readline()
        assert first.startswith("# ")
        meta = json.loads(first[2:])
        rows = list(csv.reader(fh))
    return meta, rows[0], rows[1:]


def test_roots_outputs(tmp_path):
    assert _run(tmp_path, "roots", "--families", "plus", "minus") == 0
    doc = json.loads((tmp_path / "roots.json").read_text())
    assert doc["schema"] == 1
    assert doc["tau"] == pytest.approx(4.212392230490661, abs=1e-10)
    meta, header, rows = _csv(tmp_path / "roots.csv")
    assert meta["schema"] == 1 and "config" in meta
    assert len(rows) > 0


def test_small_commands(tmp_path):
    assert _run(tmp_path, "eigs") == 0
    assert _run(tmp_path, "resolve-angular", "--lambda", "-10") == 0
    assert _run(tmp_path, "resolve-angular", "--lambda=-10,2", "--variant", "omega") == 0
    assert _run(tmp_path, "resolve-temporal", "--lambda", "25", "--n-t", "501") == 0
    assert _run(tmp_path, "bip-check", "--r", "1", "--stride", "1000") == 0
    assert not (tmp_path / cli.LOCK_NAME).exists()


def test_bad_lambda_is_usage_error(tmp_path):
    # a well-formed value on the branch cut is a failed computation, a malformed one is usage
    assert _run(tmp_path, "resolve-angular", "--lambda", "4") == 1
    assert _run(tmp_path, "resolve-angular", "--lambda", "abc") == 2


def test_solve_and_reconstruct(tmp_path):
    cfg = "[grid]\nn_theta = 33\nn_t = 33\n[contour]\nn_nodes = 80\n"
    assert _run(tmp_path, "solve", "--rho", "2", "--n-r", "16", config=cfg) == 0
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert trace["config"]["grid"]["n_theta"] == 33
    meta, header, rows = _csv(tmp_path / "solution.csv")
    assert header == list(cli.FIELD_HEADER)
    assert len(rows) == 33 * 33
    first = (tmp_path / "u.csv").read_bytes()
    assert _run(tmp_path, "reconstruct", "--input", str(tmp_path / "solution.csv"), "--n-r", "16", config=cfg) == 0
    assert (tmp_path / "u.csv").exists()
    # a second identical solve is byte-identical
    assert _run(tmp_path, "solve", "--rho", "2", "--n-r", "16", config=cfg) == 0
    assert (tmp_path / "u.csv").read_bytes() == first


def test_config_errors_exit_2(tmp_path, capsys):
    assert _run(tmp_path, "eigs", config="[problem]\np = 0.5\n") == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["--out", str(tmp_path), "--config", str(tmp_path / "missing.cfg"), "eigs"]) == 2
    assert cli.main(["no-such-command"]) == 2


def test_locked_directory(tmp_path):
    (tmp_path / cli.LOCK_NAME).write_text("123")
    assert _run(tmp_path, "eigs") == 2
    assert (tmp_path / cli.LOCK_NAME).exists()


def test_verify_subset(tmp_path):
    assert _run(tmp_path, "verify", "--only", "1", "2") == 0
    doc = json.loads((tmp_path / "verdict.json").read_text())
    assert [c["number"] for c in doc["criteria"]] == [1, 2]
    assert all(c["status"] == "pass" for c in doc["criteria"])
