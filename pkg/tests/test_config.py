from __future__ import annotations

import math

import pytest

from conesolve.config import ConfigError, RunConfig, load_config, parse_angle, parse_config


def test_empty_file_is_defaults():
    assert parse_config("") == RunConfig()
    assert load_config(None) == RunConfig()


def test_full_file(tmp_path):
    text = """
# desk run
[problem]
p = 4
omega = 0.75 pi   # radians
k = 2
rho = auto
seed = 3
[grid]
n_theta = 48
T = auto
[contour]
n_nodes = 100
backend = formula
[tolerances]
fp_tol = 1e-9
"""
    path = tmp_path / "run.cfg"
    path.write_text(text)
    cfg = load_config(str(path))
    assert cfg.params.p == 4.0 and cfg.params.nu == pytest.approx(2.5)
    assert cfg.params.omega == pytest.approx(0.75 * math.pi)
    assert cfg.rho_auto and cfg.seed == 3
    assert cfg.grid.n_theta == 48 and cfg.grid.T == "auto" and cfg.grid.n_t == 64
    assert cfg.contour.backend == "formula" and cfg.tol.fp_tol == 1e-9
    assert cfg.as_dict()["problem"]["rho"] == "auto"


@pytest.mark.parametrize("text,value", [("pi/2", math.pi / 2), (" 2*pi", 2 * math.pi),
                                        ("0.75 pi", 0.75 * math.pi), ("-pi", -math.pi),
                                        ("pi", math.pi), ("1.25", 1.25)])
def test_angles(text, value):
    assert parse_angle(text) == pytest.approx(value)


@pytest.mark.parametrize("text,line", [
    ("[problem]\np = 0.5\n", 2),
    ("[problem]\np = 2\np = 3\n", 3),
    ("[mesh]\n", 1),
    ("p = 2\n", 1),
    ("[problem]\nnu = 2\n", 2),
    ("[grid]\n\nfoo = 1\n", 3),
    ("[grid]\nn_theta = lots\n", 2),
    ("[problem]\nthis line is wrong\n", 2),
    ("[contour]\nbackend = gpu\n", 2),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
