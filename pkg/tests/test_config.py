from pathlib import Path

import pytest

from expdyn.config import ConfigError, load_config, parse_config
from expdyn.material import LinearElastic, StVenantKirchhoff, Yeoh

BASE = """\
[mesh]
lengths = 1.0 0.1 0.1
divisions = 4 1 1

[material]
model = svk
young = 1e4
poisson = 0.3

[integrator]
scheme = ep
dt = 1e-3
t_final = 0.01
"""


def test_minimal_config():
    cfg = parse_config(BASE, "/tmp/x")
    assert isinstance(cfg.material, StVenantKirchhoff)
    assert cfg.mesh.divisions == (4, 1, 1)
    assert cfg.integrator.krylov_tol == 1e-10 and cfg.integrator.krylov_m is None
    assert cfg.output.csv == Path("/tmp/x/trajectory.csv")
    assert cfg.load.presolve and not cfg.load.active


def test_full_config():
    text = BASE.replace("model = svk", "model = linear") + """
[load]
traction = 0 0 -0.5
[initial]
velocity = 0, 0, 1
profile = quadratic
[output]
csv = out/run.csv
every = 5
vtk = yes
probe = 3
[converge]
dts = 1e-3 5e-4
reference_dt = 1e-5
schemes = ep newmark
[subspace]
dts = 1e-4 1e-3
m_step = 5
m_max = 20
"""
    cfg = parse_config(text, "/base")
    assert isinstance(cfg.material, LinearElastic)
    assert cfg.load.traction == (0.0, 0.0, -0.5)
    assert cfg.initial.velocity == (0.0, 0.0, 1.0)
    assert cfg.output.csv == Path("/base/out/run.csv") and cfg.output.every == 5
    assert cfg.output.vtk_prefix == Path("/base/step") and cfg.output.probe == 3
    assert cfg.converge.schemes == ("ep", "newmark")
    assert cfg.subspace.m_values == (5, 10, 15, 20)


def test_yeoh_defaults():
    cfg = parse_config(BASE.replace("model = svk\nyoung = 1e4\npoisson = 0.3", "model = yeoh\nrho = 2"))
    assert cfg.material == Yeoh(100.0, -1.0, 0.01, 0.001, 2.0)


def test_missing_block_named():
    text = BASE.split("[material]")[0] + BASE.split("poisson = 0.3\n")[1]
    with pytest.raises(ConfigError, match=r"missing required \[material\] block"):
        parse_config(text)


@pytest.mark.parametrize("old, new, line", [
    ("dt = 1e-3", "dt = fast", 12),
    ("dt = 1e-3", "dt = -1", 12),
    ("scheme = ep", "scheme = rk4", 11),
    ("poisson = 0.3", "poisson = 0.3\ncolour = red", 9),
    ("divisions = 4 1 1", "divisions = 4 1", 3),
    ("[integrator]", "[integrate]", 10),
    ("t_final = 0.01", "t_final", 13),
])
def test_errors_carry_line_numbers(old, new, line):
    with pytest.raises(ConfigError) as info:
        parse_config(BASE.replace(old, new))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_exclusive_options():
    with pytest.raises(ConfigError, match="not both"):
        parse_config(BASE + "krylov_m = 10\nkrylov_tol = 1e-8\n")
    with pytest.raises(ConfigError, match="exclusive"):
        parse_config(BASE + "[load]\ntraction = 0 0 1\nactive = true\n")


def test_bad_material_values():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("poisson = 0.3", "poisson = 0.5"))


def test_load_config_file(tmp_path):
    (tmp_path / "run.cfg").write_text(BASE)
    assert load_config(tmp_path / "run.cfg").base_dir == tmp_path
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")
