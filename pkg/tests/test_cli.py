import subprocess
import sys

import numpy as np
import pytest

from expdyn.cli import main
from expdyn.io import CONVERGE_COLUMNS, RUN_COLUMNS, SUBSPACE_COLUMNS, read_csv

RUN = """\
[mesh]
lengths = 1.0 0.1 0.1
divisions = 2 1 1

[material]
model = {model}
young = 1e4
poisson = 0.3

[integrator]
scheme = {scheme}
dt = 1e-3
t_final = 0.01

[load]
traction = 0 0 -0.1

[output]
csv = run.csv
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.mark.parametrize("scheme", ["ep", "newmark", "hht"])
def test_run_writes_trajectory(tmp_path, scheme):
    cfg = write(tmp_path, RUN.format(model="linear", scheme=scheme))
    assert main(["run", "--config", cfg, "--deterministic"]) == 0
    header, rows = read_csv(tmp_path / "run.csv")
    assert tuple(header) == RUN_COLUMNS
    assert len(rows) == 10
    assert {r[2] for r in rows} == {scheme}
    assert all(r[-1] == "0.0" for r in rows)
    totals = np.array([float(r[8]) for r in rows])
    if scheme != "hht":  # HHT dissipates by design
        assert np.ptp(totals) < 1e-8 * abs(totals).max()


def test_run_svk_with_threads_and_vtk(tmp_path):
    cfg = write(tmp_path, RUN.format(model="svk", scheme="ep") + "every = 5\nvtk = true\n")
    assert main(["run", "--config", cfg, "--threads", "2"]) == 0
    assert sorted(p.name for p in tmp_path.glob("*.vtk")) == ["step_000005.vtk", "step_000010.vtk"]


def test_deterministic_runs_identical(tmp_path):
    cfg = write(tmp_path, RUN.format(model="svk", scheme="ep"))
    main(["run", "--config", cfg, "--deterministic"])
    first = (tmp_path / "run.csv").read_bytes()
    main(["run", "--config", cfg, "--deterministic", "--threads", "4"])
    assert (tmp_path / "run.csv").read_bytes() == first


CONVERGE = """\
[mesh]
lengths = 1.0 0.3 0.3
divisions = 1 1 1
[material]
model = linear
young = 1e4
poisson = 0.3
[integrator]
scheme = ep
dt = 1e-3
t_final = 0.012
[initial]
velocity = 0 0 1
profile = quadratic
[converge]
dts = 4e-4 2e-4 1e-4
reference_dt = 1e-3
schemes = newmark
"""


def test_converge(tmp_path, capsys):
    cfg = write(tmp_path, CONVERGE)
    assert main(["converge", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "converge.csv")
    assert tuple(header) == CONVERGE_COLUMNS
    assert [r[0] for r in rows] == ["error"] * 3 + ["order"]
    assert rows[-1][2] == "nan"
    assert float(rows[-1][3]) == pytest.approx(2.0, abs=0.1)
    assert "newmark: fitted order" in capsys.readouterr().out


def test_converge_rejects_non_dividing_step(tmp_path, capsys):
    cfg = write(tmp_path, CONVERGE.replace("t_final = 0.012", "t_final = 0.011"))
    assert main(["converge", "--config", cfg]) == 2
    assert "does not divide" in capsys.readouterr().err


def test_converge_single_step_has_no_order(tmp_path, capsys):
    cfg = write(tmp_path, CONVERGE.replace("dts = 4e-4 2e-4 1e-4", "dts = 4e-4"))
    assert main(["converge", "--config", cfg]) == 0
    _, rows = read_csv(tmp_path / "converge.csv")
    assert rows[-1][:2] == ["order", "newmark"] and rows[-1][3:] == ["nan", "nan"]
    assert "not available" in capsys.readouterr().out


def test_subspace(tmp_path):
    text = RUN.format(model="linear", scheme="ep") + "[subspace]\ndts = 1e-4 1e-3\nm_values = 5 10 20\n"
    cfg = write(tmp_path, text)
    assert main(["subspace", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "subspace.csv")
    assert tuple(header) == SUBSPACE_COLUMNS and len(rows) == 6
    assert all(float(r[3]) >= 0 for r in rows)
    assert min(float(r[2]) for r in rows if float(r[0]) == 1e-4) < 1e-10


def test_subspace_rejects_nonlinear(tmp_path, capsys):
    text = RUN.format(model="svk", scheme="ep") + "[subspace]\ndts = 1e-4\nm_values = 5\n"
    assert main(["subspace", "--config", write(tmp_path, text)]) == 2
    assert "linear material" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, RUN.format(model="svk", scheme="ep").replace("dt = 1e-3", "dt = x"))
    assert main(["run", "--config", cfg]) == 2
    assert "line 12" in capsys.readouterr().err


def test_simulation_failure_exit_code(tmp_path):
    text = RUN.format(model="svk", scheme="ep").replace("traction = 0 0 -0.1", "traction = 0 0 -5")
    assert main(["run", "--config", write(tmp_path, text)]) == 1


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, RUN.format(model="linear", scheme="ep"))
    out = subprocess.run([sys.executable, "-m", "expdyn.cli", "run", "--config", cfg],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
