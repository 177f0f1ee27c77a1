import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from expdyn.io import VTK_ORDER, format_value, read_csv, write_csv, write_vtk
from expdyn.mesh import LOCAL_LATTICE, generate_box_mesh


@given(st.floats(allow_nan=False))
def test_float_round_trip(x):
    assert float(format_value(x)) == x


def test_special_values():
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(np.int64(7)) == "7"
    assert format_value(True) == "1"
    assert format_value(0.003) == "0.003"


def test_csv_round_trip(tmp_path):
    path = tmp_path / "a" / "x.csv"
    write_csv(path, ("a", "b"), [(1, 0.5), (2, float("nan"))])
    header, rows = read_csv(path)
    assert header == ["a", "b"] and rows == [["1", "0.5"], ["2", "nan"]]
    assert path.read_bytes() == b"a,b\n1,0.5\n2,nan\n"


def test_vtk_node_order():
    corners = LOCAL_LATTICE[VTK_ORDER[:8]]
    assert corners.tolist()[:4] == [[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0]]
    assert sorted(VTK_ORDER.tolist()) == list(range(27))
    assert VTK_ORDER[26] == 13


def test_vtk_file(tmp_path):
    mesh = generate_box_mesh((1, 1, 1), (2, 1, 1))
    disp = np.arange(mesh.n_dofs, dtype=float)
    write_vtk(tmp_path / "m.vtk", mesh, disp)
    lines = (tmp_path / "m.vtk").read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert f"POINTS {mesh.n_nodes} double" in lines
    assert "CELLS 2 56" in lines
    i = lines.index("CELL_TYPES 2")
    assert lines[i + 1:i + 3] == ["29", "29"]
    j = lines.index("VECTORS displacement double")
    assert lines[j + 2] == "3.0 4.0 5.0"
    assert len(lines) == j + 1 + mesh.n_nodes
