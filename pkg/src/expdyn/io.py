"""CSV and legacy-VTK writers."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mesh import LOCAL_LATTICE, Mesh

RUN_COLUMNS = ("step", "t", "scheme", "probe_ux", "probe_uy", "probe_uz", "kinetic",
               "potential", "total", "m_used", "epsilon_m", "wall_seconds")
CONVERGE_COLUMNS = ("kind", "scheme", "dt", "rel_error_u", "rel_error_v")
SUBSPACE_COLUMNS = ("dt", "m", "actual", "estimate")

VTK_TRIQUADRATIC_HEXAHEDRON = 29


def format_value(x) -> str:
    """Locale-independent text: integers as-is, floats round-trippable with '.' decimals."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)  # shortest round-trip form
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            writer.writerow([format_value(x) for x in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _vtk_permutation() -> np.ndarray:
    """Local tensor-order index for each VTK triquadratic-hexahedron node."""
    corners = [(0, 0, 0), (2, 0, 0), (2, 2, 0), (0, 2, 0), (0, 0, 2), (2, 0, 2), (2, 2, 2), (0, 2, 2)]
    edges = [(1, 0, 0), (2, 1, 0), (1, 2, 0), (0, 1, 0), (1, 0, 2), (2, 1, 2), (1, 2, 2), (0, 1, 2),
             (0, 0, 1), (2, 0, 1), (2, 2, 1), (0, 2, 1)]
    faces = [(0, 1, 1), (2, 1, 1), (1, 0, 1), (1, 2, 1), (1, 1, 0), (1, 1, 2)]
    lattice = corners + edges + faces + [(1, 1, 1)]
    lookup = {tuple(p): i for i, p in enumerate(LOCAL_LATTICE.tolist())}
    return np.array([lookup[p] for p in lattice])


VTK_ORDER = _vtk_permutation()


def write_vtk(path, mesh: Mesh, displacement: np.ndarray, title: str = "expdyn") -> None:
    """Legacy ASCII UNSTRUCTURED_GRID with 27-node hexahedra and point displacements."""
    disp = np.asarray(displacement, dtype=float).reshape(mesh.n_nodes, 3)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fv = format_value
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_nodes} double"]
    lines += [" ".join(fv(x) for x in p) for p in mesh.nodes]
    ne = mesh.n_elements
    lines.append(f"CELLS {ne} {ne * 28}")
    lines += ["27 " + " ".join(str(int(i)) for i in conn[VTK_ORDER]) for conn in mesh.elements]
    lines.append(f"CELL_TYPES {ne}")
    lines += [str(VTK_TRIQUADRATIC_HEXAHEDRON)] * ne
    lines += [f"POINT_DATA {mesh.n_nodes}", "VECTORS displacement double"]
    lines += [" ".join(fv(x) for x in d) for d in disp]
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
