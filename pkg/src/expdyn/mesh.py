"""Structured 27-node hexahedral box meshes and boundary tagging.

Local node ordering inside an element is the tensor-product ordering of the
3x3x3 lattice with xi running fastest, then eta, then zeta::

    local = a + 3*b + 9*c,   a, b, c in {0, 1, 2}  <->  xi, eta, zeta in {-1, 0, 1}

Local face ids: 0: xi=-1, 1: xi=+1, 2: eta=-1, 3: eta=+1, 4: zeta=-1, 5: zeta=+1.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np


class MeshError(ValueError):
    pass


class RegionEmptyError(MeshError):
    pass


@dataclass(frozen=True)
class DirichletTag:
    nodes: np.ndarray
    components: tuple[int, ...]
    value: float = 0.0


@dataclass(frozen=True)
class NeumannTag:
    name: str
    # rows of (element, local face id)
    faces: np.ndarray
    # rows of 9 global node indices, one per face
    face_nodes: np.ndarray


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    elements: np.ndarray
    dirichlet: tuple[DirichletTag, ...] = ()
    neumann: tuple[NeumannTag, ...] = ()

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise MeshError("nodes must be an (n, 3) array")
        if elements.ndim != 2 or elements.shape[1] != 27:
            raise MeshError("elements must be an (n, 27) array")
        if elements.size and (elements.min() < 0 or elements.max() >= len(nodes)):
            raise MeshError("connectivity references a missing node")
        for row in elements:
            if len(np.unique(row)) != 27:
                raise MeshError("element references a node twice")
        for tag in self.dirichlet:
            if np.any(tag.nodes < 0) or np.any(tag.nodes >= len(nodes)):
                raise MeshError("dirichlet tag references a missing node")
        for tag in self.neumann:
            if np.any(tag.faces[:, 0] >= len(elements)):
                raise MeshError(f"neumann tag {tag.name!r} references a missing element")
        nodes.flags.writeable = False
        elements.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_dofs(self) -> int:
        return 3 * len(self.nodes)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.nodes.min(axis=0), self.nodes.max(axis=0)

    def neumann_tag(self, name: str) -> NeumannTag:
        for tag in self.neumann:
            if tag.name == name:
                return tag
        raise KeyError(name)


# (a, b, c) lattice position of each local node
LOCAL_LATTICE = np.array([(a, b, c) for c in range(3) for b in range(3) for a in range(3)])

# local node ids on each face, listed in the face's own (s, t) tensor order
FACE_LOCAL_NODES = np.array(
    [
        [a + 3 * b + 9 * c for c in range(3) for b in range(3) for a in (0,)],
        [a + 3 * b + 9 * c for c in range(3) for b in range(3) for a in (2,)],
        [a + 3 * b + 9 * c for c in range(3) for b in (0,) for a in range(3)],
        [a + 3 * b + 9 * c for c in range(3) for b in (2,) for a in range(3)],
        [a + 3 * b + 9 * c for c in (0,) for b in range(3) for a in range(3)],
        [a + 3 * b + 9 * c for c in (2,) for b in range(3) for a in range(3)],
    ]
)


def generate_box_mesh(lengths: Sequence[float], divisions: Sequence[int],
                      origin: Sequence[float] = (0.0, 0.0, 0.0)) -> Mesh:
    """Build a regular lattice of 27-node hexahedra filling an axis-aligned box.

    Node count is prod(2*div + 1) and element count is prod(div).
    """
    lengths = tuple(float(v) for v in lengths)
    divisions = tuple(divisions)
    if len(lengths) != 3 or len(divisions) != 3:
        raise MeshError("lengths and divisions need three entries")
    if any(not np.isfinite(v) or v <= 0 for v in lengths):
        raise MeshError(f"box lengths must be positive, got {lengths}")
    if any(int(d) != d or d < 1 for d in divisions):
        raise MeshError(f"divisions must be positive integers, got {divisions}")
    nx, ny, nz = (int(d) for d in divisions)
    px, py, pz = 2 * nx + 1, 2 * ny + 1, 2 * nz + 1

    axes = [origin[i] + lengths[i] * np.arange(p) / (p - 1) for i, p in enumerate((px, py, pz))]
    k, j, i = np.meshgrid(np.arange(pz), np.arange(py), np.arange(px), indexing="ij")
    nodes = np.column_stack([axes[0][i.ravel()], axes[1][j.ravel()], axes[2][k.ravel()]])

    ex, ey, ez = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ex, ey, ez = (v.transpose(2, 1, 0).ravel() for v in (ex, ey, ez))
    gi = 2 * ex[:, None] + LOCAL_LATTICE[None, :, 0]
    gj = 2 * ey[:, None] + LOCAL_LATTICE[None, :, 1]
    gk = 2 * ez[:, None] + LOCAL_LATTICE[None, :, 2]
    elements = gi + px * (gj + py * gk)
    return Mesh(nodes, elements)


@dataclass(frozen=True)
class Box:
    """Axis-aligned selection region; bounds default to unbounded."""

    lo: tuple[float, float, float] = (-np.inf, -np.inf, -np.inf)
    hi: tuple[float, float, float] = (np.inf, np.inf, np.inf)
    tol: float = 1e-9

    def contains(self, points: np.ndarray) -> np.ndarray:
        scale = max(1.0, float(np.max(np.abs(points)))) if len(points) else 1.0
        eps = self.tol * scale
        lo = np.asarray(self.lo) - eps
        hi = np.asarray(self.hi) + eps
        return np.all((points >= lo) & (points <= hi), axis=1)


def plane(axis: int, value: float, tol: float = 1e-9) -> Box:
    lo = [-np.inf] * 3
    hi = [np.inf] * 3
    lo[axis] = hi[axis] = value
    return Box(tuple(lo), tuple(hi), tol)


@dataclass(frozen=True)
class Dirichlet:
    components: tuple[int, ...] = (0, 1, 2)
    value: float = 0.0


@dataclass(frozen=True)
class Neumann:
    name: str = "load"


def boundary_faces(mesh: Mesh) -> np.ndarray:
    """(element, face) pairs whose 9 nodes are not shared with another element's face."""
    counts: dict[tuple[int, ...], int] = {}
    keys = []
    for e, conn in enumerate(mesh.elements):
        for f in range(6):
            key = tuple(sorted(conn[FACE_LOCAL_NODES[f]]))
            counts[key] = counts.get(key, 0) + 1
            keys.append((e, f, key))
    return np.array([(e, f) for e, f, key in keys if counts[key] == 1], dtype=np.int64).reshape(-1, 2)


def tag_boundary(mesh: Mesh, region: Box, kind: Dirichlet | Neumann) -> Mesh:
    """Return a copy of ``mesh`` with the nodes or exterior faces inside ``region`` tagged."""
    if isinstance(kind, Dirichlet):
        if not kind.components or any(c not in (0, 1, 2) for c in kind.components):
            raise MeshError(f"invalid constrained components {kind.components}")
        selected = np.flatnonzero(region.contains(mesh.nodes))
        if selected.size == 0:
            raise RegionEmptyError(f"no nodes inside {region}")
        tag = DirichletTag(selected, tuple(sorted(set(kind.components))), float(kind.value))
        return replace(mesh, dirichlet=mesh.dirichlet + (tag,))
    if isinstance(kind, Neumann):
        faces = boundary_faces(mesh)
        inside = region.contains(mesh.nodes)
        keep = [
            (e, f) for e, f in faces if inside[mesh.elements[e, FACE_LOCAL_NODES[f]]].all()
        ]
        if not keep:
            raise RegionEmptyError(f"no boundary face inside {region}")
        if any(t.name == kind.name for t in mesh.neumann):
            raise MeshError(f"neumann tag {kind.name!r} already exists")
        faces = np.array(keep, dtype=np.int64)
        face_nodes = np.array([mesh.elements[e, FACE_LOCAL_NODES[f]] for e, f in faces])
        return replace(mesh, neumann=mesh.neumann + (NeumannTag(kind.name, faces, face_nodes),))
    raise TypeError(f"unknown boundary kind {kind!r}")


def constrained_dofs(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Sorted constrained global dofs and their prescribed values."""
    values: dict[int, float] = {}
    for tag in mesh.dirichlet:
        for node in tag.nodes:
            for c in tag.components:
                values[3 * int(node) + c] = tag.value
    dofs = np.array(sorted(values), dtype=np.int64)
    return dofs, np.array([values[d] for d in dofs], dtype=float)


# ---------------------------------------------------------------------------
# plain-text serialization


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_mesh(mesh))


def format_mesh(mesh: Mesh) -> str:
    lines = [f"hex27 {mesh.n_nodes} {mesh.n_elements}"]
    lines += [" ".join(repr(float(x)) for x in xyz) for xyz in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in conn) for conn in mesh.elements]
    for tag in mesh.dirichlet:
        comps = "".join(str(c) for c in tag.components)
        lines.append(f"dirichlet {len(tag.nodes)} {comps} {float(tag.value)!r}")
        lines.append(" ".join(str(int(n)) for n in tag.nodes))
    for tag in mesh.neumann:
        lines.append(f"neumann {tag.name} {len(tag.faces)}")
        lines += [f"{int(e)} {int(f)}" for e, f in tag.faces]
    return "\n".join(lines) + "\n"


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        return parse_mesh(fh.read())


def parse_mesh(text: str) -> Mesh:
    lines = text.splitlines()
    pos = 0

    def take() -> tuple[int, list[str]]:
        nonlocal pos
        if pos >= len(lines):
            raise MeshError("unexpected end of mesh file")
        pos += 1
        return pos, lines[pos - 1].split()

    lineno, head = take()
    if len(head) != 3 or head[0] != "hex27":
        raise MeshError(f"line {lineno}: expected 'hex27 <nnodes> <nelems>'")
    n_nodes, n_elems = int(head[1]), int(head[2])
    nodes = np.array([[float(v) for v in take()[1]] for _ in range(n_nodes)]).reshape(-1, 3)
    elements = np.array([[int(v) for v in take()[1]] for _ in range(n_elems)]).reshape(-1, 27)
    mesh = Mesh(nodes, elements)
    dirichlet, neumann = [], []
    while pos < len(lines):
        lineno, words = take()
        if not words:
            continue
        if words[0] == "dirichlet":
            count, comps, value = int(words[1]), tuple(int(c) for c in words[2]), float(words[3])
            ids = np.array([int(v) for v in take()[1]], dtype=np.int64)
            if len(ids) != count:
                raise MeshError(f"line {lineno}: expected {count} node ids")
            dirichlet.append(DirichletTag(ids, comps, value))
        elif words[0] == "neumann":
            name, count = words[1], int(words[2])
            faces = np.array([[int(v) for v in take()[1]] for _ in range(count)], dtype=np.int64)
            face_nodes = np.array([mesh.elements[e, FACE_LOCAL_NODES[f]] for e, f in faces])
            neumann.append(NeumannTag(name, faces.reshape(-1, 2), face_nodes.reshape(-1, 9)))
        else:
            raise MeshError(f"line {lineno}: unknown block {words[0]!r}")
    return Mesh(mesh.nodes, mesh.elements, tuple(dirichlet), tuple(neumann))


def interior_sharing_counts(mesh: Mesh) -> np.ndarray:
    """Number of elements referencing each node."""
    return np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes)


def cantilever(lengths: Iterable[float] = (1.0, 0.1, 0.1), divisions: Iterable[int] = (4, 1, 1),
               clamp_axis: int = 0, load_name: str | None = "tip") -> Mesh:
    """Box clamped at X[clamp_axis] = min, optionally with the opposite face tagged for loading."""
    mesh = generate_box_mesh(tuple(lengths), tuple(divisions))
    lo, hi = mesh.bounding_box()
    mesh = tag_boundary(mesh, plane(clamp_axis, lo[clamp_axis]), Dirichlet())
    if load_name:
        mesh = tag_boundary(mesh, plane(clamp_axis, hi[clamp_axis]), Neumann(load_name))
    return mesh
