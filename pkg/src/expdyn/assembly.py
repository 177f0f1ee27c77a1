"""Global finite-element operators over the free (unconstrained) dofs.

Dirichlet dofs are eliminated: every vector and matrix returned here is indexed
by free dofs only. Global dof numbering is ``3 * node + component``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import kernels
from .element import face_geometry, gauss_rule_3, gll_rule_3, mesh_geometry, shape_functions
from .material import (
    LinearElastic,
    Material,
    h_coefficients,
    kinematics,
    stress_and_energy,
)
from .mesh import Mesh, constrained_dofs


class DegenerateMeshError(ValueError):
    pass


class MissingTagError(KeyError):
    pass


@dataclass(frozen=True)
class DofMap:
    n_dofs: int
    constrained: np.ndarray
    prescribed: np.ndarray
    free: np.ndarray
    # global dof -> free index, -1 when constrained
    to_free: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "DofMap":
        constrained, prescribed = constrained_dofs(mesh)
        mask = np.ones(mesh.n_dofs, dtype=bool)
        mask[constrained] = False
        free = np.flatnonzero(mask)
        to_free = np.full(mesh.n_dofs, -1, dtype=np.int64)
        to_free[free] = np.arange(len(free))
        return cls(mesh.n_dofs, constrained, prescribed, free, to_free)

    @property
    def n_free(self) -> int:
        return len(self.free)

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        """Full dof vector with prescribed values filled in."""
        full = np.zeros(self.n_dofs)
        full[self.free] = u_free
        full[self.constrained] = self.prescribed
        return full

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.free]


def b_matrices(F: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Nonlinear strain-displacement matrices, shape (..., 27, 6, 3).

    Rows follow the Voigt order (11, 22, 33, 12, 23, 13); columns are the
    displacement components of node A.
    """
    g = grads
    f = F[..., None, :, :]  # broadcast over nodes
    B = np.empty(g.shape[:-1] + (6, 3))
    B[..., 0, :] = f[..., :, 0] * g[..., 0:1]
    B[..., 1, :] = f[..., :, 1] * g[..., 1:2]
    B[..., 2, :] = f[..., :, 2] * g[..., 2:3]
    B[..., 3, :] = f[..., :, 0] * g[..., 1:2] + f[..., :, 1] * g[..., 0:1]
    B[..., 4, :] = f[..., :, 1] * g[..., 2:3] + f[..., :, 2] * g[..., 1:2]
    B[..., 5, :] = f[..., :, 0] * g[..., 2:3] + f[..., :, 2] * g[..., 0:1]
    return B


class Assembler:
    """Precomputed geometry, dof map and sparsity pattern for one mesh and material.

    The H-matrix pattern is fixed by connectivity, so each call to :meth:`H`
    only refills the CSR data array.
    """

    def __init__(self, mesh: Mesh, material: Material, threads: int = 1):
        self.mesh = mesh
        self.material = material
        self.threads = max(1, int(threads))
        self.dofs = DofMap.from_mesh(mesh)
        self.wdet, self.grads = mesh_geometry(mesh, gauss_rule_3())
        conn = mesh.elements
        self.edofs = (3 * conn[:, :, None] + np.arange(3)).reshape(len(conn), 81)
        self._build_pattern()
        self._mass = None
        self._h_linear = None

    # -- sparsity ---------------------------------------------------------
    def _build_pattern(self):
        nf = self.dofs.n_free
        local = self.dofs.to_free[self.edofs]  # (ne, 81)
        rows = np.broadcast_to(local[:, :, None], (len(local), 81, 81)).ravel()
        cols = np.broadcast_to(local[:, None, :], (len(local), 81, 81)).ravel()
        keep = (rows >= 0) & (cols >= 0)
        keys = rows[keep] * nf + cols[keep]
        uniq, inverse = np.unique(keys, return_inverse=True)
        self._scatter_keep = keep
        self._scatter_index = inverse
        self.pattern_rows = (uniq // nf).astype(np.int64)
        self.pattern_indices = (uniq % nf).astype(np.int32)
        self.pattern_indptr = np.concatenate(
            [[0], np.cumsum(np.bincount(self.pattern_rows, minlength=nf))]
        ).astype(np.int32)
        self.nnz = len(uniq)

    def _to_csr(self, element_mats: np.ndarray) -> sp.csr_matrix:
        values = element_mats.reshape(-1)[self._scatter_keep]
        data = np.bincount(self._scatter_index, weights=values, minlength=self.nnz)
        nf = self.dofs.n_free
        return sp.csr_matrix(
            (data, self.pattern_indices.copy(), self.pattern_indptr.copy()), shape=(nf, nf)
        )

    # -- state at quadrature points --------------------------------------
    def element_displacements(self, u_free: np.ndarray) -> np.ndarray:
        full = self.dofs.expand(np.asarray(u_free, dtype=float))
        return full[self.edofs].reshape(-1, 27, 3)

    def grad_u(self, u_free: np.ndarray) -> np.ndarray:
        ue = self.element_displacements(u_free)
        return np.einsum("eai,eqaj->eqij", ue, self.grads)

    def point_state(self, u_free):
        kin = kinematics(self.grad_u(u_free))
        return kin, stress_and_energy(self.material, kin)

    # -- operators --------------------------------------------------------
    def mass(self) -> np.ndarray:
        if self._mass is None:
            rule = gll_rule_3()
            n, _ = shape_functions(rule.points)
            wdet, _ = mesh_geometry(self.mesh, rule)
            # GLL points sit on the nodes, so N_A(xi_q) N_B(xi_q) vanishes off the diagonal
            lumped = np.einsum("eq,qa,qa->ea", wdet, n, n) * self.material.rho
            node_mass = np.bincount(self.mesh.elements.ravel(), weights=lumped.ravel(),
                                    minlength=self.mesh.n_nodes)
            full = np.repeat(node_mass, 3)
            m = full[self.dofs.free]
            if np.any(m <= 0.0):
                raise DegenerateMeshError("non-positive lumped mass entry")
            self._mass = m
        return self._mass

    def internal_force(self, u_free: np.ndarray) -> np.ndarray:
        kin, stress = self.point_state(u_free)
        F = np.broadcast_to(np.eye(3), kin.F.shape) if isinstance(self.material, LinearElastic) else kin.F
        B = b_matrices(F, self.grads)  # (ne, nq, 27, 6, 3)
        re = np.einsum("eq,eqavi,eqv->eai", self.wdet, B, stress.S_voigt)
        full = np.bincount(self.edofs.ravel(), weights=re.ravel(), minlength=self.dofs.n_dofs)
        return full[self.dofs.free]

    def strain_energy(self, u_free: np.ndarray) -> float:
        _, stress = self.point_state(u_free)
        return float(np.sum(self.wdet * stress.psi))

    def element_h(self, u_free: np.ndarray) -> np.ndarray:
        """Element H matrices, shape (ne, 81, 81)."""
        kin, stress = self.point_state(u_free)
        coef = np.ascontiguousarray(h_coefficients(self.material, kin, stress))
        grads = np.ascontiguousarray(self.grads)
        wdet = np.ascontiguousarray(self.wdet)
        out = np.empty((len(grads), 81, 81))
        if self.threads == 1 or len(grads) < 2 * self.threads:
            kernels.element_h_matrices(grads, wdet, coef, out)
        else:
            chunks = np.array_split(np.arange(len(grads)), self.threads)

            def work(idx):
                sl = slice(idx[0], idx[-1] + 1)
                kernels.element_h_matrices(grads[sl], wdet[sl], coef[sl], out[sl])

            with ThreadPoolExecutor(self.threads) as pool:
                list(pool.map(work, [c for c in chunks if len(c)]))
        return out

    def H(self, u_free: np.ndarray | None = None) -> sp.csr_matrix:
        if isinstance(self.material, LinearElastic):
            if self._h_linear is None:
                self._h_linear = self._to_csr(self.element_h(np.zeros(self.dofs.n_free)))
            return self._h_linear
        if u_free is None:
            u_free = np.zeros(self.dofs.n_free)
        return self._to_csr(self.element_h(u_free))

    def external_force(self, tractions: Mapping[str, np.ndarray] | None = None,
                       body_force=None) -> np.ndarray:
        """Consistent nodal loads from face tractions (per Neumann tag) and a body force.

        ``body_force`` is a force per unit reference volume (rho0 * b).
        """
        full = np.zeros(self.dofs.n_dofs)
        for name, t in (tractions or {}).items():
            t = np.asarray(t, dtype=float)
            try:
                tag = self.mesh.neumann_tag(name)
            except KeyError:
                raise MissingTagError(f"traction given for untagged boundary {name!r}") from None
            for (e, f), nodes in zip(tag.faces, tag.face_nodes):
                n, da = face_geometry(self.mesh, int(e), int(f))
                weights = n.T @ da  # (9,)
                np.add.at(full, (3 * nodes[:, None] + np.arange(3)).ravel(),
                          (weights[:, None] * t[None, :]).ravel())
        if body_force is not None:
            b = np.asarray(body_force, dtype=float)
            n, _ = shape_functions(gauss_rule_3().points)
            weights = np.einsum("eq,qa->ea", self.wdet, n)
            contrib = weights[:, :, None] * b[None, None, :]
            full += np.bincount(self.edofs.ravel(), weights=contrib.ravel(), minlength=self.dofs.n_dofs)
        return full[self.dofs.free]


# functional entry points -----------------------------------------------------

def assemble_mass(mesh: Mesh, material: Material) -> np.ndarray:
    return Assembler(mesh, material).mass()


def assemble_external_force(mesh: Mesh, tractions=None, body_force=None) -> np.ndarray:
    # the load vector does not depend on the constitutive law
    return Assembler(mesh, LinearElastic(1.0, 1.0, 1.0)).external_force(tractions, body_force)


def assemble_internal_force(mesh: Mesh, material: Material, u: np.ndarray) -> np.ndarray:
    return Assembler(mesh, material).internal_force(u)


def assemble_H(mesh: Mesh, material: Material, u: np.ndarray | None = None) -> sp.csr_matrix:
    return Assembler(mesh, material).H(u)


def compute_strain_energy(mesh: Mesh, material: Material, u: np.ndarray) -> float:
    return Assembler(mesh, material).strain_energy(u)
