import numpy as np
import pytest
from numpy.testing import assert_allclose

from expdyn import _fallback, kernels
from expdyn.assembly import Assembler
from expdyn.material import StVenantKirchhoff, Yeoh, factored_block, h_coefficients
from expdyn.mesh import cantilever

from conftest import LAM, MU

compiled = pytest.importorskip("expdyn._kernels")


@pytest.fixture
def restore_backend():
    before = kernels.BACKEND
    yield
    kernels.use_backend(before)


@pytest.mark.parametrize("mat", [StVenantKirchhoff(LAM, MU, 1.0), Yeoh(rho=1.0)], ids=["svk", "yeoh"])
def test_element_kernels_agree(mat, rng):
    asm = Assembler(cantilever((1, 0.2, 0.2), (3, 1, 1)), mat)
    u = 0.01 * rng.standard_normal(asm.dofs.n_free)
    kin, stress = asm.point_state(u)
    coef = np.ascontiguousarray(h_coefficients(mat, kin, stress))
    a = np.empty((3, 81, 81))
    b = np.empty((3, 81, 81))
    grads, wdet = np.ascontiguousarray(asm.grads), np.ascontiguousarray(asm.wdet)
    compiled.element_h_matrices(grads, wdet, coef, a)
    _fallback.element_h_matrices(grads, wdet, coef, b)
    assert_allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


def test_fallback_matches_blockwise_reference(rng):
    mat = StVenantKirchhoff(LAM, MU, 1.0)
    asm = Assembler(cantilever((1, 0.2, 0.2), (1, 1, 1)), mat)
    u = 0.01 * rng.standard_normal(asm.dofs.n_free)
    kin, stress = asm.point_state(u)
    coef = np.ascontiguousarray(h_coefficients(mat, kin, stress))
    out = np.empty((1, 81, 81))
    _fallback.element_h_matrices(asm.grads, asm.wdet, coef, out)
    A, B = 4, 19
    expect = sum(asm.wdet[0, q] * factored_block(coef[0, q], asm.grads[0, q, A], asm.grads[0, q, B])
                 for q in range(27))
    assert_allclose(out[0, 3 * A:3 * A + 3, 3 * B:3 * B + 3], expect, rtol=1e-12)


@pytest.mark.parametrize("impl", ["cython", "python"])
def test_mgs_orthogonalizes(impl, rng):
    mod = compiled if impl == "cython" else _fallback
    n, k = 50, 8
    basis = np.zeros((k + 1, n))
    basis[:k] = np.linalg.qr(rng.standard_normal((n, k)))[0].T
    w = rng.standard_normal(n)
    w0 = w.copy()
    h = np.zeros(k + 1)
    mod.mgs_orthogonalize(basis, k, w, h)
    assert np.abs(basis[:k] @ w).max() < 1e-14
    assert_allclose(basis[:k].T @ h[:k] + w, w0, atol=1e-13)


def test_backend_switch(restore_backend):
    kernels.use_backend("python")
    assert kernels.BACKEND == "python"
    kernels.use_backend("cython")
    assert kernels.BACKEND == "cython"
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_assembly_identical_across_backends(restore_backend, rng):
    mat = Yeoh(rho=1.0)
    asm = Assembler(cantilever((1, 0.2, 0.2), (2, 1, 1)), mat)
    u = 0.01 * rng.standard_normal(asm.dofs.n_free)
    kernels.use_backend("cython")
    a = asm.H(u)
    kernels.use_backend("python")
    b = asm.H(u)
    assert abs(a - b).max() < 1e-12 * abs(b).max()
