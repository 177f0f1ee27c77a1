"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def element_h_matrices(grads, wdet, coef, out):
    ne = grads.shape[0]
    g = grads
    Q, X1, X2, Z1, Z2, W = (coef[:, :, k] for k in range(6))
    wq = wdet[:, :, None, None]
    qg = np.einsum("eqij,eqaj->eqai", Q, g) * wq
    x1g = np.einsum("eqij,eqaj->eqai", X1, g) * wq
    x2g = np.einsum("eqij,eqaj->eqai", X2, g)
    z1g = np.einsum("eqij,eqaj->eqai", Z1, g) * wq
    z2g = np.einsum("eqij,eqaj->eqai", Z2, g)
    gg = np.einsum("eqak,eqbk->eqab", g, g) * wq
    blocks = np.einsum("eqbi,eqaj->eaibj", x1g, x2g)
    blocks += np.einsum("eqai,eqbj->eaibj", z1g, z2g)
    blocks += np.einsum("eqab,eqij->eaibj", gg, W)
    s = np.einsum("eqbk,eqak->eab", g, qg)
    idx = np.arange(3)
    blocks[:, :, idx, :, idx] += s[None]
    out[:] = blocks.reshape(ne, 81, 81)


def mgs_orthogonalize(basis, count, w, h):
    h[:count] = 0.0
    for _ in range(2):
        for i in range(count):
            c = basis[i] @ w
            w -= c * basis[i]
            h[i] += c
