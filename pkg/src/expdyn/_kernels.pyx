# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: element H-matrix integration and Gram-Schmidt sweeps.

Semantics match :mod:`expdyn._fallback` exactly; only summation order differs.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def element_h_matrices(const double[:, :, :, ::1] grads,
                       const double[:, ::1] wdet,
                       const double[:, :, :, :, ::1] coef,
                       double[:, :, ::1] out):
    """Integrate factored H kernels into ``out`` (ne, 81, 81).

    grads: (ne, nq, 27, 3); wdet: (ne, nq); coef: (ne, nq, 6, 3, 3).
    """
    cdef Py_ssize_t ne = grads.shape[0], nq = grads.shape[1]
    cdef Py_ssize_t e, q, a, b, i, j, k
    cdef double w, s, gg
    cdef double[:, :, ::1] proj = np.empty((5, 27, 3))
    with nogil:
        for e in range(ne):
            for a in range(81):
                for b in range(81):
                    out[e, a, b] = 0.0
            for q in range(nq):
                w = wdet[e, q]
                # proj[0] = Q g, proj[1] = X1 g, proj[2] = X2 g, proj[3] = Z1 g, proj[4] = Z2 g
                for k in range(5):
                    for a in range(27):
                        for i in range(3):
                            s = 0.0
                            for j in range(3):
                                s = s + coef[e, q, k, i, j] * grads[e, q, a, j]
                            proj[k, a, i] = w * s if k == 0 or k == 1 or k == 3 else s
                for a in range(27):
                    for b in range(27):
                        s = 0.0
                        gg = 0.0
                        for k in range(3):
                            s = s + grads[e, q, b, k] * proj[0, a, k]
                            gg = gg + grads[e, q, a, k] * grads[e, q, b, k]
                        gg = gg * w
                        for i in range(3):
                            for j in range(3):
                                out[e, 3 * a + i, 3 * b + j] += (
                                    proj[1, b, i] * proj[2, a, j]
                                    + proj[3, a, i] * proj[4, b, j]
                                    + gg * coef[e, q, 5, i, j]
                                )
                            out[e, 3 * a + i, 3 * b + i] += s


def mgs_orthogonalize(const double[:, ::1] basis, Py_ssize_t count,
                      double[::1] w, double[::1] h):
    """Modified Gram-Schmidt of ``w`` against rows ``basis[:count]`` with one re-pass.

    Coefficients of both passes are accumulated into ``h[:count]``; ``w`` is
    updated in place.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t p, i, k
    cdef double c
    with nogil:
        for i in range(count):
            h[i] = 0.0
        for p in range(2):
            for i in range(count):
                c = 0.0
                for k in range(n):
                    c = c + basis[i, k] * w[k]
                for k in range(n):
                    w[k] = w[k] - c * basis[i, k]
                h[i] = h[i] + c
