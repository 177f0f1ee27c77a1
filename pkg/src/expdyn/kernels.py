"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``EXPDYN_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementations are used.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("EXPDYN_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback


def use_backend(name: str) -> None:
    """Switch backend at runtime ('cython' or 'python'); mostly for tests and benchmarks."""
    global _impl, BACKEND
    if name == "python":
        _impl = _fallback
    elif name == "cython":
        from . import _kernels
        _impl = _kernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def element_h_matrices(grads, wdet, coef, out):
    return _impl.element_h_matrices(grads, wdet, coef, out)


def mgs_orthogonalize(basis, count, w, h):
    return _impl.mgs_orthogonalize(basis, count, w, h)
