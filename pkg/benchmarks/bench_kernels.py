"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--elements N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from expdyn import kernels
from expdyn.assembly import Assembler
from expdyn.material import StVenantKirchhoff, h_coefficients
from expdyn.mesh import cantilever


def h_inputs(n_elements):
    asm = Assembler(cantilever((1.0, 0.1, 0.1), (n_elements, 1, 1)), StVenantKirchhoff(5769.0, 3846.0, 1.0))
    rng = np.random.default_rng(0)
    u = 1e-3 * rng.standard_normal(asm.dofs.n_free)
    kin, stress = asm.point_state(u)
    coef = np.ascontiguousarray(h_coefficients(asm.material, kin, stress))
    return np.ascontiguousarray(asm.grads), np.ascontiguousarray(asm.wdet), coef


def mgs_inputs(n, m):
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.standard_normal((n, m)))
    return np.ascontiguousarray(q.T), rng.standard_normal(n)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--elements", type=int, default=16)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    grads, wdet, coef = h_inputs(args.elements)
    basis, w0 = mgs_inputs(20000, 40)
    backends = ["python"]
    try:
        kernels.use_backend("cython")
        backends.append("cython")
    except ImportError:
        print("compiled extension not built; timing the numpy backend only")
    results = {}
    for name in backends:
        kernels.use_backend(name)
        out = np.empty((len(grads), 81, 81))
        h = np.zeros(basis.shape[0] + 1)
        t_h = best(lambda: kernels.element_h_matrices(grads, wdet, coef, out), args.repeat)
        t_m = best(lambda: kernels.mgs_orthogonalize(basis, basis.shape[0], w0.copy(), h), args.repeat)
        results[name] = (t_h, t_m, out.copy())
    print(f"{'kernel':<28}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for i, label in enumerate([f"element H ({args.elements} elems)", "MGS (n=20000, m=40)"]):
        tp = results["python"][i] * 1e3
        if "cython" in results:
            tc = results["cython"][i] * 1e3
            print(f"{label:<28}{tp:>14.3f}{tc:>14.3f}{tp / tc:>10.1f}")
        else:
            print(f"{label:<28}{tp:>14.3f}{'-':>14}{'-':>10}")
    if "cython" in results:
        diff = np.max(np.abs(results["python"][2] - results["cython"][2]))
        print(f"max |H_python - H_cython| = {diff:.2e}")


if __name__ == "__main__":
    main()
