"""Compare the compiled and pure-Python compute kernels.

Times the two hot paths behind the endpoint solver - the in-place
Walsh-Hadamard butterfly and the dense tableau pivot - on both backends,
checks that they produce bit-identical floats, and reports speedups.
An end-to-end endpoint solve is included for scale.

Usage: python benchmarks/bench_kernels.py [--repeats N] [--sizes 8,12,16]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stabcert import _kernels_numpy as py_kernels

try:
    from stabcert import _native as c_kernels
except ImportError:
    c_kernels = None


def _time(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_fwht(n: int, repeats: int, rng: np.random.Generator) -> tuple[float, float]:
    base = rng.standard_normal(1 << n)
    py_buf, c_buf = base.copy(), base.copy()
    py_kernels.fwht_inplace(py_buf)
    c_kernels.fwht_inplace(c_buf)
    if not np.array_equal(py_buf, c_buf):
        raise AssertionError(f"fwht backends disagree at n={n}")
    t_py = _time(lambda: py_kernels.fwht_inplace(base.copy()), repeats=repeats)
    t_c = _time(lambda: c_kernels.fwht_inplace(base.copy()), repeats=repeats)
    return t_py, t_c


def bench_pivot(rows: int, cols: int, repeats: int, rng: np.random.Generator) -> tuple[float, float]:
    tableau = rng.standard_normal((rows, cols))
    tableau[rows // 2, cols // 2] = 2.0
    py_tab, c_tab = tableau.copy(), tableau.copy()
    py_kernels.pivot_update(py_tab, rows // 2, cols // 2)
    c_kernels.pivot_update(c_tab, rows // 2, cols // 2)
    if not np.array_equal(py_tab, c_tab):
        raise AssertionError(f"pivot backends disagree at {rows}x{cols}")
    t_py = _time(lambda: py_kernels.pivot_update(tableau.copy(), rows // 2, cols // 2), repeats=repeats)
    t_c = _time(lambda: c_kernels.pivot_update(tableau.copy(), rows // 2, cols // 2), repeats=repeats)
    return t_py, t_c


def bench_solve(n: int, q: int, repeats: int, rng: np.random.Generator) -> float:
    from stabcert.gf2 import Label
    from stabcert.polytope import build_exact_constraints, solve_endpoints
    from stabcert.syndrome import sample_dirichlet_uniform

    p = sample_dirichlet_uniform(n, rng)
    picks = rng.choice((1 << n) - 1, size=q, replace=False) + 1
    cset = build_exact_constraints(p, [Label(n, int(b)) for b in picks])
    return _time(lambda: solve_endpoints(cset, solver="dense"), repeats=repeats)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument(
        "--sizes",
        default="8,12,16",
        help="comma-separated log2 transform sizes",
    )
    args = parser.parse_args(argv)
    if c_kernels is None:
        print("compiled backend unavailable; build the extension first")
        return 1
    rng = np.random.default_rng(0)

    print(f"{'kernel':<24}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for n in [int(s) for s in args.sizes.split(",")]:
        t_py, t_c = bench_fwht(n, args.repeats, rng)
        print(
            f"{f'fwht 2^{n}':<24}{t_py * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us"
            f"{t_py / t_c:>9.2f}x"
        )
    for rows, cols in ((64, 320), (256, 1280)):
        t_py, t_c = bench_pivot(rows, cols, args.repeats, rng)
        print(
            f"{f'pivot {rows}x{cols}':<24}{t_py * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us"
            f"{t_py / t_c:>9.2f}x"
        )
    t = bench_solve(8, 40, max(3, args.repeats // 2), rng)
    print(f"\nendpoint solve n=8 q=40 (dense backend): {t * 1e3:.2f} ms")
    print("both backends produced bit-identical floats on every case")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
