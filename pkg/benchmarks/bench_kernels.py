"""Benchmark the compiled kernels against the pure-Python reference.

Runs the Frank-Wolfe simplex kernel and the two-class support enumeration on
identical inputs through both backends and reports wall-clock times. Invoke
with python benchmarks/bench_kernels.py [--reps N].
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mixeq import _kernels_py as py_impl
from mixeq.costs import cost_arrays
from mixeq.netmodel import enumerate_paths, incidence_matrix

try:
    from mixeq import _kernels as c_impl
except ImportError:
    c_impl = None


def _parallel_instance(rng, n_links, n=1.0):
    # parallel OD pair: every link is a path, so delta is the identity
    delta = np.eye(n_links)
    kk = rng.uniform(0.1, 10.0, n_links)
    bb = rng.uniform(0.0, 10.0, n_links)
    nn = np.full(n_links, n)
    return delta, kk, bb, nn


def _braess_instance():
    from mixeq.cli import braess_network

    network, paths = braess_network()
    delta = incidence_matrix(network, paths)
    kk, bb, nn = cost_arrays(network)
    return np.asarray(delta.delta), np.asarray(kk), np.asarray(bb), np.asarray(nn)


def _time_fw(impl, delta, kk, bb, nn, reps, marginal, tol=1e-12):
    n_links, n_paths = delta.shape
    f_fixed = np.zeros(n_links)
    elapsed = 0.0
    iters = 0
    for _ in range(reps):
        x = np.full(n_paths, 1.0 / n_paths)
        t0 = time.perf_counter()
        gap, it, conv = impl.fw_simplex(
            delta, kk, bb, nn, f_fixed, 1.0, marginal, x, tol, 20000
        )
        elapsed += time.perf_counter() - t0
        iters += it
        assert conv, f"benchmark instance failed to converge (gap={gap:.3e})"
    return elapsed / reps, iters // reps


def _time_support(impl, m_path, c0, alpha, reps):
    elapsed = 0.0
    tried = 0
    for _ in range(reps):
        t0 = time.perf_counter()
        found, _, _, _, _, _, n_tried = impl.mixed_support_search(
            m_path, c0, alpha, 1e-9, 1e-12
        )
        elapsed += time.perf_counter() - t0
        tried = n_tried
        assert found
    return elapsed / reps, tried


def _row(label, t_py, t_c, extra=""):
    if t_c is None:
        print(f"{label:<42} {t_py * 1e3:>9.3f} ms        (compiled unavailable) {extra}")
    else:
        print(f"{label:<42} {t_py * 1e3:>9.3f} ms {t_c * 1e3:>9.3f} ms {t_py / t_c:>7.1f}x {extra}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'kernel / instance':<42} {'python':>12} {'compiled':>12} {'speedup':>8}")
    print("-" * 84)

    for n_links, n_exp in ((8, 1.0), (8, 4.0), (64, 1.0), (64, 4.0)):
        delta, kk, bb, nn = _parallel_instance(rng, n_links, n_exp)
        t_py, it = _time_fw(py_impl, delta, kk, bb, nn, args.reps, marginal=False)
        t_c = None
        if c_impl is not None:
            t_c, _ = _time_fw(c_impl, delta, kk, bb, nn, args.reps, marginal=False)
        _row(f"fw_simplex parallel L={n_links} n={n_exp:g}", t_py, t_c, f"({it} iters)")

    delta, kk, bb, nn = _braess_instance()
    t_py, it = _time_fw(py_impl, delta, kk, bb, nn, args.reps, marginal=True)
    t_c = None
    if c_impl is not None:
        t_c, _ = _time_fw(c_impl, delta, kk, bb, nn, args.reps, marginal=True)
    _row("fw_simplex braess marginal", t_py, t_c, f"({it} iters)")

    kd = delta * kk[:, None]
    m_path = delta.T @ kd
    c0 = delta.T @ bb
    for alpha in (0.3, 0.7):
        t_py, tried = _time_support(py_impl, m_path, c0, alpha, args.reps)
        t_c = None
        if c_impl is not None:
            t_c, _ = _time_support(c_impl, m_path, c0, alpha, args.reps)
        _row(f"mixed_support_search braess alpha={alpha}", t_py, t_c, f"({tried} pairs)")

    rng2 = np.random.default_rng(args.seed + 1)
    delta, kk, bb, nn = _parallel_instance(rng2, 10, 1.0)
    m_path = np.diag(kk)
    c0 = bb.copy()
    t_py, tried = _time_support(py_impl, m_path, c0, 0.4, args.reps)
    t_c = None
    if c_impl is not None:
        t_c, _ = _time_support(c_impl, m_path, c0, 0.4, args.reps)
    _row("mixed_support_search parallel P=10", t_py, t_c, f"({tried} pairs)")


if __name__ == "__main__":
    main()
