#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot kernels on realistic shapes and one end-to-end learning
run per backend, and checks the outputs agree bit for bit.

Usage: python benchmarks/kernel_benchmark.py [--rounds 2000] [--agents 2000]
"""

import argparse
import time

import numpy as np

from smfg import GameConfig, Schedule, make_beach_bar, run_trpa_full
from smfg._kernels import get_backend, use_backend


def time_call(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(n_agents, k):
    rng = np.random.default_rng(0)
    policies = rng.dirichlet(np.ones(k), size=n_agents)
    rewards = rng.uniform(0, 1, (n_agents, k))
    uniforms = rng.random(n_agents)
    raw = rng.uniform(-2, 2, (n_agents, k))
    rows = []
    outputs = {}
    for name in ("numpy", "cython"):
        try:
            kern = get_backend(name)
        except ImportError:
            print(f"backend {name}: unavailable, skipped")
            continue
        t_proj = time_call(lambda: kern.project_rows(raw))
        t_samp = time_call(lambda: kern.sample_from_rows(policies, uniforms))
        t_upd = time_call(lambda: kern.trpa_update_rows(policies, rewards, 0.05, 0.3))
        outputs[name] = (
            kern.project_rows(raw),
            kern.sample_from_rows(policies, uniforms),
            kern.trpa_update_rows(policies, rewards, 0.05, 0.3),
        )
        rows.append((name, t_proj, t_samp, t_upd))
    print(f"\nkernels on ({n_agents}, {k}) arrays (best of 5, seconds):")
    print(f"{'backend':<8} {'project_rows':>14} {'sample_rows':>14} {'trpa_update':>14}")
    for name, a, b, c in rows:
        print(f"{name:<8} {a:>14.6f} {b:>14.6f} {c:>14.6f}")
    if len(outputs) == 2:
        agree = all(
            np.array_equal(x, y) for x, y in zip(outputs["numpy"], outputs["cython"])
        )
        print(f"bit-identical outputs: {agree}")


def bench_end_to_end(n_agents, rounds):
    config = GameConfig(
        N=n_agents, K=5, operator=make_beach_bar(5, 1.0),
        sigma=0.1, master_seed=7,
    )
    schedule = Schedule(tau=0.3, horizon=rounds)
    results = {}
    print(f"\nfull-feedback run, N={n_agents}, T={rounds}:")
    for name in ("numpy", "cython"):
        try:
            use_backend(name)
        except ImportError:
            print(f"backend {name}: unavailable, skipped")
            continue
        t0 = time.perf_counter()
        traj = run_trpa_full(config, schedule, checkpoints=[rounds])
        dt = time.perf_counter() - t0
        results[name] = traj.final_policies
        print(f"{name:<8} {dt:.3f}s  ({dt / rounds * 1e6:.1f} us/round)")
    use_backend("cython" if "cython" in results else "numpy")
    if len(results) == 2:
        print(f"bit-identical trajectories: "
              f"{np.array_equal(results['numpy'], results['cython'])}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=2000)
    parser.add_argument("--actions", type=int, default=5)
    parser.add_argument("--rounds", type=int, default=2000)
    args = parser.parse_args()
    bench_kernels(args.agents, args.actions)
    bench_end_to_end(args.agents, args.rounds)


if __name__ == "__main__":
    main()
