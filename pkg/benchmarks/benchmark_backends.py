"""Benchmark the compiled evolution kernel against the pure-NumPy fallback.

The workload is the hot path of quasiparticle-aware benchmarking: pulse-level
density-matrix evolution of repeated X gates with time-dependent rates.

Run:  python benchmarks/benchmark_backends.py [--pulses N]
"""

import argparse
import time

import numpy as np

from sfqsim import backend
from sfqsim.engine import Timeline, paper_device, simulate
from sfqsim.sequencer import make_gate


def build_timeline(physics, n_gates, subharmonic=3):
    gate = make_gate("X", physics.delta_theta(), subharmonic)
    timeline = Timeline()
    omega_d = physics.trigger_frequency(subharmonic)
    for _ in range(n_gates):
        timeline.add_gate(gate, omega_d)
    return timeline


def run_case(name, physics, timeline, pulses):
    backend.set_backend(name)
    start = time.perf_counter()
    result = simulate(timeline, physics)
    elapsed = time.perf_counter() - start
    rate = pulses / elapsed
    print(f"  {name:>8s}: {elapsed * 1e3:9.2f} ms   {rate / 1e6:8.3f} M pulses/s   "
          f"P0 = {result.final_state.population(0):.12f}")
    return elapsed, result.final_state.populations


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pulses", type=int, default=200_000,
                        help="approximate number of SFQ pulses in the workload")
    args = parser.parse_args()

    physics = paper_device()
    n_gates = max(1, args.pulses // 46)
    pulses = n_gates * 46
    timeline = build_timeline(physics, n_gates)
    print(f"workload: {n_gates} X gates = {pulses} pulses, dim = "
          f"{physics.transmon.dim}, quasiparticle-dependent rates active")

    available = backend.available_backends()
    results = {}
    for name in available:
        results[name] = run_case(name, physics, timeline, pulses)
    if len(results) == 2:
        speedup = results["python"][0] / results["compiled"][0]
        agree = np.max(np.abs(results["python"][1] - results["compiled"][1]))
        print(f"  speedup: {speedup:.1f}x   max |population difference| = {agree:.2e}")
    else:
        print("  compiled kernel not built; only the python backend was timed")


if __name__ == "__main__":
    main()
