"""Compare the compiled and NumPy kernel backends.

Times each hot kernel on a 60 s record at 6 kHz, then one full Monte-Carlo
trial (three arms) end to end. Usage::

    python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]
"""

import argparse
import json
import timeit

import numpy as np

from dwsim import kernels
from dwsim.config import ScenarioConfig
from dwsim.harness import evaluate_trial, parse_arms


def kernel_cases(n=360_000):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    r = rng.standard_normal(7200)
    s = rng.standard_normal(7200)
    return {
        "sliding_mean(w=50)": lambda: kernels.sliding_mean(x, 50),
        "block_mean(w=50)": lambda: kernels.block_mean(x, 50),
        "demod_block_mean(w=50)": lambda: kernels.demod_block_mean(x, 6000.0, 60.0, 0.0, 0.0, 50),
        "window_moments(7200)": lambda: kernels.window_moments(s, r),
    }


def trial_case():
    cfg = ScenarioConfig()
    arms = parse_arms("none,naive:1.0,proportional:0.5")
    return {"monte_carlo_trial(60 s, 3 arms)": lambda: evaluate_trial(cfg, 0, arms)}


def best_of(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings here")
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the NumPy fallback is timed")
    cases = {**kernel_cases(), **trial_case()}
    results = {}
    for name in backends:
        kernels.set_backend(name)
        results[name] = {case: best_of(fn, args.repeat) for case, fn in cases.items()}

    width = max(map(len, cases))
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends)
          + ("  speedup" if len(backends) > 1 else ""))
    for case in cases:
        row = "  ".join(f"{results[b][case] * 1e3:>10.3f}ms" for b in backends)
        if len(backends) > 1:
            row += f"  {results['python'][case] / results['cython'][case]:>6.2f}x"
        print(f"{case:<{width}}  {row}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
