"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from regretlab import kernels
from regretlab.environments import make_random_communicating, make_riverswim
from regretlab.mdp import transition_cdf


def cases():
    river = make_riverswim(20)
    rnd = make_random_communicating(30, 40, 0)
    P_river = np.ascontiguousarray(river.transitions)
    rng = np.random.default_rng(0)
    d = np.ascontiguousarray(0.3 / np.sqrt(1 + rng.integers(0, 50, size=rnd.rewards.shape)))
    uniforms = rng.random(10**5)
    cdf = transition_cdf(river.transitions)

    def rvi(k):
        k.relative_value_iteration(np.ascontiguousarray(rnd.rewards),
                                   np.ascontiguousarray(rnd.transitions),
                                   np.zeros(30), 1e-8, 10**6, 0.99)

    def rvi_slow(k):
        k.relative_value_iteration(np.ascontiguousarray(river.rewards), P_river,
                                   np.zeros(20), 1e-8, 10**6, 0.99)

    def evi(k):
        k.extended_value_iteration(np.ascontiguousarray(rnd.rewards),
                                   np.ascontiguousarray(rnd.transitions), d, np.zeros(30),
                                   1e-6, 10**6, 0.99)

    def hitting(k):
        k.min_hitting_times(P_river, 19, 1e-9, 10**7, 1e9)

    def rollout(k):
        total = np.full((20, 2), 10**7, dtype=np.int64)
        by_next = np.zeros((20, 2, 20), dtype=np.int64)
        k.rollout_epoch(cdf, np.ones(20, dtype=np.int64), np.ascontiguousarray(river.rewards),
                        total, by_next, total.copy(), uniforms, 0, 0, np.zeros(10**5),
                        np.zeros(10**5, dtype=np.int64))

    return {"relative_value_iteration (S=30, A=40)": rvi,
            "relative_value_iteration (riverswim 20)": rvi_slow,
            "extended_value_iteration (S=30, A=40)": evi,
            "min_hitting_times (riverswim 20)": hitting,
            "rollout_epoch (10^5 steps)": rollout}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    names = kernels.available_backends()
    print(f"{'kernel':42s}" + "".join(f"{n:>12s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, fn in cases().items():
        times = []
        for name in names:
            k = kernels.load_backend(name)
            times.append(min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)))
        row = f"{label:42s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"   {times[1] / times[0]:7.1f}x" if times[0] > 0 else "       inf"
        print(row)


if __name__ == "__main__":
    main()
