"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--lengths 250 500 1000] [--repeats 5]

Times one switching filter + smoother pass and one sequential phi filter per
series length, reports the best of ``--repeats`` runs and the speed-up, and
checks the two backends agree on the likelihood.
"""

import argparse
import time

import numpy as np

from bayescoint import _backend
from bayescoint.switching import SwitchConfig, switch_filter, switch_smooth

CFG = SwitchConfig(p_init_rw=0.5, p_rw_to_rw=0.99, p_c_to_c=0.99)


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def switching_pass(eps):
    fr = switch_filter(eps, 1.0, CFG)
    switch_smooth(fr, CFG)
    return fr.loglik


def phi_pass(eps):
    return _backend.kernels.phi_filter(eps, 1.0)[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lengths", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    try:
        _backend.use("compiled")
    except ImportError:
        print("compiled kernels unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'T':>7}{'compiled s':>14}{'python s':>14}{'speed-up':>10}{'|d loglik|':>13}")
    for t_len in args.lengths:
        eps = np.cumsum(rng.standard_normal(t_len)) * 0.2 + rng.standard_normal(t_len)
        for label, fn in (("switching", switching_pass), ("phi_filter", phi_pass)):
            _backend.use("compiled")
            tc, vc = best_time(lambda: fn(eps), args.repeats)
            _backend.use("python")
            tp, vp = best_time(lambda: fn(eps), args.repeats)
            print(f"{label:<12}{t_len:>7}{tc:>14.5f}{tp:>14.5f}{tp / tc:>10.1f}{abs(vc - vp):>13.2e}")
    _backend.use("compiled")


if __name__ == "__main__":
    main()
