#!/usr/bin/env python3
"""Time the hot kernels on the numba path against the pure-numpy fallback.

Both paths run the same source; the fallback is selected by setting
ZVNAV_DISABLE_NUMBA=1, which this script does for itself in a subprocess (the
flag is read at import time, so the comparison needs two interpreters).
"""
import json
import os
import subprocess
import sys
import time

import numpy as np

import zvnav
from zvnav._accel import DISABLE_FLAG, NUMBA_ENABLED
from zvnav.core import Quaternion
from zvnav.ekf import EkfConfig, _ins_loop
from zvnav.svm import _smo, rbf_kernel


def bench(fn, args, repeats=5):
    fn(*args)  # warm-up / compile
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def ins_args():
    stream, truth = zvnav.simulate(zvnav.gait_preset("walk", duration=60.0),
                                   zvnav.NoiseModel(seed=1))
    cfg = EkfConfig()
    return (
        stream.t, stream.accel, stream.gyro, truth.stance,
        cfg.p0, cfg.v0, Quaternion.identity().as_array(), cfg.initial_covariance(),
        cfg.g, cfg.sigma_accel, cfg.sigma_gyro, cfg.sigma_zupt,
    )


def smo_args(n=800, d=64):
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(0.0, 1.0, (n // 2, d)),
                   rng.normal(0.8, 1.0, (n // 2, d))])
    y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
    k = np.ascontiguousarray(rbf_kernel(x, x, 1.0 / d))
    return (k, y, 1.0, 1e-3, 200 * n)


def measure():
    return {
        "ins_loop (7500 samples, 60 s walk)": bench(_ins_loop, ins_args()),
        "smo (800x800 kernel matrix)": bench(_smo, smo_args()),
    }


def main():
    if "--measure" in sys.argv:
        print(json.dumps(measure()))
        return

    print(f"numba enabled in this process: {NUMBA_ENABLED}")
    here = measure()
    env = dict(os.environ, **{DISABLE_FLAG: "1"})
    out = subprocess.run([sys.executable, __file__, "--measure"], env=env,
                         capture_output=True, text=True, check=True)
    fallback = json.loads(out.stdout.strip().splitlines()[-1])

    width = max(len(k) for k in here)
    label = "numba" if NUMBA_ENABLED else "this path"
    print(f"{'kernel':<{width}}  {label:>10}  {'fallback':>10}  {'speedup':>8}")
    for name in here:
        a, b = here[name], fallback[name]
        print(f"{name:<{width}}  {a * 1e3:>8.1f}ms  {b * 1e3:>8.1f}ms  {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
