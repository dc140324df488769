"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times lane projection and collision checks directly, then a full environment
step under each backend (the step timing runs in a subprocess so the backend
switch takes effect at import).
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from maadsim import _pykernels
from maadsim.track import OUTER, default_track

STEP_SNIPPET = """
import json, timeit, numpy as np
from maadsim import kernels
from maadsim.env import MultiAgentDrivingEnv
env = MultiAgentDrivingEnv()
env.reset(seed=0)
rng = np.random.default_rng(0)
acts = rng.integers(0, 4, size=(400, 3))
def episode():
    env.reset(seed=0)
    for a in acts:
        env.step(a)
t = min(timeit.repeat(episode, number=1, repeat={repeat}))
print(json.dumps({{"backend": kernels.BACKEND, "step_us": t / 400 * 1e6}}))
"""


def best(fn, repeat, number):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_rows(repeat):
    try:
        from maadsim import _ckernels
    except ImportError:
        _ckernels = None
    ring = default_track().rings[OUTER]
    rng = np.random.default_rng(0)
    rows = []
    for n in (1, 6, 100):
        pts = rng.uniform(-1.5, 1.5, size=(n, 2))
        args = (pts, ring.points, ring.seg, ring.seglen, ring.cum, ring.heading)
        row = {"kernel": f"project_points n={n}",
               "python": best(lambda: _pykernels.project_points(*args), repeat, 200)}
        if _ckernels:
            row["cython"] = best(lambda: _ckernels.project_points(*args), repeat, 200)
        rows.append(row)
    pos = np.ascontiguousarray(rng.uniform(-1, 1, size=(6, 2)))
    row = {"kernel": "collision_flags n=6",
           "python": best(lambda: _pykernels.collision_flags(pos, 3, 0.09), repeat, 2000)}
    if _ckernels:
        row["cython"] = best(lambda: _ckernels.collision_flags(pos, 3, 0.09), repeat, 2000)
    rows.append(row)
    return rows


def step_timing(pure, repeat):
    env = dict(os.environ, MAADSIM_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(repeat=repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'kernel':28s}{'python us':>12s}{'cython us':>12s}{'speedup':>10s}")
    for r in kernel_rows(args.repeat):
        py = r["python"] * 1e6
        if "cython" in r:
            cy = r["cython"] * 1e6
            print(f"{r['kernel']:28s}{py:12.2f}{cy:12.2f}{py / cy:10.1f}")
        else:
            print(f"{r['kernel']:28s}{py:12.2f}{'n/a':>12s}{'':>10s}")

    fast = step_timing(False, args.repeat)
    slow = step_timing(True, args.repeat)
    print()
    print(f"env step, {slow['backend']:>6s} backend: {slow['step_us']:8.1f} us")
    print(f"env step, {fast['backend']:>6s} backend: {fast['step_us']:8.1f} us")


if __name__ == "__main__":
    main()
