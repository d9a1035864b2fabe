"""Side-by-side timing of the jit kernels against their numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--seconds 10]

The two paths execute the same arithmetic in the same order, so their
outputs are bit-identical; this script reports only speed. Sizes mirror a
real render: a 10 s clip at 16 kHz against the order-3 image set of a
5 x 6 x 4 room, plus a 3200x trajectory restoration.
"""

import argparse
import time

import numpy as np

from moverb import _kernels, farrow
from moverb.room import Room, as_arrays, enumerate_images
from moverb.trajectory import _phase_table


def timeit(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seconds", type=float, default=10.0, help="clip length")
    args = parser.parse_args()

    if not _kernels.HAS_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return

    rate = 16000.0
    n = int(args.seconds * rate)
    room = Room(dims=np.array([5.0, 6.0, 4.0]), wall_reflection=np.full(6, 0.9))
    images = enumerate_images(room, 3)
    offset, sign, beta, _ = as_arrays(images, room)
    s = len(images)
    mic = np.array([1.25, 2.6, 2.75])

    t = np.arange(n) / rate
    pos = np.stack(
        [
            2.5 + 0.5 * np.sin(2 * np.pi * 0.5 * t),
            3.0 + 0.4 * np.cos(2 * np.pi * 0.3 * t),
            np.full(n, 2.0),
        ],
        axis=1,
    )

    print(f"{s} images x {n} samples ({args.seconds:.0f} s at 16 kHz)\n")

    # --- distance kernel ---------------------------------------------------
    out_a = np.empty((s, n))
    out_b = np.empty((s, n))
    _kernels._distance_numba(offset, sign, mic, pos, out_a)  # compile
    tn = timeit(_kernels._distance_numba, offset, sign, mic, pos, out_a)
    tp = timeit(_kernels._distance_numpy, offset, sign, mic, pos, out_b)
    assert np.array_equal(out_a, out_b)
    print(f"distance_streams   numba {tn*1e3:8.1f} ms   numpy {tp*1e3:8.1f} ms   x{tp/tn:.1f}")

    # --- accumulate kernel ---------------------------------------------------
    f = farrow.design(3, 8, 0.8)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    streams = farrow.branch_filter(x, f)
    d = out_a
    tau = rate * d / 343.0
    amp = beta[:, None] / (4 * np.pi * np.maximum(d, 0.05))
    acc_a = np.zeros(n)
    acc_b = np.zeros(n)
    _kernels._accumulate_numba(
        acc_a, streams, tau, amp, f.branch_len, f.nominal_delay
    )  # compile
    acc_a[:] = 0.0
    tn = timeit(
        _kernels._accumulate_numba, acc_a, streams, tau, amp, f.branch_len, f.nominal_delay
    )
    tp = timeit(
        _kernels._accumulate_numpy, acc_b, streams, tau, amp, f.branch_len, f.nominal_delay
    )
    print(f"accumulate_images  numba {tn*1e3:8.1f} ms   numpy {tp*1e3:8.1f} ms   x{tp/tn:.1f}")

    # --- upsample kernel -----------------------------------------------------
    factor = 3200
    coarse = rng.standard_normal(-(-n // factor) + 1)
    table = _phase_table(factor)
    up_a = np.zeros(n)
    up_b = np.zeros(n)
    _kernels._upsample_numba(coarse, table, factor, up_a)  # compile
    tn = timeit(_kernels._upsample_numba, coarse, table, factor, up_a)
    tp = timeit(_kernels._upsample_numpy, coarse, table, factor, up_b)
    assert np.array_equal(up_a, up_b)
    print(f"upsample_stream    numba {tn*1e3:8.1f} ms   numpy {tp*1e3:8.1f} ms   x{tp/tn:.1f}")


if __name__ == "__main__":
    main()
