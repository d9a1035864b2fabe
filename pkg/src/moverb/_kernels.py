"""Hot inner loops with optional numba acceleration.

Every kernel has two implementations: an @njit version and a pure-numpy
version that executes the same arithmetic in the same order, so results
agree bit for bit. Selection order:

  * numba missing            -> numpy path
  * MOVERB_PURE_NUMPY=1      -> numpy path (set before import)
  * otherwise                -> numba path

The benchmark in benchmarks/bench_kernels.py calls both paths directly.
fastmath stays off: reassociation would break the deterministic summation
contract that makes renders worker-count invariant.
"""

import math
import os

import numpy as np

_FORCE_NUMPY = os.environ.get("MOVERB_PURE_NUMPY", "") == "1"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _FORCE_NUMPY


def using_numba():
    """True when the accelerated path is active for this process."""
    return USE_NUMBA


# ---------------------------------------------------------------------------
# per-image distance streams


def _distance_numpy(offset, sign, mic, pos, out):
    for i in range(offset.shape[0]):
        dx = offset[i, 0] + sign[i, 0] * pos[:, 0] - mic[0]
        dy = offset[i, 1] + sign[i, 1] * pos[:, 1] - mic[1]
        dz = offset[i, 2] + sign[i, 2] * pos[:, 2] - mic[2]
        out[i] = np.sqrt(dx * dx + dy * dy + dz * dz)
    return out


if HAS_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _distance_numba(offset, sign, mic, pos, out):  # pragma: no cover - jit
        for i in range(offset.shape[0]):
            for t in range(pos.shape[0]):
                dx = offset[i, 0] + sign[i, 0] * pos[t, 0] - mic[0]
                dy = offset[i, 1] + sign[i, 1] * pos[t, 1] - mic[1]
                dz = offset[i, 2] + sign[i, 2] * pos[t, 2] - mic[2]
                out[i, t] = math.sqrt(dx * dx + dy * dy + dz * dz)
        return out


def distance_streams(offset, sign, mic, pos):
    """Euclidean distance from each mirrored source to the mic, per sample.

    offset: (S, 3) lattice translation in meters, sign: (S, 3) +-1 per axis,
    mic: (3,), pos: (T, 3) source path. Returns (S, T) float64.
    """
    offset = np.ascontiguousarray(offset, dtype=np.float64)
    sign = np.ascontiguousarray(sign, dtype=np.float64)
    mic = np.ascontiguousarray(mic, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    out = np.empty((offset.shape[0], pos.shape[0]), dtype=np.float64)
    if USE_NUMBA:
        return _distance_numba(offset, sign, mic, pos, out)
    return _distance_numpy(offset, sign, mic, pos, out)


# ---------------------------------------------------------------------------
# fractional-delay accumulation over a block of images
#
# For output index n and image i the requested delay is tau[i, n] + offset
# samples; the integer part lands on the branch streams at n + offset - D.
# Horner evaluation of the branch values in mu, scaled by amp[i, n], is
# accumulated into out. Image order inside the block is the summation order.


def _accumulate_numpy(out, streams, tau, amp, offset, d0):
    n_branches, stream_len = streams.shape
    t_idx = np.arange(out.shape[0], dtype=np.int64)
    for i in range(tau.shape[0]):
        shifted = tau[i] + offset
        d_int = np.floor(shifted - d0)
        mu = shifted - d0 - d_int
        idx = t_idx + offset - d_int.astype(np.int64)
        valid = (idx >= 0) & (idx < stream_len)
        idx_c = np.clip(idx, 0, stream_len - 1)
        acc = streams[n_branches - 1].take(idx_c)
        for k in range(n_branches - 2, -1, -1):
            acc = acc * mu + streams[k].take(idx_c)
        out += np.where(valid, amp[i] * acc, 0.0)
    return out


if HAS_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _accumulate_numba(out, streams, tau, amp, offset, d0):  # pragma: no cover - jit
        n_branches, stream_len = streams.shape
        for i in range(tau.shape[0]):
            for n in range(out.shape[0]):
                shifted = tau[i, n] + offset
                d_int = math.floor(shifted - d0)
                mu = shifted - d0 - d_int
                idx = n + offset - int(d_int)
                if 0 <= idx < stream_len:
                    acc = streams[n_branches - 1, idx]
                    for k in range(n_branches - 2, -1, -1):
                        acc = acc * mu + streams[k, idx]
                    out[n] += amp[i, n] * acc
        return out


def accumulate_images(out, streams, tau, amp, offset, d0):
    """Sum amp-weighted fractionally delayed signal copies into out.

    out: (T,) accumulator, streams: (M+1, Ls) branch streams shared by all
    images, tau/amp: (S, T) per-image delay (samples) and gain, offset:
    integer shift applied to both the delay and the read index (cancels in
    the resolved signal time), d0: nominal branch delay.
    """
    if USE_NUMBA:
        return _accumulate_numba(out, streams, tau, amp, offset, d0)
    return _accumulate_numpy(out, streams, tau, amp, offset, d0)


# ---------------------------------------------------------------------------
# windowed-sinc interpolation of a coarse stream onto a dense grid
#
# Output sample m sits at coarse time m / factor. Only `factor` distinct
# fractional phases exist, so the kernel values live in a precomputed
# (factor, 2*halfwidth + 1) table whose rows are normalized to sum to one
# (constants interpolate exactly). Out-of-range taps clamp to the edge
# sample, which hold-extrapolates the stream.


def _upsample_numpy(coarse, table, factor, out):
    n_coarse = coarse.shape[0]
    halfspan = (table.shape[1] - 1) // 2
    m = np.arange(out.shape[0], dtype=np.int64)
    base = m // factor
    phase = (m % factor).astype(np.int64)
    out[:] = 0.0
    for col in range(table.shape[1]):
        j = np.clip(base + (col - halfspan), 0, n_coarse - 1)
        out += table[phase, col] * coarse[j]
    return out


if HAS_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _upsample_numba(coarse, table, factor, out):  # pragma: no cover - jit
        n_coarse = coarse.shape[0]
        n_taps = table.shape[1]
        halfspan = (n_taps - 1) // 2
        for m in range(out.shape[0]):
            base = m // factor
            phase = m % factor
            acc = 0.0
            for col in range(n_taps):
                j = base + (col - halfspan)
                if j < 0:
                    j = 0
                elif j >= n_coarse:
                    j = n_coarse - 1
                acc += table[phase, col] * coarse[j]
            out[m] = acc
        return out


def upsample_stream(coarse, table, factor, out_len):
    """Interpolate a coarse sequence to out_len samples at `factor` x rate."""
    coarse = np.ascontiguousarray(coarse, dtype=np.float64)
    out = np.empty(out_len, dtype=np.float64)
    if USE_NUMBA:
        return _upsample_numba(coarse, table, factor, out)
    return _upsample_numpy(coarse, table, factor, out)
