"""Ground-truth renderers, the splice baseline, and comparison metrics.

The static impulse-response path and the brute-force full-rate render are
the references the fast engine is validated against. The splice baseline
reproduces the classic artifact of updating a static room response block
by block while the source moves: phase jumps and a gain sawtooth at every
block boundary.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve, hilbert

from .room import as_mic, attenuation, enumerate_images, image_distance
from .synth import BudgetError, SynthesisConfig, render
from .trajectory import UPSAMPLE_HALFWIDTH, UPSAMPLE_KAISER_BETA, Trajectory

_DIRECT_CONV_LIMIT = 5_000_000  # ops bound below which exact O(n m) is used


@dataclass(frozen=True)
class StaticRIR:
    """Discrete impulse response of a frozen source/mic/room configuration."""

    rate: float
    taps: np.ndarray
    image_count: int
    max_order: int


@dataclass(frozen=True)
class ComparisonReport:
    """Numeric proxies for amplitude and phase fidelity.

    snr_db: band-limited interior signal-to-error ratio, capped at 200.
    envelope_max_jump: largest per-sample change of the test signal's
    analytic-signal envelope over the interior. inst_freq_track: smoothed
    instantaneous-frequency estimate, Hz, over the interior.
    runtime_counts: optional evaluation tallies carried through.
    """

    snr_db: float
    envelope_max_jump: float
    inst_freq_track: np.ndarray
    runtime_counts: dict


def _sinc_kernel(frac):
    """Kaiser-windowed sinc centered on a fractional sample position.

    Entry i holds the kernel at integer tap offset i - halfwidth relative
    to the fractional position frac, so scattering these values around the
    integer base places the impulse at base + frac.
    """
    hw = UPSAMPLE_HALFWIDTH
    offsets = np.arange(-hw, hw + 1, dtype=np.float64)
    arg = offsets - frac
    window = np.zeros_like(arg)
    inside = np.abs(arg) <= hw
    u = np.clip(arg / hw, -1.0, 1.0)
    window[inside] = np.i0(UPSAMPLE_KAISER_BETA * np.sqrt(1.0 - u[inside] ** 2))
    window /= np.i0(UPSAMPLE_KAISER_BETA)
    return np.sinc(arg) * window


def static_rir(room, source_pos, mic, rate, max_order, c=343.0, d_min=0.05):
    """Tap train of the frozen configuration with fractional placement.

    Each image contributes amplitude beta/(4 pi d) at delay d * rate / c
    samples, spread over a windowed-sinc kernel rather than rounded to the
    nearest sample (rounding would inject up to half a sample of delay
    error and mask fine delay accuracy downstream).
    """
    source_pos = np.asarray(source_pos, dtype=np.float64)
    if not room.contains(source_pos):
        raise ValueError("source position must be inside the room")
    mic = as_mic(mic)
    mic.require_inside(room)
    images = enumerate_images(room, max_order)
    hw = UPSAMPLE_HALFWIDTH
    dists = np.array([image_distance(sp, source_pos, mic, room) for sp in images])
    taus = rate * dists / c
    n_taps = int(np.ceil(taus.max())) + hw + 2
    taps = np.zeros(n_taps)
    for sp, d, tau in zip(images, dists, taus):
        amp = attenuation(sp.beta, max(d, d_min))
        base = int(np.floor(tau))
        frac = tau - base
        kernel = amp * _sinc_kernel(frac)
        lo = base - hw
        k_lo = max(0, -lo)
        k_hi = min(kernel.size, n_taps - lo)
        if k_lo < k_hi:
            taps[lo + k_lo : lo + k_hi] += kernel[k_lo:k_hi]
    return StaticRIR(
        rate=float(rate), taps=taps, image_count=len(images), max_order=max_order
    )


def static_render(s, rir, rate=None):
    """Plain convolution with a static impulse response.

    Output length is len(s) + len(taps) - 1. Small products use exact
    direct convolution; larger ones switch to FFT convolution (equal to
    direct within roundoff).
    """
    s = np.asarray(s, dtype=np.float64)
    if rate is not None and rate != rir.rate:
        raise ValueError("sample rate does not match the impulse response")
    if s.size * rir.taps.size <= _DIRECT_CONV_LIMIT:
        return np.convolve(s, rir.taps)
    return fftconvolve(s, rir.taps)


def full_rate_moving_oracle(s, traj, room, mic, f, cfg):
    """Brute force: every image's distance evaluated at every sample.

    Identical pipeline to the hierarchical engine with decimation 1, so
    the engine at N = 1 matches this bit for bit. Refuses jobs whose
    distance-evaluation count exceeds cfg.eval_budget.
    """
    n_images = len(enumerate_images(room, cfg.max_order))
    evals = n_images * len(traj)
    if evals > cfg.eval_budget:
        raise BudgetError(
            f"oracle render needs {evals:.3g} distance evaluations, "
            f"budget is {cfg.eval_budget:.3g}"
        )
    return render(s, traj, room, mic, f, replace(cfg, decimation=1))


def splice_baseline(s, traj, room, mic, block_hop, crossfade, cfg):
    """Block-frozen render: static response per block, overlap-added.

    The source position is frozen at each block start. crossfade = 0
    butt-joins the blocks (the pure splice, with its phase discontinuities
    and gain sawtooth); crossfade > 0 linearly fades between neighbors
    with windows that sum to one.
    """
    s = np.asarray(s, dtype=np.float64)
    if block_hop < 1 or int(block_hop) != block_hop:
        raise ValueError("block_hop must be a positive integer")
    block_hop = int(block_hop)
    crossfade = int(crossfade)
    if crossfade < 0 or crossfade > block_hop:
        raise ValueError("crossfade must lie in [0, block_hop]")
    if traj.rate != cfg.audio_rate:
        raise ValueError("trajectory rate must equal the audio rate")
    n = s.size
    n_blocks = max(1, -(-n // block_hop))
    pieces = []
    max_len = 0
    for b in range(n_blocks):
        start = b * block_hop
        stop = min(n, (b + 1) * block_hop)
        window = np.zeros(n)
        window[start:stop] = 1.0
        if crossfade > 0:
            if b > 0:
                ramp = (np.arange(crossfade) + 0.5) / crossfade
                window[start : start + crossfade] = ramp[: stop - start]
            if b < n_blocks - 1 and stop + crossfade <= n:
                ramp = (np.arange(crossfade) + 0.5) / crossfade
                window[stop : stop + crossfade] = 1.0 - ramp
            elif b < n_blocks - 1:
                avail = n - stop
                if avail > 0:
                    ramp = (np.arange(avail) + 0.5) / crossfade
                    window[stop:] = np.maximum(0.0, 1.0 - ramp)
        src = traj.positions[min(start, len(traj) - 1)]
        rir = static_rir(
            room,
            src,
            mic,
            cfg.audio_rate,
            cfg.max_order,
            c=cfg.sound_speed,
            d_min=cfg.d_min,
        )
        piece = static_render(s * window, rir)
        pieces.append(piece)
        max_len = max(max_len, piece.size)
    out = np.zeros(max_len)
    for piece in pieces:
        out[: piece.size] += piece
    return out


def _brickwall(x, rate, cutoff_hz):
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, 1.0 / rate)
    spec[freqs > cutoff_hz] = 0.0
    return np.fft.irfft(spec, x.size)


def compare(a, b, passband=0.8, rate=16000.0, interior=0.05, runtime_counts=None):
    """Measure a against reference b.

    Signals are trimmed to their common length. The SNR is computed after
    band-limiting both to passband * Nyquist and discarding an `interior`
    fraction at each end (edge transients and hold-extrapolated regions are
    excluded by construction there). Envelope and instantaneous frequency
    come from the analytic signal of the raw trimmed a; the frequency track
    is smoothed over 10 ms. SNR is capped at 200 dB.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = min(a.size, b.size)
    if n < 16:
        raise ValueError("signals too short to compare")
    if not 0.0 < passband <= 1.0:
        raise ValueError("passband must be in (0, 1]")
    if not 0.0 <= interior < 0.5:
        raise ValueError("interior must be in [0, 0.5)")
    a = a[:n]
    b = b[:n]
    lo = int(np.floor(interior * n))
    hi = n - lo
    if passband < 1.0:
        a_band = _brickwall(a, rate, passband * rate / 2.0)
        b_band = _brickwall(b, rate, passband * rate / 2.0)
    else:
        a_band, b_band = a, b
    ref_energy = float(np.sum(b_band[lo:hi] ** 2))
    if ref_energy <= 0.0:
        raise ValueError("reference has no energy on the interior")
    err_energy = float(np.sum((a_band[lo:hi] - b_band[lo:hi]) ** 2))
    if err_energy == 0.0:
        snr = 200.0
    else:
        snr = min(200.0, 10.0 * np.log10(ref_energy / err_energy))

    analytic = hilbert(a)
    envelope = np.abs(analytic)
    env_interior = envelope[lo:hi]
    env_jump = float(np.max(np.abs(np.diff(env_interior)))) if env_interior.size > 1 else 0.0

    phase_step = np.angle(analytic[1:] * np.conj(analytic[:-1]))
    inst_freq = phase_step * rate / (2.0 * np.pi)
    smooth = max(1, int(round(0.010 * rate)))
    kernel = np.full(smooth, 1.0 / smooth)
    inst_freq = np.convolve(inst_freq, kernel, mode="same")
    track = inst_freq[lo : max(lo + 1, hi - 1)]

    return ComparisonReport(
        snr_db=float(snr),
        envelope_max_jump=env_jump,
        inst_freq_track=track,
        runtime_counts=dict(runtime_counts or {}),
    )
