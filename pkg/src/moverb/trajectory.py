"""Band-limited source-motion trajectories.

Generation (analytic lines/circles/sines, shaped noise, smoothed waypoint
splines), rate changes, finite-difference kinematics, and an empirical
spectral bandwidth estimator. The decimate/upsample pair is what lets the
synthesis engine sample slowly varying image distances at a tiny fraction
of the audio rate and reconstruct them without audible error.

Edge policy: interpolation clamps to the end samples (hold-extrapolation),
so metrics on reconstructed streams should exclude the kernel half-width
(32 input samples) at each end.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels

UPSAMPLE_HALFWIDTH = 32
# Kaiser shape for >= 80 dB stopband rejection: 0.1102 * (80 - 8.7)
UPSAMPLE_KAISER_BETA = 7.857

_KINDS = ("line", "circle", "sine", "filtered-noise", "waypoint-spline")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled 3-D source path.

    rate: positions per second. positions: (T, 3) meters.
    """

    rate: float
    positions: np.ndarray

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("trajectory rate must be > 0")
        p = np.asarray(self.positions, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ValueError("positions must be a (T, 3) array with T >= 1")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "rate", float(self.rate))

    def __len__(self):
        return self.positions.shape[0]

    @property
    def duration(self):
        return len(self) / self.rate


@dataclass(frozen=True)
class TrajectorySpec:
    """Recipe for generate().

    kind: one of line, circle, sine, filtered-noise, waypoint-spline.
    duration: seconds. bandwidth_limit: Hz, target upper edge of the
    displacement spectrum. speed_max: m/s cap on the path speed. seed:
    RNG seed for every random choice. Optional direction/start pin the
    analytic kinds to exact geometry instead of seeded random choices;
    waypoint_count sizes the spline kind.
    """

    kind: str
    duration: float
    bandwidth_limit: float
    speed_max: float
    seed: int = 0
    direction: tuple = None
    start: tuple = None
    waypoint_count: int = 6

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.bandwidth_limit < 0 or self.speed_max < 0:
            raise ValueError("bandwidth_limit and speed_max must be >= 0")


def _unit_direction(rng, pinned):
    if pinned is not None:
        d = np.asarray(pinned, dtype=np.float64)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValueError("direction must be nonzero")
        return d / norm
    while True:
        d = rng.normal(size=3)
        norm = np.linalg.norm(d)
        if norm > 1e-6:
            return d / norm


def _fit_displacement(disp, center, room, margin, speed_max, rate):
    """Scale a zero-centered displacement to honor speed and wall margins."""
    span = np.max(np.abs(disp), axis=0)
    if np.any(center - span < margin) or np.any(center + span > room.dims - margin):
        allowed = np.minimum(center - margin, room.dims - margin - center)
        with np.errstate(divide="ignore", invalid="ignore"):
            per_axis = np.where(span > 0, allowed / np.maximum(span, 1e-300), np.inf)
        scale = float(np.min(per_axis))
        if scale <= 0:
            raise ValueError("margin leaves no room for motion around the center")
        disp = disp * min(1.0, scale)
    if len(disp) >= 2:
        speeds = np.linalg.norm(np.diff(disp, axis=0), axis=1) * rate
        vmax = float(speeds.max()) if speeds.size else 0.0
        if vmax > speed_max:
            if speed_max == 0:
                disp = np.zeros_like(disp)
            else:
                disp = disp * (0.999 * speed_max / vmax)
    return disp


def generate(spec, rate, room, margin=0.3):
    """Build a band-limited trajectory inside the room.

    The path keeps at least `margin` meters from every wall, its
    finite-difference speed stays within speed_max * (1 + 1e-3), and for
    the oscillatory kinds at least 99% of the displacement spectral energy
    lies below bandwidth_limit (a constant-velocity line has an unbounded
    window spectrum and carries no such guarantee). Deterministic per seed.
    """
    if rate < 2 * spec.bandwidth_limit:
        raise ValueError("rate must be at least twice the bandwidth limit")
    if margin < 0 or np.any(2 * margin >= room.dims):
        raise ValueError("margin must be >= 0 and leave interior space")
    rng = np.random.default_rng(spec.seed)
    n = max(2, int(round(spec.duration * rate)))
    t = np.arange(n) / rate
    center = room.dims / 2.0

    if spec.kind == "line":
        direction = _unit_direction(rng, spec.direction)
        travel = spec.speed_max * spec.duration
        if spec.start is not None:
            start = np.asarray(spec.start, dtype=np.float64)
        else:
            start = center - direction * travel / 2.0
        pos = start[None, :] + direction[None, :] * (spec.speed_max * t)[:, None]
        inside = np.all(pos > margin) and np.all(pos < room.dims - margin)
        if not inside:
            raise ValueError("line does not fit inside the room with this margin")
        return Trajectory(rate=rate, positions=pos)

    if spec.kind == "sine":
        direction = _unit_direction(rng, spec.direction)
        f = spec.bandwidth_limit
        if f == 0 or spec.speed_max == 0:
            disp = np.zeros((n, 3))
        else:
            amp = spec.speed_max / (2 * np.pi * f)
            disp = amp * np.sin(2 * np.pi * f * t)[:, None] * direction[None, :]
        disp = _fit_displacement(disp, center, room, margin, spec.speed_max, rate)
        return Trajectory(rate=rate, positions=center + disp)

    if spec.kind == "circle":
        f = spec.bandwidth_limit
        if f == 0 or spec.speed_max == 0:
            disp = np.zeros((n, 3))
        else:
            radius = spec.speed_max / (2 * np.pi * f)
            phase = 2 * np.pi * f * t
            disp = np.stack(
                [radius * np.cos(phase), radius * np.sin(phase), np.zeros(n)], axis=1
            )
        disp = _fit_displacement(disp, center, room, margin, spec.speed_max, rate)
        return Trajectory(rate=rate, positions=center + disp)

    if spec.kind == "filtered-noise":
        disp = np.zeros((n, 3))
        k_max = int(np.floor(0.95 * spec.bandwidth_limit * n / rate))
        if k_max >= 1 and spec.speed_max > 0:
            for axis in range(3):
                spectrum = np.zeros(n // 2 + 1, dtype=complex)
                live = rng.normal(size=k_max) + 1j * rng.normal(size=k_max)
                spectrum[1 : k_max + 1] = live
                disp[:, axis] = np.fft.irfft(spectrum, n)
            speeds = np.linalg.norm(np.diff(disp, axis=0), axis=1) * rate
            vmax = float(speeds.max())
            if vmax > 0:
                disp = disp * (0.999 * spec.speed_max / vmax)
        disp = _fit_displacement(disp, center, room, margin, spec.speed_max, rate)
        return Trajectory(rate=rate, positions=center + disp)

    # waypoint-spline: random knots in the middle 60% of the usable box so
    # spline overshoot and low-pass ringing stay inside before rescaling
    count = max(2, spec.waypoint_count)
    usable = room.dims - 2 * margin
    waypoints = margin + (0.2 + 0.6 * rng.random((count, 3))) * usable
    if spec.speed_max == 0 and not np.allclose(waypoints, waypoints[0]):
        raise ValueError("speed_max = 0 cannot visit distinct waypoints")
    times = np.linspace(0.0, spec.duration, count)
    spline = CubicSpline(times, waypoints, axis=0)
    pos = spline(np.clip(t, 0.0, times[-1]))
    if spec.bandwidth_limit > 0:
        pos = _lowpass_columns(pos, rate, spec.bandwidth_limit)
    mean = pos.mean(axis=0)
    disp = _fit_displacement(pos - mean, mean, room, margin, spec.speed_max, rate)
    return Trajectory(rate=rate, positions=mean + disp)


def _lowpass_columns(x, rate, cutoff):
    """Brickwall-with-taper FFT low-pass, reflect-padded against edge ringing."""
    n = x.shape[0]
    pad = min(n - 1, max(16, n // 4))
    out = np.empty_like(x)
    for axis in range(x.shape[1]):
        col = x[:, axis]
        ext = np.concatenate(
            [2 * col[0] - col[pad:0:-1], col, 2 * col[-1] - col[-2 : -pad - 2 : -1]]
        )
        spec = np.fft.rfft(ext)
        freqs = np.fft.rfftfreq(ext.size, 1.0 / rate)
        gain = np.ones_like(freqs)
        lo, hi = 0.8 * cutoff, cutoff
        ramp = (freqs > lo) & (freqs <= hi)
        gain[ramp] = 0.5 * (1 + np.cos(np.pi * (freqs[ramp] - lo) / (hi - lo)))
        gain[freqs > hi] = 0.0
        out[:, axis] = np.fft.irfft(spec * gain, ext.size)[pad : pad + n]
    return out


@lru_cache(maxsize=8)
def _phase_table(factor):
    """Normalized Kaiser-windowed sinc weights for each output phase.

    Row r holds the kernel sampled at r/factor - i for tap offsets
    i in [-halfwidth, halfwidth]; rows sum to one so constants pass
    through exactly and the interpolator has zero net group delay.
    """
    hw = UPSAMPLE_HALFWIDTH
    offsets = np.arange(-hw, hw + 1, dtype=np.float64)
    table = np.empty((factor, offsets.size))
    for r in range(factor):
        arg = r / factor - offsets
        inside = np.abs(arg) <= hw
        window = np.zeros_like(arg)
        u = np.clip(arg / hw, -1.0, 1.0)
        window[inside] = np.i0(
            UPSAMPLE_KAISER_BETA * np.sqrt(1.0 - u[inside] ** 2)
        ) / np.i0(UPSAMPLE_KAISER_BETA)
        row = np.sinc(arg) * window
        table[r] = row / row.sum()
    table.flags.writeable = False
    return table


def bandlimited_upsample(samples, factor, out_len):
    """Windowed-sinc interpolation of a scalar sequence by `factor`.

    Output index m sits at input time m / factor; the result is trimmed or
    edge-padded to out_len. Exact on constant inputs; endpoints hold.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a nonempty 1-D sequence")
    if factor < 1 or int(factor) != factor:
        raise ValueError("factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        if out_len <= x.size:
            return x[:out_len].copy()
        return np.concatenate([x, np.full(out_len - x.size, x[-1])])
    return _kernels.upsample_stream(x, _phase_table(factor), factor, out_len)


def decimate(traj, factor):
    """Keep every factor-th position; rate divides by factor.

    When the measured bandwidth exceeds the output Nyquist by less than 2x
    an anti-alias low-pass is applied first; a larger violation is passed
    through unfiltered (the caller asked for aliasing). factor = 1 returns
    the trajectory unchanged.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError("decimation factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return traj
    nyquist_out = 0.5 * traj.rate / factor
    pos = traj.positions
    if len(traj) >= 2:
        bw = bandwidth_estimate(traj)
        if nyquist_out < bw < 2.0 * nyquist_out:
            pos = _lowpass_columns(pos, traj.rate, 0.9 * nyquist_out)
    return Trajectory(rate=traj.rate / factor, positions=pos[::factor])


def velocity(traj):
    """Central-difference velocity (one-sided at the ends), m/s."""
    if len(traj) < 2:
        raise ValueError("velocity needs at least 2 positions")
    return np.gradient(traj.positions, 1.0 / traj.rate, axis=0)


def speed_max(traj):
    """Largest finite-difference speed along the path, m/s."""
    if len(traj) < 2:
        return 0.0
    steps = np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)
    return float(steps.max() * traj.rate)


def bandwidth_estimate(traj, energy_fraction=0.99):
    """Smallest frequency containing the requested energy fraction.

    Mean-removed displacement periodogram per axis; returns the largest of
    the three per-axis results. A constant trajectory reports 0 Hz.
    """
    if not 0.0 < energy_fraction < 1.0:
        raise ValueError("energy_fraction must be in (0, 1)")
    pos = traj.positions
    n = pos.shape[0]
    if n < 2:
        return 0.0
    freqs = np.fft.rfftfreq(n, 1.0 / traj.rate)
    worst = 0.0
    for axis in range(3):
        x = pos[:, axis] - pos[:, axis].mean()
        power = np.abs(np.fft.rfft(x)) ** 2
        total = power.sum()
        if total <= 0:
            continue
        cum = np.cumsum(power) / total
        idx = int(np.searchsorted(cum, energy_fraction))
        worst = max(worst, float(freqs[min(idx, freqs.size - 1)]))
    return worst
