import numpy as np
import pytest
from dataclasses import replace

from moverb import _kernels, synth
from moverb.room import MicPosition, Room, as_arrays, enumerate_images
from moverb.synth import (
    DelayStreams,
    SynthesisConfig,
    cost_report,
    high_order_distances,
    low_order_distances,
    merge_streams,
    prepare_streams,
    render,
    select_images,
    synthesize,
)
from moverb.trajectory import Trajectory, TrajectorySpec, generate

from conftest import sine, snr_db

RATE = 16000.0


def static_traj(pos, n, rate=RATE):
    return Trajectory(rate=rate, positions=np.tile(np.asarray(pos, float), (n, 1)))


def moving_traj(n, rate=RATE, seed=3, duration=None):
    room = Room(dims=np.array([5.0, 6.0, 4.0]), wall_reflection=np.full(6, 0.9))
    dur = duration if duration is not None else n / rate
    spec = TrajectorySpec(
        kind="sine", duration=dur, bandwidth_limit=2.0, speed_max=1.0, seed=seed
    )
    return generate(spec, rate, room)


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = SynthesisConfig()
        assert cfg.audio_rate == 16000.0
        assert cfg.decimation == 3200

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"audio_rate": 0.0},
            {"decimation": 0},
            {"order_split": -1},
            {"max_order": -1},
            {"sound_speed": 0.0},
            {"d_min": 0.0},
            {"workers": 0},
            {"eval_budget": 0.0},
            {"modulate": "both"},
            {"t60": -1.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SynthesisConfig(**kwargs)


class TestDistanceStreams:
    def test_low_order_matches_direct_norm(self, room_5x6x4, mic_std):
        tr = moving_traj(8000, duration=0.5)
        images = enumerate_images(room_5x6x4, 1)
        streams = low_order_distances(images, tr, mic_std, room_5x6x4)
        assert streams.d.shape == (len(images), len(tr))
        offset, sign, _, _ = as_arrays(images, room_5x6x4)
        for i in range(len(images)):
            want = np.linalg.norm(
                offset[i] + sign[i] * tr.positions - mic_std.pos, axis=1
            )
            assert np.allclose(streams.d[i], want, atol=1e-12)
        assert streams.eval_count == streams.d.size

    def test_high_order_factor_one_equals_low(self, room_5x6x4, mic_std):
        tr = moving_traj(4000, duration=0.25)
        images = [sp for sp in enumerate_images(room_5x6x4, 2) if sp.order == 2]
        low = low_order_distances(images, tr, mic_std, room_5x6x4)
        high = high_order_distances(
            images, tr, mic_std, room_5x6x4, len(tr), 1
        )
        assert np.array_equal(low.d, high.d)

    def test_high_order_coarse_eval_count(self, room_5x6x4, mic_std):
        n = 32000
        tr = moving_traj(n, duration=2.0)
        from moverb.trajectory import decimate

        coarse = decimate(tr, 3200)
        images = [sp for sp in enumerate_images(room_5x6x4, 2) if sp.order == 2]
        high = high_order_distances(images, coarse, mic_std, room_5x6x4, n, 3200)
        assert high.d.shape == (len(images), n)
        assert high.eval_count == len(images) * len(coarse)

    def test_high_order_interior_accuracy(self, room_5x6x4, mic_std):
        # slow path: coarse sampling at 5 Hz then restoration must track the
        # true distance closely away from the edges
        n = 16 * 16000
        tr = moving_traj(n, duration=16.0)
        from moverb.trajectory import decimate

        coarse = decimate(tr, 3200)
        images = [sp for sp in enumerate_images(room_5x6x4, 2) if sp.order == 2][:4]
        high = high_order_distances(images, coarse, mic_std, room_5x6x4, n, 3200)
        exact = low_order_distances(images, tr, mic_std, room_5x6x4)
        guard = 33 * 3200
        err = np.max(np.abs(high.d[:, guard:-guard] - exact.d[:, guard:-guard]))
        assert err < 5e-4  # meters


class TestMerge:
    def test_merge_restores_canonical_order(self, room_5x6x4, mic_std):
        tr = moving_traj(2000, duration=0.125)
        images = enumerate_images(room_5x6x4, 2)
        low = [sp for sp in images if sp.order <= 1]
        high = [sp for sp in images if sp.order > 1]
        a = low_order_distances(low, tr, mic_std, room_5x6x4)
        b = low_order_distances(high, tr, mic_std, room_5x6x4)
        merged = merge_streams(a, b)
        assert merged.specs == images
        direct = low_order_distances(images, tr, mic_std, room_5x6x4)
        assert np.array_equal(merged.d, direct.d)

    def test_merge_with_empty_side(self, room_5x6x4, mic_std):
        tr = moving_traj(1000, duration=0.0625)
        images = enumerate_images(room_5x6x4, 1)
        a = low_order_distances(images, tr, mic_std, room_5x6x4)
        empty = low_order_distances([], tr, mic_std, room_5x6x4)
        assert merge_streams(a, empty) is a
        assert merge_streams(empty, a) is a


class TestSynthesize:
    def test_output_length(self, filt, room_5x6x4, mic_std):
        n = 4000
        tr = static_traj([0.8, 4.1, 2.75], n)
        cfg = SynthesisConfig(max_order=1, decimation=1)
        streams = prepare_streams(tr, room_5x6x4, mic_std, cfg)
        x = sine(440.0, n / RATE, RATE)
        y = synthesize(x, streams, filt, cfg)
        tau_max = RATE * float(streams.d.max()) / cfg.sound_speed
        assert y.size == n + int(np.ceil(tau_max)) + filt.branch_len

    def test_direct_path_is_scaled_delay(self, filt, room_5x6x4, mic_std):
        # direct image only: output must be the input delayed by d/c seconds
        # and scaled by 1/(4 pi d)
        n = 4000
        src = np.array([2.0, 3.5, 2.0])
        tr = static_traj(src, n)
        cfg = SynthesisConfig(max_order=0, decimation=1)
        x = sine(750.0, n / RATE, RATE)
        y = render(x, tr, room_5x6x4, mic_std, filt, cfg)
        d = float(np.linalg.norm(src - mic_std.pos))
        amp = 1.0 / (4 * np.pi * d)
        delay_s = d / 343.0
        t_out = np.arange(y.size) / RATE
        ref = amp * np.sin(2 * np.pi * 750.0 * (t_out - delay_s))
        lo = 200
        hi = n - 200
        assert snr_db(y[lo:hi], ref[lo:hi]) >= 60.0

    def test_input_scaling_commutes(self, filt, room_5x6x4, mic_std):
        n = 2000
        tr = moving_traj(n, duration=0.125)
        cfg = SynthesisConfig(max_order=1, decimation=1)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(n)
        y1 = render(x, tr, room_5x6x4, mic_std, filt, cfg)
        y2 = render(3.0 * x, tr, room_5x6x4, mic_std, filt, cfg)
        assert np.allclose(y2, 3.0 * y1, rtol=1e-12, atol=1e-14)

    def test_image_superposition(self, filt, room_5x6x4, mic_std):
        n = 2000
        tr = moving_traj(n, duration=0.125)
        cfg = SynthesisConfig(max_order=2, decimation=1)
        rng = np.random.default_rng(1)
        x = rng.standard_normal(n)
        images = enumerate_images(room_5x6x4, 2)
        half = len(images) // 2
        full = synthesize(
            x, prepare_streams(tr, room_5x6x4, mic_std, cfg, images=images), filt, cfg
        )
        a = synthesize(
            x,
            prepare_streams(tr, room_5x6x4, mic_std, cfg, images=images[:half]),
            filt,
            cfg,
        )
        b = synthesize(
            x,
            prepare_streams(tr, room_5x6x4, mic_std, cfg, images=images[half:]),
            filt,
            cfg,
        )
        m = min(full.size, a.size, b.size)
        num = np.max(np.abs(full[:m] - (a[:m] + b[:m])))
        assert num <= 1e-10 * max(1.0, np.max(np.abs(full)))

    def test_rejects_empty_input(self, filt, room_5x6x4, mic_std):
        tr = static_traj([2.0, 3.0, 2.0], 100)
        cfg = SynthesisConfig(max_order=0, decimation=1)
        streams = prepare_streams(tr, room_5x6x4, mic_std, cfg)
        with pytest.raises(ValueError):
            synthesize(np.array([]), streams, filt, cfg)

    def test_rejects_nonfinite_input(self, filt, room_5x6x4, mic_std):
        tr = static_traj([2.0, 3.0, 2.0], 100)
        cfg = SynthesisConfig(max_order=0, decimation=1)
        streams = prepare_streams(tr, room_5x6x4, mic_std, cfg)
        x = np.ones(100)
        x[5] = np.inf
        with pytest.raises(ValueError):
            synthesize(x, streams, filt, cfg)

    def test_rate_mismatch_raises(self, filt, room_5x6x4, mic_std):
        tr = Trajectory(rate=8000.0, positions=np.tile([2.0, 3.0, 2.0], (100, 1)))
        cfg = SynthesisConfig(max_order=0, decimation=1)
        with pytest.raises(ValueError):
            prepare_streams(tr, room_5x6x4, mic_std, cfg)

    def test_mic_outside_raises(self, filt, room_5x6x4):
        tr = static_traj([2.0, 3.0, 2.0], 100)
        cfg = SynthesisConfig(max_order=0, decimation=1)
        mic = MicPosition(pos=np.array([7.0, 3.0, 2.0]))
        with pytest.raises(ValueError):
            prepare_streams(tr, room_5x6x4, mic, cfg)

    def test_emission_gain_close_to_reception_gain_when_slow(
        self, filt, room_5x6x4, mic_std
    ):
        # for slow motion the two modulation conventions nearly coincide
        n = 4000
        tr = moving_traj(n, duration=0.25)
        x = sine(300.0, n / RATE, RATE)
        base = SynthesisConfig(max_order=1, decimation=1)
        y_rx = render(x, tr, room_5x6x4, mic_std, filt, base)
        y_tx = render(
            x, tr, room_5x6x4, mic_std, filt, replace(base, modulate="source")
        )
        m = min(y_rx.size, y_tx.size)
        lo = 200
        assert snr_db(y_tx[lo : m - 200], y_rx[lo : m - 200]) >= 50.0


class TestDeterminism:
    def test_workers_do_not_change_bits(self, filt, room_5x6x4, mic_std):
        n = 8000
        tr = moving_traj(n, duration=0.5)
        cfg = SynthesisConfig(max_order=3, decimation=1)
        rng = np.random.default_rng(2)
        x = rng.standard_normal(n)
        y1 = render(x, tr, room_5x6x4, mic_std, filt, cfg)
        for workers in (2, 5, 8):
            yw = render(
                x, tr, room_5x6x4, mic_std, filt, replace(cfg, workers=workers)
            )
            assert np.array_equal(y1, yw), f"workers={workers} changed the output"

    def test_repeat_runs_identical(self, filt, room_5x6x4, mic_std):
        n = 4000
        tr = moving_traj(n, duration=0.25)
        cfg = SynthesisConfig(max_order=2, decimation=3200)
        x = sine(640.0, n / RATE, RATE)
        a = render(x, tr, room_5x6x4, mic_std, filt, cfg)
        b = render(x, tr, room_5x6x4, mic_std, filt, cfg)
        assert np.array_equal(a, b)


class TestSelectImages:
    def test_t60_cull_reduces_set(self, room_5x6x4, mic_std):
        tr = static_traj([2.0, 3.0, 2.0], 100)
        all_cfg = SynthesisConfig(max_order=3, decimation=1)
        cut_cfg = SynthesisConfig(max_order=3, decimation=1, t60=0.02)
        full = select_images(room_5x6x4, tr, mic_std, all_cfg)
        cut = select_images(room_5x6x4, tr, mic_std, cut_cfg)
        assert len(cut) < len(full)
        reach = 343.0 * 0.02
        from moverb.room import image_distance

        for sp in cut:
            assert image_distance(sp, tr.positions[0], mic_std, room_5x6x4) <= reach


class TestKernelPaths:
    def test_distance_numba_matches_numpy(self, room_5x6x4, mic_std):
        if not _kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        tr = moving_traj(3000, duration=0.1875)
        images = enumerate_images(room_5x6x4, 2)
        offset, sign, _, _ = as_arrays(images, room_5x6x4)
        out_a = np.empty((len(images), len(tr)))
        out_b = np.empty((len(images), len(tr)))
        _kernels._distance_numba(offset, sign, mic_std.pos, tr.positions, out_a)
        _kernels._distance_numpy(offset, sign, mic_std.pos, tr.positions, out_b)
        assert np.array_equal(out_a, out_b)

    def test_accumulate_numba_matches_numpy(self, filt):
        if not _kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(4)
        x = rng.standard_normal(1000)
        streams = np.ascontiguousarray(
            np.stack([np.convolve(x, filt.branches[k]) for k in range(4)])
        )
        tau = 20.0 + 5.0 * rng.random((6, 1100))
        amp = rng.random((6, 1100))
        out_a = np.zeros(1100)
        out_b = np.zeros(1100)
        _kernels._accumulate_numba(
            out_a, streams, tau, amp, filt.branch_len, filt.nominal_delay
        )
        _kernels._accumulate_numpy(
            out_b, streams, tau, amp, filt.branch_len, filt.nominal_delay
        )
        assert np.array_equal(out_a, out_b)

    def test_upsample_numba_matches_numpy(self):
        if not _kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        from moverb.trajectory import _phase_table

        rng = np.random.default_rng(5)
        coarse = rng.standard_normal(50)
        factor = 64
        table = _phase_table(factor)
        out_len = 50 * factor
        out_a = np.zeros(out_len)
        out_b = np.zeros(out_len)
        _kernels._upsample_numba(coarse, table, factor, out_a)
        _kernels._upsample_numpy(coarse, table, factor, out_b)
        assert np.array_equal(out_a, out_b)


class TestCostReport:
    def test_naive_count_medium_room(self):
        cfg = SynthesisConfig(audio_rate=16000.0, order_split=1, decimation=3200)
        rep = cost_report(cfg, 45000, 1.0)
        assert rep["naive_evals"] == 45000 * 16000
        assert rep["naive_evals"] == pytest.approx(7.2e8)

    def test_reduction_factor_for_high_orders(self):
        cfg = SynthesisConfig(audio_rate=16000.0, order_split=1, decimation=3200)
        rep = cost_report(cfg, 45000, 1.0)
        assert rep["high_order_reduction"] >= 100.0
        assert rep["images_low"] == 7  # direct + six first-order mirrors
        assert rep["images_high"] == 45000 - 7

    def test_accepts_spec_list(self, room_5x6x4):
        cfg = SynthesisConfig(order_split=1, decimation=3200, max_order=2)
        images = enumerate_images(room_5x6x4, 2)
        rep = cost_report(cfg, images, 2.0)
        assert rep["images_total"] == len(images)
        assert rep["images_low"] == 7
        assert rep["samples"] == 32000
        coarse = -(-32000 // 3200)
        want = 7 * 32000 + (len(images) - 7) * coarse
        assert rep["hierarchical_evals"] == want

    def test_n1_has_no_reduction(self):
        cfg = SynthesisConfig(order_split=1, decimation=1)
        rep = cost_report(cfg, 1000, 1.0)
        assert rep["hierarchical_evals"] == rep["naive_evals"]
