import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from botl import (
    DegenerateGeometryError,
    NoiseModel,
    ObservabilityError,
    ReceiverTrack,
    generate_observations,
    observations_to_csv,
    true_bearing,
    wrap_angle,
)


class TestWrap:
    @given(st.floats(-1e6, 1e6))
    def test_range(self, a):
        w = wrap_angle(a)
        assert -np.pi < w <= np.pi

    def test_pi_maps_to_pi(self):
        assert wrap_angle(np.pi) == np.pi
        assert wrap_angle(-np.pi) == np.pi
        assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)

    @given(st.floats(-3.1, 3.1))
    def test_idempotent_inside_range(self, a):
        assert wrap_angle(a) == pytest.approx(a, abs=1e-12)


class TestTrueBearing:
    def test_diagonal(self):
        assert true_bearing([0, 0], [1, 1]) == pytest.approx(np.pi / 4)

    def test_due_north(self):
        assert true_bearing([0, 0], [0, 5]) == pytest.approx(np.pi / 2)

    def test_third_quadrant_matches_arctan2(self):
        # receiver (2,3) -> target (-1,-1): delta (-3,-4)
        assert true_bearing([2, 3], [-1, -1]) == pytest.approx(np.arctan2(-4, -3))

    def test_coincident_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            true_bearing([1, 2], [1, 2])


class TestGenerateObservations:
    def test_zero_noise_is_exact(self, canonical_track, two_targets):
        frames = generate_observations(
            canonical_track, two_targets, NoiseModel(0.0, 0.0, seed=3)
        )
        assert len(frames) == 100
        for frame in frames:
            for slot, tgt in enumerate(frame.truth_labels):
                expected = true_bearing(
                    canonical_track.positions[frame.step],
                    two_targets.positions[tgt],
                )
                assert frame.theta_hat[slot] == pytest.approx(expected, abs=1e-15)
                assert frame.gamma_hat[slot] == two_targets.gamma[tgt]
                assert frame.eta_hat[slot] == two_targets.eta[tgt]

    def test_same_seed_is_bit_identical(self, canonical_track, two_targets):
        noise = NoiseModel(0.01, 0.02, seed=99)
        a = generate_observations(canonical_track, two_targets, noise)
        b = generate_observations(canonical_track, two_targets, noise)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.theta_hat, fb.theta_hat)
            assert np.array_equal(fa.gamma_hat, fb.gamma_hat)
            assert np.array_equal(fa.eta_hat, fb.eta_hat)
            assert np.array_equal(fa.truth_labels, fb.truth_labels)

    def test_trial_index_changes_draws(self, canonical_track, two_targets):
        noise = NoiseModel(0.01, 0.01, seed=99)
        a = generate_observations(canonical_track, two_targets, noise, trial=0)
        b = generate_observations(canonical_track, two_targets, noise, trial=1)
        assert not np.array_equal(a[0].theta_hat, b[0].theta_hat)

    def test_noise_statistics(self, canonical_track, single_target):
        # pooled residuals theta_hat - theta over 100 trials x 100 frames
        sigma = 0.01
        noise = NoiseModel(sigma, 0.0, seed=7)
        residuals = []
        for trial in range(100):
            frames = generate_observations(
                canonical_track, single_target, noise, trial
            )
            for frame in frames:
                truth = true_bearing(
                    canonical_track.positions[frame.step],
                    single_target.positions[0],
                )
                residuals.append(wrap_angle(frame.theta_hat[0] - truth))
        residuals = np.array(residuals)
        n = residuals.size
        assert n == 10000
        assert abs(residuals.mean()) < 3 * sigma / np.sqrt(n)
        assert abs(residuals.std() - sigma) < 0.05 * sigma

    def test_angles_always_wrapped(self, canonical_track, two_targets):
        frames = generate_observations(
            canonical_track, two_targets, NoiseModel(1.5, 2.5, seed=8)
        )
        for frame in frames:
            assert np.all(frame.theta_hat > -np.pi) and np.all(frame.theta_hat <= np.pi)
            assert np.all(frame.eta_hat > -np.pi) and np.all(frame.eta_hat <= np.pi)
            assert np.all(frame.gamma_hat >= 0) and np.all(frame.gamma_hat <= np.pi / 2)

    def test_observability_precondition(self, two_targets):
        track = ReceiverTrack(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(ObservabilityError):
            generate_observations(track, two_targets, NoiseModel(0.01, 0.0, 1))

    def test_csv_export(self, canonical_track, two_targets):
        frames = generate_observations(
            canonical_track, two_targets, NoiseModel(0.01, 0.01, seed=5)
        )
        buf = io.StringIO()
        observations_to_csv([(0, frames)], buf, reveal_labels=True)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "trial,step,slot,theta_hat_rad,gamma_hat_rad,eta_hat_rad,truth_label"
        assert len(lines) == 1 + 100 * 2
        buf = io.StringIO()
        observations_to_csv([(0, frames)], buf)
        assert "truth_label" not in buf.getvalue().splitlines()[0]
