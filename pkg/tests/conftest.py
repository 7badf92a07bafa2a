import numpy as np
import pytest

from botl import ReceiverTrack, TargetSet, TrajectoryPreset, generate_track


@pytest.fixture
def canonical_track() -> ReceiverTrack:
    return generate_track(TrajectoryPreset(
        kind="linear", samples=100, start=(0.0, 0.0), end=(30000.0, 0.0)
    ))


@pytest.fixture
def single_target() -> TargetSet:
    return TargetSet(
        np.array([[15000.0, 15000.0]]),
        np.array([np.deg2rad(50.0)]),
        np.array([0.0]),
    )


@pytest.fixture
def two_targets() -> TargetSet:
    return TargetSet(
        np.array([[14500.0, 15000.0], [20500.0, 15000.0]]),
        np.deg2rad([30.0, 70.0]),
        np.deg2rad([-20.0, 20.0]),
    )
