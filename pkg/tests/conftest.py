import math

import numpy as np
import pytest

import zvnav
from zvnav.detector import AdaptiveParams, DetectorParams
from zvnav.optimize import FBetaConfig, MocapStream, RUN_BETA_SQ, RUN_SPEED_THRESHOLD, optimize_gamma
from zvnav.svm import NormStats, build_windows, train

WALK = zvnav.CLASS_IDS["walk"]
RUN = zvnav.CLASS_IDS["run"]


def out_and_back(motion, total_s):
    """Out-and-back trial segments: half outbound, half after a reversal."""
    half = total_s / 2.0
    return [
        (zvnav.gait_preset(motion, heading=0.0), half),
        (zvnav.gait_preset(motion, heading=math.pi), half),
    ]


def mixed_segments():
    """Alternating walk/run out-and-back trial, turns during walking."""
    return [
        (zvnav.gait_preset("walk", heading=0.0), 15.0),
        (zvnav.gait_preset("run", heading=0.0), 15.0),
        (zvnav.gait_preset("walk", heading=math.pi), 15.0),
        (zvnav.gait_preset("run", heading=math.pi), 14.0),
    ]


def mocap_of(truth, rate_hz=125.0):
    return MocapStream(truth.t, truth.pos, rate_hz)


@pytest.fixture(scope="session")
def walk_calibration():
    return zvnav.simulate(out_and_back("walk", 64.0), zvnav.NoiseModel(seed=31))


@pytest.fixture(scope="session")
def run_calibration():
    return zvnav.simulate(out_and_back("run", 64.0), zvnav.NoiseModel(seed=32))


@pytest.fixture(scope="session")
def optimized_gammas(walk_calibration, run_calibration):
    sw, tw = walk_calibration
    sr, tr = run_calibration
    gw, curve_w = optimize_gamma(sw, mocap_of(tw), DetectorParams(), FBetaConfig())
    gr, curve_r = optimize_gamma(
        sr, mocap_of(tr), DetectorParams(),
        FBetaConfig(beta_sq=RUN_BETA_SQ, speed_threshold=RUN_SPEED_THRESHOLD),
    )
    return {"walk": gw, "run": gr, "curve_walk": curve_w, "curve_run": curve_r}


@pytest.fixture(scope="session")
def binary_model(walk_calibration, run_calibration):
    sw, _ = walk_calibration
    sr, _ = run_calibration
    norm = NormStats.from_streams([sw, sr])
    xw = build_windows(sw, 125, stride=14, norm=norm)[:550]
    xr = build_windows(sr, 125, stride=14, norm=norm)[:550]
    windows = np.vstack([xw, xr])
    labels = np.array([WALK] * len(xw) + [RUN] * len(xr))
    return train(windows, labels, norm_stats=norm)


@pytest.fixture(scope="session")
def adaptive_setup(binary_model, optimized_gammas):
    return {
        "model": binary_model,
        "gammas": AdaptiveParams(optimized_gammas["walk"], optimized_gammas["run"]),
        "detector": DetectorParams(),
        "ekf": zvnav.EkfConfig(),
    }


@pytest.fixture(scope="session")
def six_class_streams():
    train_streams = {
        m: zvnav.simulate(zvnav.gait_preset(m, duration=62.0), zvnav.NoiseModel(seed=500 + i))[0]
        for i, m in enumerate(zvnav.CLASS_NAMES)
    }
    test_streams = {
        m: zvnav.simulate(zvnav.gait_preset(m, duration=62.0), zvnav.NoiseModel(seed=600 + i))[0]
        for i, m in enumerate(zvnav.CLASS_NAMES)
    }
    return train_streams, test_streams


def class_windows(streams, norm, per_class, stride):
    xs, ys = [], []
    for name, stream in streams.items():
        w = build_windows(stream, 125, stride=stride, norm=norm)[:per_class]
        xs.append(w)
        ys.append(np.full(w.shape[0], zvnav.CLASS_IDS[name]))
    return np.vstack(xs), np.concatenate(ys)


@pytest.fixture(scope="session")
def six_class_model(six_class_streams):
    train_streams, test_streams = six_class_streams
    norm = NormStats.from_streams(list(train_streams.values()))
    x_train, y_train = class_windows(train_streams, norm, per_class=300, stride=24)
    x_test, y_test = class_windows(test_streams, norm, per_class=300, stride=24)
    model = train(x_train, y_train, norm_stats=norm)
    return {"model": model, "x_test": x_test, "y_test": y_test}
