"""End-to-end smoke checks for the Python bindings."""

import math

import numpy as np
import pytest

import galien


def test_generation_is_deterministic():
    a = galien.generate(length=500, seed=11)
    b = galien.generate(length=500, seed=11)
    c = galien.generate(length=500, seed=12)
    assert len(a) == 500
    assert a == b
    assert a != c
    assert min(a) > 0.0


def test_generation_rejects_impossible_specs():
    with pytest.raises(galien.GalienError):
        galien.generate(length=100, base=100.0, daily=300.0)


def test_embedding_matches_numpy_slicing():
    window = np.arange(1.0, 8.0)
    image = galien.trajectory_matrix(window.tolist(), tau=2, m=3)
    assert image.shape == (3, 3)
    for j in range(3):
        for i in range(3):
            assert image[j, i] == window[i + j * 2]


def test_patches_equal_the_embedding_under_the_equivalence():
    rng = np.random.default_rng(7)
    window = rng.normal(size=40).tolist()
    patch_len, stride = galien.equivalence_params(40, tau=4, m=3)
    assert (patch_len, stride) == (32, 4)
    patches = galien.patch_matrix(window, patch_len=patch_len, stride=stride)
    image = galien.trajectory_matrix(window, tau=4, m=3)
    assert np.array_equal(patches, image)


def test_delay_estimate_finds_the_sine_quarter_period():
    # Period of 32*pi samples is irrational on the sample grid, so the orbit
    # never lands on the same phase twice and the histogram stays well behaved.
    series = [math.sin(i / 16.0) for i in range(2000)]
    tau = galien.estimate_delay(series, tau_max=50, bins=32)
    assert 20 <= tau <= 30


def test_dimension_estimate_unfolds_a_sine():
    series = [math.sin(i / 16.0) for i in range(2000)]
    m, converged, fractions = galien.estimate_dim(series, tau=25, m_max=6)
    assert converged
    assert m == 2
    assert len(fractions) >= 1


def test_metrics_match_their_fixtures():
    assert galien.mae(np.array([100.0, 200.0]), np.array([110.0, 190.0])) == 10.0
    assert galien.mape(np.array([100.0, 200.0]), np.array([110.0, 190.0])) == pytest.approx(
        0.075, abs=1e-15
    )
    with pytest.raises(galien.GalienError):
        galien.mape(np.array([0.0]), np.array([1.0]))


def test_training_and_prediction_round_trip():
    series = galien.generate(length=1500, seed=3)
    model = galien.train_forecaster(
        series,
        lookback=48,
        horizon=12,
        d_model=8,
        d_ff=16,
        e_layers=1,
        n_heads=2,
        epochs=2,
        batch_size=8,
        tau=4,
        m=2,
        train_stride=3,
        seed=2020,
    )
    assert model.lookback == 48
    assert model.horizon == 12
    assert model.tau == 4
    assert model.m == 2
    assert len(model.history) >= 1

    window = np.asarray(series[-48:])
    forecast = model.predict(window)
    assert forecast.shape == (12,)
    assert np.all(np.isfinite(forecast))

    again = model.predict(window)
    assert np.array_equal(forecast, again)

    with pytest.raises(galien.GalienError):
        model.predict(window[:10])
