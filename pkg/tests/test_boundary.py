import math

import numpy as np
import pytest

from kgcavity import boundary
from kgcavity.boundary import (CharacteristicMaps, RejectedMotion,
                               make_motion, validate_motion,
                               sinusoidal_profile)

from conftest import random_validated_motions


def test_constant_profile_accepted():
    m = make_motion({"profile": "constant", "alpha": 1.0, "period": 1.0})
    assert m.a_min == pytest.approx(1.0, abs=1e-12)
    assert m.a_max == pytest.approx(1.0, abs=1e-12)


def test_sinusoidal_accepted_with_correct_velocity_bound():
    m = make_motion({"profile": "sinusoidal", "alpha": 1.0, "beta": 0.1,
                     "period": 1.0})
    assert m.da_max == pytest.approx(0.2 * math.pi, rel=1e-9)
    assert m.a_min == pytest.approx(0.9, rel=1e-9)
    assert m.a_max == pytest.approx(1.1, rel=1e-9)


def test_superluminal_rejected():
    with pytest.raises(RejectedMotion):
        make_motion({"profile": "sinusoidal", "alpha": 0.5, "beta": 0.4,
                     "period": 1.0})


def test_nonpositive_rejected():
    with pytest.raises(RejectedMotion):
        make_motion({"profile": "sinusoidal", "alpha": 0.1, "beta": 0.12,
                     "period": 1.0})
    with pytest.raises(RejectedMotion):
        make_motion({"profile": "constant", "alpha": 1.0, "period": -1.0})


def test_fourier_profile_extrema_refined():
    # high harmonic: extrema fall between coarse samples unless refined
    m = make_motion({"profile": "fourier", "mean": 1.0, "cos": [],
                     "sin": [0.0, 0.0, 0.05], "period": 1.0})
    # a = 1 + 0.05 sin(6 pi t): sup|a'| = 0.3 pi
    assert m.da_max == pytest.approx(0.3 * math.pi, rel=1e-6)


def test_h_inverse_static_wall(static_maps):
    assert static_maps.h_inv(0.0) == pytest.approx(1.0, abs=1e-12)
    assert static_maps.k_inv(3.0) == pytest.approx(2.0, abs=1e-12)


def test_h_inverse_against_bisection_oracle(strong_maps):
    # bisection to 1e-14 as the independent oracle
    motion = strong_maps.motion

    def bisect(y):
        lo, hi = y + motion.a_min - 1e-6, y + motion.a_max + 1e-6
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if mid - float(motion.a(mid)) - y > 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    for y in [-0.7, 0.0, 0.3, 2.1, 5.9]:
        assert strong_maps.h_inv(y) == pytest.approx(bisect(y), abs=1e-10)


def test_inverse_residual_contract(strong_maps):
    y = np.linspace(-5, 25, 4001)
    t = strong_maps.h_inv(y)
    res = np.abs(t - np.asarray(strong_maps.motion.a(t)) - y)
    assert np.all(res <= 1e-12 * (1 + np.abs(y)))
    t = strong_maps.k_inv(y)
    res = np.abs(t + np.asarray(strong_maps.motion.a(t)) - y)
    assert np.all(res <= 1e-12 * (1 + np.abs(y)))


def test_F_static_translation(static_maps):
    x = np.linspace(-3, 3, 101)
    assert np.allclose(static_maps.F(x), x + 2.0, atol=1e-12)
    assert np.allclose(static_maps.dF(x), 1.0, atol=1e-12)


def test_F_inverse_identity(strong_maps):
    rng = np.random.default_rng(11)
    x = rng.uniform(-5, 10, 1000)
    assert np.max(np.abs(strong_maps.F_inv(strong_maps.F(x)) - x)) <= 1e-10


def test_dF_finite_difference(strong_maps):
    h = 1e-6
    for x in [0.0, 0.37, 1.9, -0.8]:
        fd = (strong_maps.F(x + h) - strong_maps.F(x - h)) / (2 * h)
        assert abs(fd - strong_maps.dF(x)) / strong_maps.dF(x) <= 1e-6


def test_lift_property(strong_maps):
    rng = np.random.default_rng(5)
    x = rng.uniform(-10, 10, 1000)
    T = strong_maps.T
    assert np.max(np.abs(strong_maps.F(x + T) - strong_maps.F(x) - T)) <= 1e-10


def test_monotonicity_and_velocity_transfer(strong_maps):
    x = np.linspace(-2, 6, 5000)
    Fx = np.asarray(strong_maps.F(x))
    assert np.all(np.diff(Fx) > 0)
    d = np.asarray(strong_maps.dF(x))
    assert np.all(d > 0)
    assert np.all(d >= strong_maps.dF_min - 1e-12)
    assert np.all(d <= strong_maps.dF_max + 1e-12)


def test_step_identity(strong_maps):
    # eta - F^{-1}(eta) = 2 a(k^{-1}(eta)) within [2 a_min, 2 a_max]
    eta = np.linspace(-3, 9, 2000)
    step = eta - np.asarray(strong_maps.F_inv(eta))
    m = strong_maps.motion
    assert np.all(step >= 2 * m.a_min - 1e-10)
    assert np.all(step <= 2 * m.a_max + 1e-10)
    tk = strong_maps.k_inv(eta)
    assert np.allclose(step, 2 * np.asarray(m.a(tk)), atol=1e-10)


def test_random_motions_map_identities():
    rng = np.random.default_rng(42)
    for m in random_validated_motions(rng, 5):
        maps = CharacteristicMaps(m)
        x = rng.uniform(-3, 3, 200)
        assert np.max(np.abs(maps.F_inv(maps.F(x)) - x)) <= 1e-10
        assert np.max(np.abs(maps.F(x + m.period) - maps.F(x) - m.period)) <= 1e-10


def test_orbit_translation_matches_repeated_F(strong_maps):
    x0 = 0.123
    n = 50
    x = x0
    for _ in range(n):
        x = strong_maps.F(x)
    assert strong_maps.orbit_translation(x0, n) == pytest.approx(x - x0, abs=1e-9)
