import numpy as np
import pytest

from kgcavity import boundary


@pytest.fixture(scope="session")
def static_maps():
    """Constant wall a = 1, T = 1."""
    m = boundary.make_motion({"profile": "constant", "alpha": 1.0, "period": 1.0})
    return boundary.CharacteristicMaps(m)


@pytest.fixture(scope="session")
def strong_maps():
    """sinusoidal(1, 0.1, 1): 2:1 resonance, strong attractor (mu = 0.228)."""
    m = boundary.make_motion({"profile": "sinusoidal", "alpha": 1.0,
                              "beta": 0.1, "period": 1.0})
    return boundary.CharacteristicMaps(m)


@pytest.fixture(scope="session")
def tuned_maps():
    """sinusoidal(0.5, 0.05, 1): 1:1 resonance, attractor at x = 0."""
    m = boundary.make_motion({"profile": "sinusoidal", "alpha": 0.5,
                              "beta": 0.05, "period": 1.0})
    return boundary.CharacteristicMaps(m)


def random_validated_motions(rng, count):
    """Sample sinusoidal/fourier motions that pass validation."""
    out = []
    while len(out) < count:
        T = float(rng.uniform(0.5, 2.0))
        alpha = float(rng.uniform(0.4, 1.5))
        # keep sup|a'| = 2 pi beta / T safely below 1 and inf a > 0
        beta = float(rng.uniform(0.02, 0.12)) * T
        if alpha - beta <= 0.05:
            continue
        try:
            m = boundary.make_motion({"profile": "sinusoidal", "alpha": alpha,
                                      "beta": beta, "period": T})
        except boundary.RejectedMotion:
            continue
        out.append(m)
    return out
