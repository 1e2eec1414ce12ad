import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trilevel import LAMBDA, V, XI, Detunings, ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def xi_resonant(mu12=0.0, mu23=0.0, Na=1):
    """Xi at double resonance: Omega=1, levels (0, 1, 2)."""
    return ModelParams(1.0, 0.0, 1.0, 2.0, mu12=mu12, mu23=mu23, Na=Na)


def lambda_equal(mu13=0.0, mu23=0.0, Na=1):
    """Lambda at equal detuning (Delta31 = Delta32 = 0): levels (0, 0, 1)."""
    return ModelParams(1.0, 0.0, 0.0, 1.0, mu13=mu13, mu23=mu23, Na=Na)


def lambda_nonresonant(mu13=0.0, mu23=0.0, Na=1):
    """Lambda with Delta31 = 0.3, Delta32 = -0.2: levels (0, 0.5, 1.3)."""
    return ModelParams.from_detuning(
        LAMBDA, Detunings((0.3, -0.2)), Na=Na, mu13=mu13, mu23=mu23
    )


def v_equal(mu12=0.0, mu13=0.0, Na=1):
    """V at double resonance (equal detuning 0): levels (0, 1, 1)."""
    return ModelParams(1.0, 0.0, 1.0, 1.0, mu12=mu12, mu13=mu13, Na=Na)


def v_nonresonant(mu12=0.0, mu13=0.0, Na=1):
    """V with Delta21 = 0.2, Delta31 = 0.3: levels (0, 1.2, 1.3)."""
    return ModelParams.from_detuning(
        V, Detunings((0.2, 0.3)), Na=Na, mu12=mu12, mu13=mu13
    )


CONFIG_FACTORIES = {
    "xi": (XI, xi_resonant),
    "lambda": (LAMBDA, lambda_nonresonant),
    "v": (V, v_nonresonant),
}
