import numpy as np
import pytest

import pinforge as pf

# Frozen reference segment for the default coefficients on the standard
# layout: ten consecutive 6-digit PINs and their expected interval vectors
# (ms). Used by the dictionary regression tests and the acceptance suite.
REFERENCE_SEGMENT = {
    "504316": (232.9502, 232.9502, 237.2201, 231.3787, 237.2201, 226.0874),
    "504317": (232.9502, 232.9502, 237.2201, 231.3787, 231.3787, 268.5020),
    "504318": (232.9502, 232.9502, 237.2201, 231.3787, 237.2201, 256.9941),
    "504319": (232.9502, 232.9502, 237.2201, 231.3787, 250.0087, 247.2787),
    "504320": (232.9502, 232.9502, 237.2201, 199.0121, 203.7241, 244.2814),
    "504321": (232.9502, 232.9502, 237.2201, 199.0121, 199.0121, 254.0817),
    "504322": (232.9502, 232.9502, 237.2201, 199.0121, 135.9120, 232.9502),
    "504323": (232.9502, 232.9502, 237.2201, 199.0121, 199.0121, 203.7241),
    "504324": (232.9502, 232.9502, 237.2201, 199.0121, 214.2976, 259.6575),
    "504325": (232.9502, 232.9502, 237.2201, 199.0121, 199.0121, 243.2131),
}


@pytest.fixture(scope="session")
def layout():
    return pf.standard_numpad()


@pytest.fixture(scope="session")
def canonical_model():
    return pf.FittsModel(pf.DEFAULT_A, pf.DEFAULT_B)


@pytest.fixture(scope="session")
def dict2(canonical_model, layout):
    return pf.build_dictionary(canonical_model, layout, 2)


@pytest.fixture(scope="session")
def dict3(canonical_model, layout):
    return pf.build_dictionary(canonical_model, layout, 3)


@pytest.fixture(scope="session")
def dict4(canonical_model, layout):
    return pf.build_dictionary(canonical_model, layout, 4)


@pytest.fixture(scope="session")
def reference_segment():
    return {pin: np.array(vals) for pin, vals in REFERENCE_SEGMENT.items()}


def zero_noise_profile(seed=0):
    return pf.TypistProfile(speed_scale=1.0, noise_sd=0.0, quantization=0.0,
                            min_interval=1e-9, seed=seed)
