import numpy as np
import pytest

from clairmap.fixtures import fixture_text, load_fixture
from clairmap.scenario import load_text


@pytest.fixture(scope="session")
def semi():
    return load_fixture("paper-semi-slant")


@pytest.fixture(scope="session")
def hemi():
    return load_fixture("paper-hemi-slant")


@pytest.fixture(scope="session")
def polar():
    return load_fixture("polar-plane")


@pytest.fixture(scope="session")
def euclid():
    return load_fixture("euclidean-identity")


@pytest.fixture(scope="session")
def curved_semi():
    """Semi-slant map whose target has a curved (y1, y2) block, so SFF != 0."""
    text = fixture_text("paper-semi-slant")
    old = 'metric.1.1 = "1"\nmetric.2.2 = "1"\nmetric.3.3 = "exp(2*y3)"'
    assert old in text
    text = text.replace(old, 'metric.1.1 = "exp(0.6*y2)"\nmetric.2.2 = "exp(0.6*y2)"\nmetric.3.3 = "exp(2*y3)"')
    return load_text(text.replace('potential = "0"\n', ""), name="curved-semi")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
