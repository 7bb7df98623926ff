import numpy as np
import pytest

from logic.checks import CORPUS, E1
from logic.config import Settings
from logic.family import build_family
from logic.germ import normalize_germ


@pytest.fixture(scope="session")
def fast_settings():
    """64 contour nodes keep the numerics exact on the corpus and the suite quick."""
    return Settings(nodes=64, seed=0)


@pytest.fixture(scope="session")
def e1_germ():
    return normalize_germ(CORPUS[E1])


@pytest.fixture(scope="session")
def e1_family(e1_germ, fast_settings):
    return build_family(e1_germ, fast_settings)


@pytest.fixture(scope="session")
def corpus_families(fast_settings):
    return {name: build_family(normalize_germ(terms), fast_settings) for name, terms in CORPUS.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def t_star():
    return np.array([0.002, 0, 0.001, 0], dtype=complex)
