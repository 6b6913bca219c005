import numpy as np
import pytest

from implicit_sindy.benchmarks import make_benchmark, sample_ics
from implicit_sindy.dynamics import generate_dataset


@pytest.fixture(scope="session")
def mm_model():
    return make_benchmark("michaelis_menten")


@pytest.fixture(scope="session")
def mm_dataset(mm_model):
    return generate_dataset(mm_model, sample_ics("michaelis_menten", 2), np.linspace(0, 10, 1000))


@pytest.fixture(scope="session")
def regulatory_dataset():
    model = make_benchmark("regulatory")
    return generate_dataset(model, sample_ics("regulatory", 40), np.linspace(0, 10, 1000))


@pytest.fixture(scope="session")
def glycolysis_small():
    model = make_benchmark("glycolysis")
    ds = generate_dataset(model, sample_ics("glycolysis", 20), np.linspace(0, 0.5, 50))
    return ds.stacked_states, ds.stacked_derivs
