import numpy as np
import pytest

from implicit_sindy.benchmarks import (
    GLYCOLYSIS_DEFAULTS,
    IC_RANGES,
    extract_parameters,
    make_benchmark,
    sample_ics,
)
from implicit_sindy.errors import MissingParameter, UnknownBenchmark


def test_defaults():
    reg = make_benchmark("regulatory").param_labels
    assert reg == {"a1": 0.004, "a2": 0.07, "a3": 0.04, "b1": 0.82, "b2": 1854.5}
    gly = make_benchmark("glycolysis").param_labels
    assert len(gly) == 26
    assert gly["c1"] == 2.5 and gly["c2"] == -100 and gly["c3"] == 13.6769 and gly["j3"] == -100
    assert make_benchmark("michaelis_menten").param_labels == {"jx": 0.6, "Vmax": 1.5, "Km": 0.3}


def test_errors():
    with pytest.raises(UnknownBenchmark):
        make_benchmark("lorenz")
    params = dict(GLYCOLYSIS_DEFAULTS)
    del params["h5"]
    with pytest.raises(MissingParameter):
        make_benchmark("glycolysis", params)


@pytest.mark.parametrize("name", ["michaelis_menten", "regulatory", "glycolysis"])
def test_parameter_extraction_round_trip(name):
    model = make_benchmark(name)
    states = [s.normalized() for s in model.rhs]
    got = extract_parameters(name, states)
    for key, val in model.param_labels.items():
        assert got[key] == pytest.approx(val, rel=1e-12), key


def test_perturbed_parameters_round_trip():
    rng = np.random.default_rng(3)
    base = make_benchmark("glycolysis").param_labels
    params = {k: v * rng.uniform(0.8, 1.2) for k, v in base.items()}
    model = make_benchmark("glycolysis", params)
    got = extract_parameters("glycolysis", [s.normalized() for s in model.rhs])
    for key, val in params.items():
        assert got[key] == pytest.approx(val, rel=1e-10), key


def test_missing_terms_are_nan():
    got = extract_parameters("regulatory", [None, None])
    assert all(np.isnan(v) for v in got.values())


def test_term_counts():
    reg = make_benchmark("regulatory")
    assert (len(reg.rhs[1].numerator), len(reg.rhs[1].denominator)) == (4, 6)
    gly = make_benchmark("glycolysis")
    assert (len(gly.rhs[1].numerator), len(gly.rhs[1].denominator)) == (5, 2)
    mm = make_benchmark("michaelis_menten")
    assert (len(mm.rhs[0].numerator), len(mm.rhs[0].denominator)) == (2, 2)


@pytest.mark.parametrize("name", ["michaelis_menten", "regulatory", "glycolysis"])
def test_sample_ics_in_range_and_seeded(name):
    lo, hi = (np.asarray(v) for v in IC_RANGES[name])
    a = sample_ics(name, 20, seed=4)
    assert np.array_equal(a, sample_ics(name, 20, seed=4))
    assert np.all(a >= lo) and np.all(a <= hi)
    assert a.shape == (20, len(lo))


def test_mm_explicit_ics_first():
    assert sample_ics("michaelis_menten", 2).ravel().tolist() == [0.5, 1.0]
