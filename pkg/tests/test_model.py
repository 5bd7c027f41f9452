import json
import math

import numpy as np
import pytest

from daviesgap.errors import (
    DegenerateSpectrum,
    EmptyCouplings,
    MalformedDocument,
    MissingBathFrequency,
    NonHermitianCoupling,
    UnknownBathKind,
)
from daviesgap.model import BathModel, bath_g, gibbs, load_system
from daviesgap.systems import make_counterexample

from conftest import random_document, random_spec


def minimal_document():
    return {
        "energies": [0.0, 1.0],
        "couplings": [{"re": [[0.0, 1.0], [1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}],
        "beta": 1.0,
        "bath": {"kind": "glauber", "params": {}},
    }


class TestLoadSystem:
    def test_minimal_two_level(self):
        spec = load_system(minimal_document())
        assert spec.dim == 2
        assert spec.n_couplings == 1
        assert spec.beta == 1.0

    def test_accepts_json_text(self):
        spec = load_system(json.dumps(minimal_document()))
        assert spec.dim == 2

    def test_degenerate_spectrum(self):
        doc = minimal_document()
        doc["energies"] = [0.0, 0.0, 1.0]
        doc["couplings"] = [{"re": np.eye(3).tolist(), "im": np.zeros((3, 3)).tolist()}]
        doc["couplings"][0]["re"][0][1] = doc["couplings"][0]["re"][1][0] = 1.0
        with pytest.raises(DegenerateSpectrum):
            load_system(doc)

    def test_counterexample_document(self):
        # energies 1..4, all coupling entries gamma / sqrt(N) = gamma / 2
        gamma = 1.3
        spec = make_counterexample(4, gamma)
        assert np.allclose(spec.energies, [1.0, 2.0, 3.0, 4.0])
        assert np.allclose(spec.couplings[0], gamma / 2.0)

    def test_not_ascending(self):
        doc = minimal_document()
        doc["energies"] = [1.0, 0.0]
        with pytest.raises(MalformedDocument):
            load_system(doc)

    def test_non_hermitian(self):
        doc = minimal_document()
        doc["couplings"][0]["im"] = [[0.0, 1.0], [1.0, 0.0]]  # breaks S = S^dag
        with pytest.raises(NonHermitianCoupling):
            load_system(doc)

    def test_empty_couplings(self):
        doc = minimal_document()
        doc["couplings"] = []
        with pytest.raises(EmptyCouplings):
            load_system(doc)

    def test_all_diagonal_couplings(self):
        doc = minimal_document()
        doc["couplings"] = [
            {"re": [[1.0, 0.0], [0.0, -1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
        ]
        with pytest.raises(EmptyCouplings):
            load_system(doc)

    def test_malformed_cases(self):
        with pytest.raises(MalformedDocument):
            load_system("{broken")
        with pytest.raises(MalformedDocument):
            load_system({"energies": [0, 1]})
        doc = minimal_document()
        doc["beta"] = -2.0
        with pytest.raises(MalformedDocument):
            load_system(doc)
        doc = minimal_document()
        doc["couplings"][0]["re"] = [[0.0, 1.0]]
        with pytest.raises(MalformedDocument):
            load_system(doc)

    def test_unknown_bath(self):
        doc = minimal_document()
        doc["bath"] = {"kind": "ohmic", "params": {}}
        with pytest.raises(UnknownBathKind):
            load_system(doc)

    def test_document_round_trip(self, rng):
        spec = random_spec(rng, 5, 0.7)
        again = load_system(spec.to_document())
        assert np.allclose(again.energies, spec.energies)
        assert np.allclose(again.couplings, spec.couplings)


class TestBath:
    def test_glauber_values(self):
        bath = BathModel("glauber")
        assert bath_g(bath, 0.0, 7.3) == 0.5
        assert bath_g(bath, 123.4, 0.0) == 0.5
        # 1/(1 + e^{ln 3}) = 1/4, checked against direct high-precision arithmetic
        assert abs(bath_g(bath, 1.0, math.log(3.0)) - 0.25) < 1e-15

    def test_glauber_overflow_safe(self):
        bath = BathModel("glauber")
        # no overflow on either side; graceful subnormal underflow far out
        assert bath_g(bath, 700.0, 1.0) > 0.0
        assert bath_g(bath, -1e6, 1.0) == pytest.approx(1.0)
        assert bath_g(bath, 1e6, 1.0) == 0.0

    def test_kms_relation(self, rng):
        # G(w) = exp(-beta w) G(-w) at 100 random frequencies
        bath = BathModel("glauber")
        beta = 0.9
        for omega in rng.uniform(-5.0, 5.0, 100):
            lhs = bath_g(bath, float(omega), beta)
            rhs = math.exp(-beta * omega) * bath_g(bath, float(-omega), beta)
            assert abs(lhs - rhs) <= 1e-12 * max(lhs, rhs)

    def test_custom_tabulated(self):
        bath = BathModel("custom-tabulated", {"-1.0": 0.8, "0.0": 0.5, "1.0": 0.2})
        assert bath_g(bath, 1.0, 0.0) == 0.2
        assert bath_g(bath, 1.0 + 1e-12, 0.0) == 0.2
        with pytest.raises(MissingBathFrequency):
            bath_g(bath, 0.5, 0.0)

    def test_custom_positivity_checked_at_load(self):
        doc = minimal_document()
        doc["bath"] = {"kind": "custom-tabulated",
                       "params": {"-1.0": 0.8, "0.0": 0.0, "1.0": 0.2}}
        with pytest.raises(MalformedDocument):
            load_system(doc)


class TestGibbs:
    def test_infinite_temperature_uniform(self):
        doc = random_document(np.random.default_rng(0), 5, 0.0)
        w = gibbs(load_system(doc))
        assert np.allclose(w.sigma, 0.2, atol=1e-14)

    def test_two_level_log2(self):
        doc = minimal_document()
        doc["beta"] = math.log(2.0)
        w = gibbs(load_system(doc))
        # direct normalization: (1, 1/2) / (3/2)
        assert np.allclose(w.sigma, [2.0 / 3.0, 1.0 / 3.0], atol=1e-15)

    def test_counterexample_uniform(self):
        w = gibbs(make_counterexample(7, 1.0, beta=0.0))
        assert np.allclose(w.sigma, 1.0 / 7.0, atol=1e-15)

    def test_normalization_and_min(self, rng):
        for _ in range(10):
            w = gibbs(random_spec(rng, int(rng.integers(2, 9)), float(rng.uniform(0, 3))))
            assert abs(w.sigma.sum() - 1.0) <= 1e-14
            assert w.sigma_min == w.sigma.min()
            assert w.sigma_min * w.sigma.size <= 1.0 + 1e-15

    def test_shift_invariance(self, rng):
        doc = random_document(rng, 6, 1.1)
        w1 = gibbs(load_system(doc))
        doc["energies"] = [e + 17.5 for e in doc["energies"]]
        w2 = gibbs(load_system(doc))
        assert np.allclose(w1.sigma, w2.sigma, rtol=1e-12)

    def test_pair_accessor(self, rng):
        w = gibbs(random_spec(rng, 4, 0.8))
        for a in range(4):
            for b in range(4):
                assert w.pair(a, b) == math.sqrt(w.sigma[a] * w.sigma[b])
        assert np.allclose(w.pair_matrix()[2, 3], w.pair(2, 3))
