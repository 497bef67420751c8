import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from lbopt.acquisition import expected_improvement, initial_design, propose_next
from lbopt.space import Continuous, SearchSpace


class TestExpectedImprovement:
    def test_at_incumbent(self):
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(norm.pdf(0.0), abs=1e-5)
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(0.39894, abs=1e-4)

    def test_numeric_integration_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            mu, sigma, best = rng.normal(), rng.uniform(0.2, 2), rng.normal()
            val, _ = quad(lambda f: max(f - best, 0.0) * norm.pdf(f, mu, sigma),
                          mu - 10 * sigma, mu + 10 * sigma, limit=200)
            assert expected_improvement(mu, sigma, best) == pytest.approx(val, abs=1e-8)

    def test_degenerate_sigma(self):
        assert expected_improvement(1.0, 0.0, 2.0) == 0.0
        assert expected_improvement(3.0, 0.0, 2.0) == 1.0

    def test_increasing_in_sigma(self):
        vals = [expected_improvement(0.0, s, 1.0) for s in (0.1, 0.5, 1.0, 2.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_nonnegative_and_continuous_at_zero(self):
        rng = np.random.default_rng(1)
        mu, best = rng.normal(size=2)
        assert np.all(expected_improvement(rng.normal(size=50),
                                           rng.uniform(0, 2, 50), 0.3) >= 0)
        assert expected_improvement(mu, 1e-12, best) == pytest.approx(
            max(mu - best, 0.0), abs=1e-9)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            expected_improvement(0.0, -1.0, 0.0)


@pytest.fixture
def square():
    return SearchSpace([Continuous("a", 0, 1), Continuous("b", 0, 1)])


def peaked_predict(x0):
    def predict(enc):
        d = np.linalg.norm(enc - x0, axis=1)
        return -d, np.zeros(len(enc))
    return predict


class TestProposeNext:
    def test_zero_variance_picks_mean_peak(self, square):
        x0 = np.array([0.25, 0.7])
        p = propose_next(peaked_predict(x0), square, best=-10.0,
                         archive_enc=None, rng=np.random.default_rng(0),
                         n_candidates=2000)
        assert np.linalg.norm(square.encode(p) - x0) < 0.1

    def test_deterministic(self, square):
        args = dict(predict=peaked_predict(np.array([0.5, 0.5])), space=square,
                    best=-1.0, archive_enc=None, n_candidates=500)
        a = propose_next(rng=np.random.default_rng(7), **args)
        b = propose_next(rng=np.random.default_rng(7), **args)
        assert a == b

    def test_duplicate_guard_redraws(self, square):
        x0 = np.array([0.5, 0.5])
        rng = np.random.default_rng(3)
        first = propose_next(peaked_predict(x0), square, -1.0, None, rng, n_candidates=200)
        archive = square.encode_many([first])
        second = propose_next(peaked_predict(x0), square, -1.0, archive,
                              np.random.default_rng(3), n_candidates=200)
        assert second != first

    def test_jittered_incumbent_in_pool(self, square):
        # exact zero-variance incumbent neighborhood should be searched closely
        inc = square.encode((0.5, 0.5))
        p = propose_next(peaked_predict(inc), square, -10.0, None,
                         np.random.default_rng(1), incumbent_enc=inc,
                         n_candidates=2000, jitter=0.01)
        assert np.linalg.norm(square.encode(p) - inc) < 0.05

    def test_sense_normalization(self, square):
        # minimizing f equals maximizing -f: identical proposals
        rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
        x0 = np.array([0.3, 0.3])

        def pred_max(enc):
            return -np.linalg.norm(enc - x0, axis=1), np.full(len(enc), 0.01)

        a = propose_next(pred_max, square, best=-0.5, archive_enc=None,
                         rng=rng_a, n_candidates=500)
        b = propose_next(pred_max, square, best=-0.5, archive_enc=None,
                         rng=rng_b, n_candidates=500)
        assert a == b


def test_initial_design(square):
    pts = initial_design(square, 5, np.random.default_rng(0))
    assert len(pts) == 5
    for p in pts:
        square.validate(p)
    again = initial_design(square, 5, np.random.default_rng(0))
    assert pts == again
