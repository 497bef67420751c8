import numpy as np
import pytest

from lbopt.space import Categorical, Continuous, Integer, SearchSpace, SpaceError


@pytest.fixture
def mixed_space():
    return SearchSpace([
        Continuous("lr", 0.0, 10.0),
        Integer("depth", 1, 10),
        Categorical("model", ("A", "B", "C")),
    ])


def test_midpoint_scaling():
    sp = SearchSpace([Continuous("x", 0.0, 10.0)])
    assert sp.encode((5.0,)) == pytest.approx([0.5])


def test_one_hot():
    sp = SearchSpace([Categorical("m", ("A", "B", "C"))])
    assert list(sp.encode(("B",))) == [0.0, 1.0, 0.0]


def test_branin_corner():
    sp = SearchSpace([Continuous("x1", -5, 10), Continuous("x2", 0, 15)])
    assert list(sp.encode((-5.0, 15.0))) == [0.0, 1.0]


def test_width(mixed_space):
    assert mixed_space.width == 1 + 1 + 3


def test_out_of_bounds_names_dimension(mixed_space):
    with pytest.raises(SpaceError, match="depth"):
        mixed_space.encode((1.0, 99, "A"))
    with pytest.raises(SpaceError, match="model"):
        mixed_space.encode((1.0, 3, "D"))


def test_round_trip(mixed_space):
    rng = np.random.default_rng(0)
    for p in mixed_space.sample_uniform(50, rng):
        q = mixed_space.decode(mixed_space.encode(p))
        assert q[0] == pytest.approx(p[0])
        assert q[1] == p[1]
        assert q[2] == p[2]


def test_encoded_in_unit_cube(mixed_space):
    rng = np.random.default_rng(1)
    enc = mixed_space.encode_many(mixed_space.sample_uniform(100, rng))
    assert np.all(enc >= 0.0) and np.all(enc <= 1.0)


def test_sample_containment():
    sp = SearchSpace([Continuous("x1", -5, 10), Continuous("x2", 0, 15)])
    pts = sp.sample_uniform(5, np.random.default_rng(3))
    assert len(pts) == 5
    for x1, x2 in pts:
        assert -5 <= x1 <= 10 and 0 <= x2 <= 15


def test_sample_determinism(mixed_space):
    a = mixed_space.sample_uniform(10, np.random.default_rng(9))
    b = mixed_space.sample_uniform(10, np.random.default_rng(9))
    assert a == b


def test_sample_mean():
    sp = SearchSpace([Continuous("x", 0.0, 1.0)])
    pts = sp.sample_uniform(10_000, np.random.default_rng(5))
    assert np.mean([p[0] for p in pts]) == pytest.approx(0.5, abs=0.02)


def test_invalid_declarations():
    with pytest.raises(SpaceError):
        Continuous("x", 1.0, 1.0)
    with pytest.raises(SpaceError):
        Integer("n", 5, 5)
    with pytest.raises(SpaceError):
        Categorical("c", ("only",))
    with pytest.raises(SpaceError):
        SearchSpace([])


def test_dict_round_trip(mixed_space):
    p = (2.0, 3, "B")
    assert mixed_space.from_dict(mixed_space.as_dict(p)) == p
