import numpy as np
import pytest

from vlir.core import FiniteDistribution, InvalidInputError
from vlir.mappings import (VariableLengthMap, avg_distance_by_mixture, avg_variational_distance,
                           class_conditional, evaluate, length_classes, mean_length,
                           metrics_csv, per_class_sup_distance)


def vmap(assign, K=2):
    return VariableLengthMap.from_assignment(assign, K)


AB = FiniteDistribution([0.75, 0.25], ["a", "b"])
UNI4 = FiniteDistribution([0.25] * 4, list("abcd"))


def test_all_to_null_string():
    phi = vmap({a: (0, 0) for a in "abcd"})
    classes = length_classes(phi, UNI4)
    assert [(c.m, c.mass) for c in classes] == [(0, 1.0)]
    assert mean_length(phi, UNI4) == 0.0
    assert avg_variational_distance(phi, UNI4) == 0.0
    assert per_class_sup_distance(phi, UNI4) == 0.0


def test_uniform_onto_length_two():
    phi = vmap({a: (2, i) for i, a in enumerate("abcd")})
    (cls,) = length_classes(phi, UNI4)
    assert cls.m == 2 and cls.mass == 1.0 and cls.n_used == 4
    assert cls.used_strings == {0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25}
    assert avg_variational_distance(phi, UNI4) == 0.0


def test_two_lengths():
    phi = vmap({"a": (1, 0), "b": (2, 0)})
    assert [(c.m, c.mass) for c in length_classes(phi, AB)] == [(1, 0.75), (2, 0.25)]
    phi3 = vmap({"a": (1, 0), "b": (3, 0)})
    assert mean_length(phi3, AB) == pytest.approx(1.5)


def test_distances():
    distinct = vmap({"a": (1, 0), "b": (1, 1)})
    assert mean_length(distinct, AB) == 1.0
    assert avg_variational_distance(distinct, AB) == pytest.approx(0.25)
    assert per_class_sup_distance(distinct, AB) == pytest.approx(0.25)
    half = FiniteDistribution([0.5, 0.5], ["a", "b"])
    same = vmap({"a": (1, 0), "b": (1, 0)})
    assert avg_variational_distance(same, half) == pytest.approx(0.5)


def test_sup_distance_over_classes():
    d = FiniteDistribution([0.25, 0.25, 0.5], ["a", "b", "c"])
    phi = vmap({"a": (1, 0), "b": (1, 1), "c": (2, 3)})
    assert per_class_sup_distance(phi, d) == pytest.approx(0.75)
    assert avg_variational_distance(phi, d) <= per_class_sup_distance(phi, d)


def test_class_conditional():
    d = FiniteDistribution([0.6, 0.2, 0.2], ["a", "b", "c"])
    phi = vmap({"a": (1, 0), "b": (2, 0), "c": (2, 1)})
    cond = class_conditional(phi, d, 2)
    assert cond.as_dict() == pytest.approx({"b": 0.5, "c": 0.5})
    single = vmap({"a": (1, 0), "b": (1, 1), "c": (1, 1)})
    assert class_conditional(single, d, 1).as_dict() == pytest.approx(d.as_dict())
    with pytest.raises(InvalidInputError):
        class_conditional(phi, d, 3)


def test_uncovered_atom():
    with pytest.raises(InvalidInputError, match="not covered"):
        length_classes(vmap({"a": (1, 0)}), AB)


def test_index_bounds():
    with pytest.raises(InvalidInputError):
        vmap({"a": (0, 1)})
    with pytest.raises(InvalidInputError):
        vmap({"a": (2, 4)})
    vmap({"a": (2, 3)})
    with pytest.raises(InvalidInputError):
        vmap({"a": (-1, 0)})


def test_huge_lengths():
    # length 200 strings: indices beyond 64 bits, K^-m underflows gracefully
    d = FiniteDistribution([0.5, 0.5], ["a", "b"])
    phi = vmap({"a": (200, 2**199), "b": (200, 0)})
    assert avg_variational_distance(phi, d) == pytest.approx(1.0, abs=1e-12)
    assert avg_distance_by_mixture(phi, d) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        vmap({"a": (200, 2**200)})


def test_routes_agree_large_map():
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(500))
    d = FiniteDistribution(p)
    lengths = rng.integers(0, 8, size=500)
    idx = [int(rng.integers(0, 2**int(m))) for m in lengths]
    phi = VariableLengthMap(d.atoms, lengths, idx)
    assert abs(avg_variational_distance(phi, d) - avg_distance_by_mixture(phi, d)) <= 1e-12
    mm = evaluate(phi, d)
    assert mm.mean_length == pytest.approx(mean_length(phi, d), abs=1e-12)


def test_relabeling_within_class_is_invariant():
    d = FiniteDistribution([0.4, 0.3, 0.2, 0.1], list("abcd"))
    a = vmap({"a": (2, 0), "b": (2, 1), "c": (2, 1), "d": (1, 0)})
    b = vmap({"a": (2, 3), "b": (2, 0), "c": (2, 0), "d": (1, 1)})
    assert evaluate(a, d) == evaluate(b, d)


def test_map_order_independent_of_dist_order():
    d = FiniteDistribution([0.4, 0.6], ["a", "b"])
    phi = vmap({"b": (1, 0), "a": (1, 1)})
    assert avg_variational_distance(phi, d) == pytest.approx(0.1)


def test_json_roundtrip_and_csv():
    phi = vmap({"a": (1, 0), "b": (3, 5)})
    data = phi.to_json()
    assert data == {"K": 2, "assign": {"a": [1, 0], "b": [3, 5]}}
    assert VariableLengthMap.from_json(data).assignment == phi.assignment
    with pytest.raises(InvalidInputError):
        VariableLengthMap.from_json({"assign": {}})
    text = metrics_csv([("m1", 1, evaluate(phi, AB))])
    assert text.splitlines()[0] == "map_id,n,mean_length,d_bar,sup_class_distance"
    assert text.splitlines()[1].startswith("m1,1,1.5,")


def test_k_mismatch():
    with pytest.raises(InvalidInputError):
        length_classes(vmap({"a": (1, 0), "b": (1, 1)}, K=3), AB)
