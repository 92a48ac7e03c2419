import math

import numpy as np
import pytest

from vlir.core import (FiniteDistribution, InvalidInputError, Spectrum, SubDistribution,
                       check_feasible, compact, entropy, self_information, shrink_q,
                       spectrum_of, variational_distance)


def test_self_information_values():
    assert self_information(FiniteDistribution([1.0], ["a"]), "a") == 0.0
    d = FiniteDistribution([0.25, 0.75], ["a", "b"])
    assert self_information(d, "a") == pytest.approx(2.0, abs=1e-15)
    d = FiniteDistribution([0.1, 0.9], ["a", "b"])
    assert self_information(d, "a") == pytest.approx(math.log2(10), abs=1e-12)


def test_self_information_unknown_atom():
    with pytest.raises(InvalidInputError):
        self_information(FiniteDistribution([1.0], ["a"]), "zz")


@pytest.mark.parametrize("p,h", [([1.0], 0.0), ([0.5, 0.5], 1.0), ([0.25] * 4, 2.0)])
def test_entropy(p, h):
    assert entropy(FiniteDistribution(p)) == pytest.approx(h, abs=1e-15)


def test_entropy_base_three():
    assert entropy(FiniteDistribution([1 / 3] * 3, K=3)) == pytest.approx(1.0, abs=1e-12)


def test_variational_distance():
    d = FiniteDistribution([0.5, 0.5])
    assert variational_distance(d, d) == 0.0
    assert variational_distance([1, 0], [0, 1]) == 1.0
    assert variational_distance([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.25)
    # dicts are aligned by key, missing keys count as zero
    assert variational_distance({"a": 1.0}, {"b": 1.0}) == 1.0


def test_spectrum_of():
    s = spectrum_of(FiniteDistribution([0.5, 0.5]))
    assert s.entries() == [(0.5, 2)]
    s = spectrum_of(FiniteDistribution([0.5, 0.25, 0.25]))
    assert s.entries() == [(0.25, 2), (0.5, 1)]
    s = spectrum_of(FiniteDistribution([0.2, 0.3, 0.5]))
    assert s.entries() == [(0.2, 1), (0.3, 1), (0.5, 1)]
    assert s.p_min == 0.2
    assert s.support_size == 3
    assert s.total_mass == pytest.approx(1.0)


def test_compact_merges_ulp_neighbours():
    x = 0.1 * 0.3
    y = 0.3 * 0.1 * (1 + 2e-16)
    s = compact([x, y, 0.97 - 0.0], None)
    assert s.counts[0] == 2


def test_spectrum_validation():
    with pytest.raises(InvalidInputError):
        Spectrum(np.array([0.5, 0.4]), (1, 1))


def test_distribution_validation():
    with pytest.raises(InvalidInputError):
        FiniteDistribution([0.5, 0.6])
    with pytest.raises(InvalidInputError):
        FiniteDistribution([0.5, 0.5], ["a", "a"])
    with pytest.raises(InvalidInputError):
        FiniteDistribution([1.0], K=1)
    with pytest.raises(InvalidInputError):
        FiniteDistribution([1.5, -0.5])


def test_zero_atoms_dropped():
    d = FiniteDistribution([0.5, 0.0, 0.5], ["a", "b", "c"])
    assert list(d.atoms) == ["a", "c"]


def test_json_roundtrip():
    d = FiniteDistribution([0.7, 0.3], ["x", "y"], K=3)
    e = FiniteDistribution.from_json(d.to_json())
    assert e.as_dict() == d.as_dict() and e.K == 3
    with pytest.raises(InvalidInputError):
        FiniteDistribution.from_json({"atoms": {"a": 1.0}})


def test_caller_array_not_frozen():
    p = np.array([0.5, 0.5])
    FiniteDistribution(p)
    p[0] = 0.4  # still writable


def test_check_feasible():
    p = FiniteDistribution([0.5, 0.5], ["a", "b"])
    assert check_feasible(SubDistribution(p, p.probs, 0.0), 0.0)
    assert check_feasible(SubDistribution(p, [0.5, 0.25], 0.25), 0.25)
    assert not check_feasible(SubDistribution(p, [0.6, 0.15], 0.25), 0.25)
    assert not check_feasible(SubDistribution(p, [0.5, 0.0], 0.5), 0.5)
    assert not check_feasible(SubDistribution(p, [0.5, 0.25], 0.25), 0.3)


def test_shrink_q():
    p = FiniteDistribution([0.5, 0.5], ["a", "b"])
    q = shrink_q(p, {})
    assert np.array_equal(q.q, p.probs) and q.deficiency == 0.0
    q = shrink_q(p, {"a": 0.25})
    assert q.q.tolist() == [0.25, 0.5] and q.deficiency == 0.25
    with pytest.raises(InvalidInputError):
        shrink_q(p, {"a": 0.5})
    with pytest.raises(InvalidInputError):
        shrink_q(p, {"a": -0.1})
