import math

import numpy as np
import pytest

from vlir.core import (CapacityError, FiniteDistribution, InvalidInputError, SubDistribution,
                       check_feasible, compact, entropy)
from vlir.quantities import (QuantityReport, cross_entropy, max_cross_entropy,
                             min_restricted_entropy, rate_sequence, second_order_curve,
                             spectral_sup_quantile)
from vlir.sources import SourceModel, block_spectrum


def spec(*pairs, K=2):
    return compact([v for v, _ in pairs], [c for _, c in pairs], K)


def test_max_cross_entropy_examples():
    assert max_cross_entropy(spec((1.0, 1)), 0.5).value == pytest.approx(1.0, abs=1e-15)
    assert max_cross_entropy(spec((0.5, 2)), 0.25).value == pytest.approx(1.5, abs=1e-12)
    assert max_cross_entropy(spec((0.1, 1), (0.3, 1), (0.6, 1)), 0.2).value == math.inf
    s = spec((0.2, 1), (0.3, 1), (0.5, 1))
    assert max_cross_entropy(s, 0.0).value == pytest.approx(entropy(s), abs=1e-15)


def test_max_cross_entropy_boundary_is_infinite():
    # an atom of mass exactly delta can be driven to zero
    assert max_cross_entropy(spec((0.25, 4)), 0.25).value == math.inf


def test_max_cross_entropy_witness_is_feasible():
    d = FiniteDistribution([0.5, 0.3, 0.2], ["a", "b", "c"])
    rep = max_cross_entropy(d, 0.1)
    assert check_feasible(rep.witness, 0.1)
    assert rep.witness.q.tolist() == pytest.approx([0.5, 0.3, 0.1])
    assert cross_entropy(d, rep.witness) == pytest.approx(rep.value, abs=1e-12)
    assert rep.to_json()["method"] == "closed-form"


def test_max_cross_entropy_bad_delta():
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(InvalidInputError):
            max_cross_entropy(spec((0.5, 2)), bad)


def test_cross_entropy_examples():
    p = FiniteDistribution([0.5, 0.5], ["a", "b"])
    assert cross_entropy(p, SubDistribution(p, p.probs, 0)) == pytest.approx(1.0)
    assert cross_entropy(p, SubDistribution(p, [0.25, 0.5], 0.25)) == pytest.approx(1.5)
    assert cross_entropy(p, SubDistribution(p, [0.5, 0.25], 0.25)) == pytest.approx(1.5)
    other = FiniteDistribution([0.5, 0.5], ["x", "y"])
    with pytest.raises(InvalidInputError):
        cross_entropy(other, SubDistribution(p, p.probs, 0))


@pytest.mark.parametrize("mode", ["exact", "greedy"])
def test_min_restricted_entropy_examples(mode):
    assert min_restricted_entropy(spec((0.5, 2)), 0.0, mode).value == pytest.approx(1.0)
    assert min_restricted_entropy(spec((0.5, 2)), 0.5, mode).value == pytest.approx(0.0, abs=1e-15)


def test_min_restricted_entropy_exact_vs_greedy():
    s = spec((0.25, 2), (0.5, 1))
    exact = min_restricted_entropy(s, 0.25)
    assert exact.value == pytest.approx(0.6887218755408672, abs=1e-12)
    assert exact.method == "brute-force"
    assert exact.witness["mass"] == pytest.approx(0.75)
    # greedy drops a 0.25 atom too, so it agrees here
    assert min_restricted_entropy(s, 0.25, "greedy").value >= exact.value - 1e-12


def test_min_restricted_entropy_delta_zero_is_entropy():
    s = block_spectrum(SourceModel.bernoulli(0.25), 20)
    assert min_restricted_entropy(s, 0.0).value == pytest.approx(entropy(s), abs=1e-12)


def test_min_restricted_entropy_capacity():
    s = block_spectrum(SourceModel.bernoulli(0.25), 20)
    with pytest.raises(CapacityError, match="greedy"):
        min_restricted_entropy(s, 0.3)
    assert min_restricted_entropy(s, 0.3, "greedy").value > 0


def test_min_restricted_entropy_bad_mode():
    with pytest.raises(InvalidInputError):
        min_restricted_entropy(spec((0.5, 2)), 0.1, "fast")


def test_spectral_sup_quantile_examples():
    assert spectral_sup_quantile(spec((0.25, 4)), 0.5) == pytest.approx(2.0)
    s = spec((0.25, 2), (0.5, 1))
    assert spectral_sup_quantile(s, 0.5) == pytest.approx(2.0)
    assert spectral_sup_quantile(s, 0.4) == pytest.approx(1.0)


def test_rate_sequence_examples():
    src = SourceModel.bernoulli(0.3)
    rows = rate_sequence(src, 0.0, 0.0, [1, 2, 5])
    for n, v in rows:
        assert v == pytest.approx(entropy(block_spectrum(src, n)) / n, abs=1e-12)
    fair = SourceModel.bernoulli(0.5)
    assert [v for _, v in rate_sequence(fair, 0.1, 0.0, [1, 2, 3], "h_quantile")] == \
        pytest.approx([1.0, 1.0, 1.0])
    assert rate_sequence(SourceModel.bernoulli(0.25), 0.2, 0.1, [2])[0][1] == math.inf
    with pytest.raises(InvalidInputError):
        rate_sequence(src, 0.1, 0.0, [1], "bogus")


def test_second_order_examples():
    src = SourceModel.bernoulli(0.3)
    g = max_cross_entropy(block_spectrum(src, 4), 0.005).value
    rows = second_order_curve(src, 0.005, 0.0, g / 4, [4])
    assert rows[0][1] == pytest.approx(0.0, abs=1e-12)
    one = SourceModel.iid({"0": 1.0})
    assert second_order_curve(one, 0.25, 0.25, 0.0, [1]) == [(1, pytest.approx(1.0))]
    assert second_order_curve(SourceModel.bernoulli(0.25), 0.3, 0.0, 0.5, [2])[0][1] == math.inf
    with pytest.raises(InvalidInputError):
        second_order_curve(src, 0.005, 0.0, math.inf, [4])


def test_report_rejects_nan():
    with pytest.raises(InvalidInputError):
        QuantityReport(float("nan"), "closed-form")
