"""Scalar quantities of a blocklength-``n`` law.

``max_cross_entropy``
    sup of ``E_P[log 1/Q]`` over sub-distributions ``Q <= P`` with ``Q > 0``
    and total mass ``1 - delta``.
``min_restricted_entropy``
    inf over atom sets ``A`` with ``P(A) >= 1 - delta`` of
    ``sum_{x in A} P(x) log(P(A) / P(x))``.
``spectral_sup_quantile``
    largest ``r`` with ``P[(1/n) log 1/P(X) <= r] <= eps``.

Infinite values are returned as ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Union

import numpy as np

from .core import (CapacityError, FiniteDistribution, InvalidInputError,
                   Spectrum, SubDistribution, entropy, spectrum_of)

#: Probability gap treated as zero when deciding whether the supremum is unbounded.
INF_BAND = 1e-12
#: Relative slack on the mass constraint ``P(A) >= 1 - delta`` (so ``delta = 0`` stays exact).
MASS_SLACK = 1e-12
#: Absolute slack when locating the step of the self-information distribution function.
STEP_SLACK = 1e-12
#: Maximum number of per-class removal patterns enumerated in exact mode.
SUBSET_BUDGET = 2**20

METHODS = ("closed-form", "brute-force", "greedy")


@dataclass(frozen=True)
class QuantityReport:
    """A computed quantity, how it was computed, and what achieves it."""

    value: float
    method: str
    witness: Any = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if math.isnan(self.value):
            raise InvalidInputError("quantity value is NaN")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_json(self) -> dict[str, Any]:
        w = self.witness
        if hasattr(w, "to_json"):
            w = w.to_json()
        return {"value": format_value(self.value), "method": self.method, "witness": w}


def format_value(x: float) -> Union[float, str]:
    """JSON/CSV form of an extended real: the float itself or ``"inf"``."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _check_delta(delta: float) -> None:
    if not 0 <= delta < 1:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta!r}")


def _as_spectrum(law: Union[Spectrum, FiniteDistribution]) -> Spectrum:
    return law if isinstance(law, Spectrum) else spectrum_of(law)


def cross_entropy(p: FiniteDistribution, q: SubDistribution) -> float:
    """``sum_x P(x) log_K(1 / Q(x))`` for a sub-distribution over ``p``'s atoms."""
    if q.base is not p and (len(q.base) != len(p) or list(q.base.atoms) != list(p.atoms)):
        raise InvalidInputError("sub-distribution is defined over different atoms")
    if np.any(q.q <= 0):
        raise InvalidInputError("sub-distribution must be positive on the support")
    terms = p.probs * -np.log(q.q)
    return math.fsum(terms.tolist()) / math.log(p.K)


def _reduction_gain(p: float, delta: float, K: int) -> float:
    # p * log_K(p / (p - delta)), accurate for small delta / p
    return -p * math.log1p(-delta / p) / math.log(K)


def max_cross_entropy(law: Union[Spectrum, FiniteDistribution], delta: float) -> QuantityReport:
    """Supremum of the cross-entropy over the deficiency-``delta`` class.

    The objective is convex in ``Q``, so over the (closure of the) feasible
    polytope it peaks at a vertex. If some atom has ``P(x) <= delta`` that
    atom can be driven to zero and the supremum is infinite. Otherwise every
    vertex removes ``delta`` from a single atom, and the gain
    ``p log(p / (p - delta))`` is largest for the smallest ``p``.

    With a distribution the witness is the optimal :class:`SubDistribution`
    (ties broken by atom order); with a spectrum it names the reduced value.
    """
    _check_delta(delta)
    K = law.K
    if isinstance(law, FiniteDistribution):
        i = int(np.argmin(law.probs))
        p_min = float(law.probs[i])
    else:
        p_min = law.p_min
    H = entropy(law)
    if delta == 0:
        witness = SubDistribution(law, law.probs, 0.0) if isinstance(law, FiniteDistribution) else None
        return QuantityReport(H, "closed-form", witness)
    if p_min <= delta + INF_BAND:
        return QuantityReport(math.inf, "closed-form", None)
    value = H + _reduction_gain(p_min, delta, K)
    if isinstance(law, FiniteDistribution):
        q = law.probs.copy()
        q[i] -= delta
        witness = SubDistribution(law, q, delta)
    else:
        witness = {"reduced_value": p_min, "removal": delta}
    return QuantityReport(value, "closed-form", witness)


def _restricted_value(removed_mass, removed_info, H: float, K: int):
    # A keeps mass 1 - removed_mass; value = P(A) log P(A) + sum_A P log 1/P
    kept = 1.0 - removed_mass
    with np.errstate(divide="ignore", invalid="ignore"):
        mlogm = np.where(kept > 0, kept * np.log(np.where(kept > 0, kept, 1.0)), 0.0)
    return H - removed_info + mlogm / math.log(K)


def min_restricted_entropy(law: Union[Spectrum, FiniteDistribution], delta: float,
                           mode: str = "exact") -> QuantityReport:
    """Infimum of the restricted entropy over atom sets of mass at least ``1 - delta``.

    Atoms of equal probability are interchangeable, so a candidate set is
    described by how many atoms it drops from each probability class.
    ``exact`` enumerates every such pattern whose dropped mass fits in
    ``delta``; ``greedy`` keeps dropping the smallest atoms while the mass
    constraint allows. The witness lists, per class, the number of atoms kept.
    """
    _check_delta(delta)
    if mode not in ("exact", "greedy"):
        raise InvalidInputError(f"mode must be 'exact' or 'greedy', got {mode!r}")
    spec = _as_spectrum(law)
    K = spec.K
    v = spec.values
    lnK = math.log(K)
    info = v * -np.log(v) / lnK
    H = entropy(spec)
    budget = delta * (1.0 + MASS_SLACK)
    limits = [min(c, int(math.floor(budget / x))) for x, c in zip(v.tolist(), spec.counts)]

    if mode == "greedy":
        removed = [0] * len(v)
        left = budget
        for k in range(len(v)):
            r = min(limits[k], int(math.floor(left / v[k])))
            while r > 0 and r * v[k] > left:
                r -= 1
            removed[k] = r
            left -= r * v[k]
            if r < spec.counts[k]:
                break
        mass = math.fsum(r * x for r, x in zip(removed, v.tolist()))
        rinfo = math.fsum(r * x for r, x in zip(removed, info.tolist()))
        value = max(0.0, float(_restricted_value(np.array(mass), rinfo, H, K)))
        return QuantityReport(value, "greedy", _kept_witness(spec, removed))

    # exact: grow the set of removal patterns class by class, pruning by mass
    mass = np.zeros(1)
    rinfo = np.zeros(1)
    parents: list[tuple[np.ndarray, np.ndarray]] = []
    for k, lim in enumerate(limits):
        if lim == 0:
            parents.append((np.arange(len(mass)), np.zeros(len(mass), dtype=np.int64)))
            continue
        # count the surviving children of each pattern before materialising any
        fits = np.minimum(lim, np.floor((budget - mass) / v[k]).astype(np.int64))
        fits = np.maximum(fits, 0)
        while True:
            over = (mass + fits * v[k] > budget) & (fits > 0)
            if not over.any():
                break
            fits[over] -= 1
        total = int(fits.sum()) + len(mass)
        if total > SUBSET_BUDGET:
            raise CapacityError(
                f"exact search exceeds {SUBSET_BUDGET} candidate sets; use mode='greedy'")
        parent = np.repeat(np.arange(len(mass)), fits + 1)
        starts = np.cumsum(fits + 1) - (fits + 1)
        rr = np.arange(total) - np.repeat(starts, fits + 1)
        mass = mass[parent] + rr * v[k]
        rinfo = rinfo[parent] + rr * info[k]
        parents.append((parent, rr))
    values = _restricted_value(mass, rinfo, H, K)
    best = int(np.argmin(values))
    removed = [0] * len(v)
    idx = best
    for k in range(len(v) - 1, -1, -1):
        parent, rr = parents[k]
        removed[k] = int(rr[idx])
        idx = int(parent[idx])
    return QuantityReport(max(0.0, float(values[best])), "brute-force",
                          _kept_witness(spec, removed))


def _kept_witness(spec: Spectrum, removed: list[int]) -> dict[str, Any]:
    kept = [(float(x), c - r) for x, c, r in zip(spec.values.tolist(), spec.counts, removed)
            if c - r > 0]
    return {"kept": kept, "mass": math.fsum(x * c for x, c in kept)}


def spectral_sup_quantile(law: Union[Spectrum, FiniteDistribution], eps: float, n: int = 1) -> float:
    """``(1/n) sup{r : P[log_K 1/P(X) <= r] <= eps}`` at blocklength ``n``.

    The distribution function of the self-information is a right-continuous
    step function, so the supremum is the location of the first step at
    which the accumulated mass (from the most likely atoms down) exceeds
    ``eps``.
    """
    if not 0 <= eps < 1:
        raise InvalidInputError(f"eps must lie in [0, 1), got {eps!r}")
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    spec = _as_spectrum(law)
    v = spec.values[::-1]
    cum = np.cumsum(v * spec.count_array[::-1])
    k = int(np.argmax(cum > eps + STEP_SLACK))
    return -math.log(float(v[k])) / math.log(spec.K) / n


QUANTITIES: dict[str, Callable[[Spectrum, float, int], float]] = {
    "g_upper": lambda spec, d, n: max_cross_entropy(spec, d).value / n,
    "g_lower": lambda spec, d, n: min_restricted_entropy(spec, d).value / n,
    "g_lower_greedy": lambda spec, d, n: min_restricted_entropy(spec, d, "greedy").value / n,
    "h_quantile": lambda spec, d, n: spectral_sup_quantile(spec, d, n),
}


def rate_sequence(source, eps: float, tau: float, n_list: Iterable[int],
                  which: str = "g_upper") -> list[tuple[int, float]]:
    """Per-blocklength normalised quantity at deficiency ``eps + tau``.

    ``which`` is one of ``g_upper``, ``g_lower`` (exact), ``g_lower_greedy``
    or ``h_quantile``. The limits in ``n`` and ``tau`` are left to the caller.
    """
    from .sources import block_spectrum

    try:
        fn = QUANTITIES[which]
    except KeyError:
        raise InvalidInputError(f"unknown quantity {which!r}") from None
    _check_delta(eps + tau)
    return [(n, fn(block_spectrum(source, n), eps + tau, n)) for n in n_list]


def second_order_curve(source, eps: float, tau: float, R: float,
                       n_list: Iterable[int]) -> list[tuple[int, float]]:
    """Finite-``n`` second-order terms ``(G(X^n) - nR) / sqrt(n)`` of the cross-entropy sup."""
    from .sources import block_spectrum

    if not 0 <= R < math.inf:
        raise InvalidInputError(f"R must be finite and nonnegative, got {R!r}")
    _check_delta(eps + tau)
    out = []
    for n in n_list:
        g = max_cross_entropy(block_spectrum(source, n), eps + tau).value
        out.append((n, (g - n * R) / math.sqrt(n)))
    return out
