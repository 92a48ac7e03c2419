"""Brute-force verifiers for the closed forms and finite-n inequalities.

Each oracle recomputes a quantity from its definition, without the
shortcuts used in :mod:`vlir.quantities` and :mod:`vlir.constructions`.
The ``suite_*`` functions run seeded batteries and return an
:class:`OracleReport`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Optional

import numpy as np

from .core import CapacityError, FiniteDistribution, InvalidInputError, VlirError
from .mappings import VariableLengthMap, avg_distance_by_mixture, evaluate
from .quantities import INF_BAND, max_cross_entropy, min_restricted_entropy

#: Largest support handled by the vertex oracle.
VERTEX_SUPPORT_LIMIT = 24
#: Largest number of kept-count patterns enumerated by the restricted-entropy oracle.
PATTERN_BUDGET = 2**20
#: Exhaustive map enumeration limits.
ENUM_SUPPORT_LIMIT = 5
ENUM_LENGTH_LIMIT = 3
ENUM_MAP_BUDGET = 10**7
#: Values of eta used to exhibit an unbounded objective.
ETA_PROBE = (1e-3, 1e-6, 1e-9)
#: Arithmetic slack when comparing a measured value against a bound.
SLACK = 1e-9
#: Allowed gap between the direct and the mixture distance routes.
SLACK_ROUTE = 1e-12


@dataclass
class OracleReport:
    """Outcome of a verification run.

    ``counterexample`` is set exactly when ``agreed`` is false.
    """

    name: str
    agreed: bool = True
    max_discrepancy: float = 0.0
    counterexample: Optional[dict] = None
    trials: int = 0
    details: dict = field(default_factory=dict)

    def fail(self, discrepancy: float, instance: dict) -> None:
        if self.agreed:
            self.counterexample = instance
        self.agreed = False
        self.note(discrepancy)

    def note(self, discrepancy: float) -> None:
        if discrepancy > self.max_discrepancy or math.isinf(discrepancy):
            self.max_discrepancy = discrepancy

    def merge(self, other: "OracleReport") -> "OracleReport":
        out = OracleReport(self.name, self.agreed and other.agreed,
                           max(self.max_discrepancy, other.max_discrepancy),
                           self.counterexample or other.counterexample,
                           self.trials + other.trials, {**self.details, **other.details})
        return out

    def to_json(self) -> dict[str, Any]:
        md = self.max_discrepancy
        return {"name": self.name, "agreed": self.agreed,
                "max_discrepancy": "inf" if math.isinf(md) else md,
                "counterexample": self.counterexample, "trials": self.trials,
                "details": self.details}


def _dump(dist: FiniteDistribution, **extra) -> dict:
    return {"dist": dist.to_json(), **extra}


def _objective(p: np.ndarray, q: np.ndarray, K: int) -> float:
    return math.fsum(float(a) * -math.log(float(b)) for a, b in zip(p, q)) / math.log(K)


# ---------------------------------------------------------------------------
# cross-entropy supremum


def cross_entropy_vertex_oracle(dist: FiniteDistribution, delta: float) -> float:
    """Supremum of the cross-entropy by evaluating it at the feasible vertices.

    When an atom has ``P(x) <= delta`` it is driven towards zero along
    ``Q(x) = eta P(x)`` for each ``eta`` in :data:`ETA_PROBE`, the rest of
    the removal spread proportionally; the supremum is declared infinite
    only if the objective grows strictly along that sequence.
    """
    if not 0 <= delta < 1:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta!r}")
    if len(dist) > VERTEX_SUPPORT_LIMIT:
        raise CapacityError(
            f"vertex oracle handles at most {VERTEX_SUPPORT_LIMIT} atoms, got {len(dist)}")
    p = dist.probs
    K = dist.K
    if delta == 0:
        return _objective(p, p, K)
    if float(p.min()) <= delta + INF_BAND:
        values = eta_probe(dist, delta)
        if all(b > a for a, b in zip(values, values[1:])):
            return math.inf
        return max(values)
    best = -math.inf
    for i in range(len(p)):
        q = p.copy()
        q[i] -= delta
        best = max(best, _objective(p, q, K))
    return best


def eta_probe(dist: FiniteDistribution, delta: float) -> list[float]:
    """Objective along the eta-sequence on the first atom with ``P(x) <= delta``."""
    p = dist.probs
    i = next(i for i, x in enumerate(p.tolist()) if x <= delta + INF_BAND)
    out = []
    for eta in ETA_PROBE:
        q = p.copy()
        q[i] = eta * p[i]
        rest = delta - (1.0 - eta) * p[i]
        others = np.arange(len(p)) != i
        q[others] *= 1.0 - max(rest, 0.0) / (1.0 - p[i])
        out.append(_objective(p, q, dist.K))
    return out


def cross_entropy_sampler(dist: FiniteDistribution, delta: float, trials: int,
                          seed: int) -> float:
    """Largest objective over ``trials`` random feasible sub-distributions.

    The removal ``delta`` is split by a Dirichlet draw (half of the draws
    sparse, to approach the vertices). ``trials = 0`` gives ``-inf``.
    """
    p = dist.probs
    if delta > 0 and float(p.min()) <= delta:
        raise InvalidInputError("the sampler needs every atom heavier than delta")
    if trials == 0:
        return -math.inf
    rng = np.random.default_rng(seed)
    s = len(p)
    alpha = np.where(np.arange(trials) % 2 == 0, 1.0, 0.05)[:, None] * np.ones((1, s))
    g = rng.standard_gamma(alpha)
    total = g.sum(axis=1, keepdims=True)
    # a draw can underflow to all zeros for tiny alpha; send it to one atom
    g[total[:, 0] == 0, 0] = 1.0
    w = g / g.sum(axis=1, keepdims=True)
    q = p[None, :] - delta * w
    vals = (p[None, :] * -np.log(q)).sum(axis=1) / math.log(dist.K)
    return float(vals.max())


# ---------------------------------------------------------------------------
# restricted entropy


def restricted_entropy_bruteforce(dist: FiniteDistribution, delta: float) -> float:
    """Infimum of ``sum_A P log(P(A)/P)`` over sets with ``P(A) >= 1 - delta``.

    Atoms of equal probability are interchangeable, so sets are enumerated
    by how many atoms of each probability they keep.
    """
    if not 0 <= delta < 1:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta!r}")
    groups: dict[float, int] = {}
    for x in dist.probs.tolist():
        groups[x] = groups.get(x, 0) + 1
    vals = list(groups)
    counts = [groups[v] for v in vals]
    if math.prod(c + 1 for c in counts) > PATTERN_BUDGET:
        raise CapacityError(f"more than {PATTERN_BUDGET} kept-count patterns")
    lnK = math.log(dist.K)
    best = math.inf
    for kept in itertools.product(*[range(c + 1) for c in counts]):
        # test the dropped mass directly: 1 - kept can be off by an ulp at delta = 0
        dropped = math.fsum((c - k) * v for k, c, v in zip(kept, counts, vals))
        mass = math.fsum(k * v for k, v in zip(kept, vals))
        if dropped > delta * (1.0 + 1e-12) or mass <= 0:
            continue
        value = math.fsum(k * v * math.log(mass / v) for k, v in zip(kept, vals)) / lnK
        best = min(best, value)
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# micro-scale maps


def _set_partitions(items: list, max_blocks: int) -> Iterator[list[int]]:
    """Restricted-growth labelings of ``items`` with at most ``max_blocks`` blocks."""
    k = len(items)
    if k == 0:
        yield []
        return
    labels = [0] * k

    def rec(pos: int, used: int):
        if pos == k:
            yield list(labels)
            return
        for b in range(min(used + 1, max_blocks)):
            labels[pos] = b
            yield from rec(pos + 1, max(used, b + 1))

    yield from rec(1, 1)


def _bell_bounded(k: int, blocks: int) -> int:
    # sum_{b <= blocks} S(k, b)
    row = [1] + [0] * k  # S(0, b)
    for i in range(1, k + 1):
        new = [0] * (k + 1)
        for b in range(1, min(i, blocks) + 1):
            new[b] = b * row[b] + row[b - 1]
        row = new
    return sum(row[: min(k, blocks) + 1])


def count_maps(support: int, max_len: int, K: int = 2) -> int:
    """Number of maps :func:`enumerate_maps` yields, by inclusion over length patterns."""
    total = 0
    for lengths in itertools.product(range(max_len + 1), repeat=support):
        prod = 1
        for m in range(max_len + 1):
            prod *= _bell_bounded(lengths.count(m), K**m)
        total += prod
    return total


def enumerate_maps(dist: FiniteDistribution, max_len: int, samples: Optional[int] = None,
                   seed: int = 0) -> Iterator[VariableLengthMap]:
    """Maps into strings of length at most ``max_len``.

    Exhaustively, one map per way of choosing the lengths and which atoms
    share a string (string labels within a length are interchangeable for
    every metric). With ``samples`` set, that many uniformly random maps
    are drawn instead.
    """
    K = dist.K
    atoms = list(dist.atoms)
    s = len(atoms)
    if max_len < 0:
        raise InvalidInputError("max_len must be nonnegative")
    if samples is not None:
        rng = np.random.default_rng(seed)
        for _ in range(int(samples)):
            lengths = rng.integers(0, max_len + 1, size=s)
            idx = [int(rng.integers(0, K**int(m))) for m in lengths]
            yield VariableLengthMap(atoms, lengths, idx, K)
        return
    if s > ENUM_SUPPORT_LIMIT or max_len > ENUM_LENGTH_LIMIT or K != 2:
        raise CapacityError(
            f"exhaustive enumeration needs support <= {ENUM_SUPPORT_LIMIT}, "
            f"max_len <= {ENUM_LENGTH_LIMIT} and K = 2; pass samples= for larger inputs")
    if count_maps(s, max_len, K) > ENUM_MAP_BUDGET:
        raise CapacityError(f"more than {ENUM_MAP_BUDGET} maps; pass samples=")
    for lengths in itertools.product(range(max_len + 1), repeat=s):
        members = [[i for i in range(s) if lengths[i] == m] for m in range(max_len + 1)]
        parts = [list(_set_partitions(mem, K**m)) for m, mem in enumerate(members)]
        for combo in itertools.product(*parts):
            idx = [0] * s
            for mem, labels in zip(members, combo):
                for i, b in zip(mem, labels):
                    idx[i] = b
            yield VariableLengthMap(atoms, list(lengths), idx, K)


def converse_check(dist: FiniteDistribution, delta: float, maps: Iterable[VariableLengthMap],
                   bound: Optional[float] = None) -> OracleReport:
    """No map within distance ``delta`` of uniform may beat the cross-entropy sup in length.

    Every map with average variational distance at most ``delta`` must have
    mean length at most ``bound`` (default: the cross-entropy supremum at
    ``delta``). An infinite bound makes the check vacuous. ``details``
    records the largest length-to-bound ratio seen.
    """
    g = max_cross_entropy(dist, delta).value if bound is None else bound
    rep = OracleReport("converse", details={"bound": "inf" if math.isinf(g) else g,
                                            "vacuous": math.isinf(g), "eligible": 0,
                                            "max_ratio": 0.0})
    for phi in maps:
        rep.trials += 1
        if math.isinf(g):
            continue
        mm = evaluate(phi, dist)
        if mm.d_bar > delta + 1e-12:
            continue
        rep.details["eligible"] += 1
        if g > 0:
            rep.details["max_ratio"] = max(rep.details["max_ratio"], mm.mean_length / g)
        excess = mm.mean_length - g
        if excess > SLACK:
            rep.fail(excess, _dump(dist, delta=delta, map=phi.to_json(),
                                   mean_length=mm.mean_length, d_bar=mm.d_bar))
    return rep


def mixture_route_check(phi: VariableLengthMap, dist: FiniteDistribution,
                        tol: float = SLACK_ROUTE) -> float:
    """Gap between the direct and the per-class-mixture distance; raises above ``tol``."""
    gap = abs(evaluate(phi, dist).d_bar - avg_distance_by_mixture(phi, dist))
    if gap > tol:
        raise VlirError(f"distance routes disagree by {gap!r}")
    return gap


# ---------------------------------------------------------------------------
# packing


def verify_packing(cfg, result) -> OracleReport:
    """Recheck a :class:`~vlir.constructions.PackingResult` from scratch.

    Bins must partition the atoms, respect the capacity (all bins but the
    last in case ``full``), be maximal with respect to the atoms packed
    later, and the measured distance must match a direct recomputation and
    stay below the bound.
    """
    rep = OracleReport("packing", trials=1)
    w = cfg.weights
    cap, M = result.capacity, result.M
    tol = cap * 1e-12
    bins = [int(b) for b in result.bin_of]
    if any(b < 0 or b >= M for b in bins):
        rep.fail(math.inf, {"reason": "bin index out of range"})
        return rep
    loads: dict[int, list[float]] = {}
    for b, x in zip(bins, w.tolist()):
        loads.setdefault(b, []).append(x)
    load = {b: math.fsum(v) for b, v in loads.items()}
    keys = sorted(load)
    last_bin = M - 1
    for b in keys:
        if result.case == "full" and b == last_bin:
            continue
        if load[b] > cap + tol:
            rep.fail(load[b] - cap, {"reason": "capacity", "bin": b, "load": load[b], "cap": cap})
    if result.case == "short" and keys and keys[-1] > result.i0:
        rep.fail(math.inf, {"reason": "bin beyond the final step is used", "bin": keys[-1]})
    # maximality: the lightest atom packed after bin b must not fit into b
    later_min = math.inf
    for b in reversed(keys):
        if later_min <= cap - load[b] + tol and not (result.case == "full" and b == last_bin):
            rep.fail(cap - load[b] - later_min, {"reason": "bin not maximal", "bin": b})
        later_min = min(later_min, min(loads[b]))
    direct = 0.5 * (math.fsum(abs(load[b] - cap) for b in keys) + cfg.c * ((M - len(keys)) / M))
    if abs(direct - result.distance_lhs) > 1e-12:
        rep.fail(abs(direct - result.distance_lhs), {"reason": "distance mismatch"})
    rep.note(direct - result.distance_bound)
    if direct > result.distance_bound + 1e-12:
        rep.fail(direct - result.distance_bound, {"reason": "bound", "lhs": direct,
                                                  "bound": result.distance_bound})
    if result.case == "short" and direct > result.short_bound + 1e-12:
        rep.fail(direct - result.short_bound, {"reason": "short-case bound", "lhs": direct,
                                               "bound": result.short_bound})
    rep.details = {"case": result.case}
    return rep


# ---------------------------------------------------------------------------
# random instances and suites


def random_distribution(rng: np.random.Generator, support: int, K: int = 2,
                        floor: float = 0.0) -> FiniteDistribution:
    """Dirichlet(1) draw mixed with ``floor`` of the uniform law."""
    p = rng.dirichlet(np.ones(support))
    p = (1.0 - floor) * p + floor / support
    p = p / math.fsum(p.tolist())
    # guard against a zero from underflow
    p = np.maximum(p, 1e-300)
    p = p / math.fsum(p.tolist())
    return FiniteDistribution(p, [f"x{i}" for i in range(support)], K)


def random_packing_config(rng: np.random.Generator):
    """A random packing problem that meets the weight-ceiling precondition."""
    from .constructions import PackingConfig

    while True:
        K = int(rng.choice([2, 3]))
        n = int(rng.integers(1, 13))
        a = float(rng.uniform(0.1, 1.0))
        R = float(rng.uniform(0.05, 8.0 / n))
        gamma = float(rng.uniform(0.005, 0.3))
        c = float(rng.uniform(0.05, 1.0))
        ceiling = c * float(K) ** (-n * (a + gamma) * R)
        fill = float(rng.choice([1.0, rng.uniform(0.3, 1.0)]))
        expected = fill * c / (0.55 * ceiling)
        if expected > 20000:
            continue
        if rng.random() < 0.5:
            levels = rng.uniform(0.1, 1.0, size=int(rng.integers(1, 4))) * ceiling
            draw = lambda k: rng.choice(levels, size=k)  # noqa: E731
        else:
            draw = lambda k: rng.uniform(0.1, 1.0, size=k) * ceiling  # noqa: E731
        w = draw(max(1, int(expected * 1.2)))
        keep = np.cumsum(w) <= fill * c
        w = w[keep] if keep.any() else w[:1]
        if w.sum() > c:
            continue
        return PackingConfig(n=n, R=R, a=a, gamma=gamma, c=c, weights=w, K=K)


def suite_closed_form(n_dists: int = 1000, deltas: Iterable[float] = None, seed: int = 0,
                      max_support: int = 12,
                      closed_form: Optional[Callable[[FiniteDistribution, float], float]] = None
                      ) -> OracleReport:
    """Closed-form cross-entropy sup against the vertex oracle."""
    if deltas is None:
        deltas = default_delta_grid()
    deltas = list(deltas)
    if closed_form is None:
        closed_form = lambda d, x: max_cross_entropy(d, x).value  # noqa: E731
    rng = np.random.default_rng(seed)
    rep = OracleReport("closed_form_vs_vertex")
    n_inf = 0
    for _ in range(n_dists):
        dist = random_distribution(rng, int(rng.integers(1, max_support + 1)), int(rng.choice([2, 3])))
        for delta in deltas:
            rep.trials += 1
            a, b = closed_form(dist, delta), cross_entropy_vertex_oracle(dist, delta)
            if math.isinf(a) != math.isinf(b):
                rep.fail(math.inf, _dump(dist, delta=delta, closed_form=str(a), oracle=str(b)))
                continue
            if math.isinf(a):
                n_inf += 1
                continue
            gap = abs(a - b)
            rep.note(gap)
            if gap > SLACK:
                rep.fail(gap, _dump(dist, delta=delta, closed_form=a, oracle=b))
    rep.details["infinite_cases"] = n_inf
    return rep


def suite_sampler(n_dists: int = 100, trials: int = 10**4, seed: int = 0,
                  max_support: int = 12, deltas: Iterable[float] = None) -> OracleReport:
    """Random feasible sub-distributions never beat the closed-form sup."""
    deltas = list(deltas) if deltas is not None else default_delta_grid()
    rng = np.random.default_rng(seed)
    rep = OracleReport("sampler_soundness")
    done = 0
    while done < n_dists:
        dist = random_distribution(rng, int(rng.integers(1, max_support + 1)), int(rng.choice([2, 3])))
        finite = [d for d in deltas if float(dist.probs.min()) > d + INF_BAND]
        if not finite:
            continue
        delta = finite[int(rng.integers(len(finite)))]
        sup = max_cross_entropy(dist, delta).value
        best = cross_entropy_sampler(dist, delta, trials, int(rng.integers(2**63)))
        rep.trials += trials
        rep.note(best - sup)
        if best > sup + SLACK:
            rep.fail(best - sup, _dump(dist, delta=delta, sampled=best, closed_form=sup))
        done += 1
    rep.details["distributions"] = done
    return rep


def suite_restricted(n_dists: int = 200, seed: int = 0, max_support: int = 10,
                     deltas: Iterable[float] = (0.05, 0.1, 0.25, 0.5)) -> OracleReport:
    """Exact restricted entropy equals brute force; greedy never undercuts it."""
    rng = np.random.default_rng(seed)
    rep = OracleReport("restricted_entropy")
    for _ in range(n_dists):
        dist = random_distribution(rng, int(rng.integers(1, max_support + 1)), int(rng.choice([2, 3])))
        for delta in deltas:
            rep.trials += 1
            brute = restricted_entropy_bruteforce(dist, delta)
            exact = min_restricted_entropy(dist, delta).value
            greedy = min_restricted_entropy(dist, delta, "greedy").value
            gap = abs(brute - exact)
            rep.note(gap)
            if gap > SLACK or brute > greedy + SLACK:
                rep.fail(max(gap, brute - greedy),
                         _dump(dist, delta=delta, brute=brute, exact=exact, greedy=greedy))
    return rep


def suite_converse(supports: Iterable[int] = (1, 2, 3, 4), deltas: Iterable[float] = (0.05, 0.1, 0.25),
                   max_len: int = 3, dists_per_support: int = 3, random_maps: int = 10**5,
                   random_support: int = 6, seed: int = 0) -> OracleReport:
    """Exhaustive micro-scale converse check plus random maps at a larger support.

    Every map is also checked for agreement of the direct and mixture
    distance routes; the largest gap is reported as ``max_mixture_gap``.
    """
    rng = np.random.default_rng(seed)
    deltas = list(deltas)
    rep = OracleReport("converse")
    checked = 0
    n_maps = 0
    gap = 0.0

    def run(dist, maps, ds):
        nonlocal rep, checked, n_maps, gap
        for phi in maps:
            n_maps += 1
            g = abs(evaluate(phi, dist).d_bar - avg_distance_by_mixture(phi, dist))
            gap = max(gap, g)
            if g > SLACK_ROUTE:
                rep.fail(g, _dump(dist, map=phi.to_json(), mixture_gap=g))
        for delta in ds:
            rep = rep.merge(converse_check(dist, delta, maps))
            checked += 1

    for s in supports:
        for _ in range(dists_per_support):
            dist = random_distribution(rng, s, 2, floor=0.5)
            maps = list(enumerate_maps(dist, max_len))
            run(dist, maps, [d for d in deltas if not math.isinf(max_cross_entropy(dist, d).value)])
    if random_maps:
        dist = random_distribution(rng, random_support, 2, floor=0.5)
        finite = [d for d in deltas if not math.isinf(max_cross_entropy(dist, d).value)]
        maps = list(enumerate_maps(dist, max_len, samples=random_maps, seed=int(rng.integers(2**63))))
        run(dist, maps, finite)
    rep.name = "converse"
    rep.details = {"instances": checked, "maps": n_maps, "max_mixture_gap": gap}
    return rep


def suite_packing(n_instances: int = 500, seed: int = 0) -> OracleReport:
    """Greedy packing bounds and structure on random precondition-satisfying instances."""
    from .constructions import greedy_pack

    rng = np.random.default_rng(seed)
    rep = OracleReport("packing_bound")
    cases = {"full": 0, "short": 0}
    for _ in range(n_instances):
        cfg = random_packing_config(rng)
        res = greedy_pack(cfg)
        cases[res.case] += 1
        one = verify_packing(cfg, res)
        rep = rep.merge(one)
        if not one.agreed and rep.counterexample is one.counterexample:
            rep.counterexample = {**one.counterexample, "config": {
                "n": cfg.n, "R": cfg.R, "a": cfg.a, "gamma": cfg.gamma, "c": cfg.c,
                "K": cfg.K, "weights": cfg.weights.tolist()}}
    rep.name = "packing_bound"
    rep.details = {"cases": cases}
    return rep


def default_delta_grid() -> list[float]:
    """``0.01, 0.05, 0.10, ..., 0.50``."""
    return [0.01] + [round(0.05 * k, 2) for k in range(1, 11)]
