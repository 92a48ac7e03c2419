"""Constructive achievability: greedy packing, slicing and the rate-floor witness.

``greedy_pack``
    Packs weighted atoms into ``K^L`` equal-capacity bins so that the bin
    loads are close to uniform.
``direct_construct``
    Slices the source by the self-information of a sub-distribution,
    packs each sufficiently heavy slice to its own output length and sends
    everything else to the null string.
``quantile_witness``
    A feasible sub-distribution whose self-information never drops below a
    target rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .core import (FiniteDistribution, InvalidInputError, PreconditionError,
                   SubDistribution, VlirError, check_feasible, shrink_q)
from .mappings import VariableLengthMap
from .quantities import max_cross_entropy, spectral_sup_quantile

#: Slack used when flooring target lengths, so exact products are not lost to rounding.
FLOOR_GUARD = 1e-9
#: Relative slack on the per-atom weight ceiling of the packing precondition.
PRECONDITION_RTOL = 1e-9
#: Relative slack on bin capacity.
CAPACITY_RTOL = 1e-12


def target_length(n: int, a: float, R: float) -> int:
    return int(math.floor(n * a * R + FLOOR_GUARD))


@dataclass(frozen=True)
class PackingConfig:
    """Inputs of one packing problem.

    ``weights`` are the masses of the atoms to pack (probabilities or a
    sub-probability), ``c`` the total capacity, at least the packed mass.
    The output length is ``floor(n a R)``.
    """

    n: int
    R: float
    a: float
    gamma: float
    c: float
    weights: np.ndarray
    K: int = 2
    ids: Optional[Sequence[str]] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise InvalidInputError("weights must be a vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite and nonnegative")
        if self.n < 1:
            raise InvalidInputError(f"n must be positive, got {self.n}")
        if not self.R > 0:
            raise InvalidInputError(f"R must be positive, got {self.R!r}")
        if not 0 < self.a <= 1:
            raise InvalidInputError(f"a must lie in (0, 1], got {self.a!r}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma!r}")
        if int(self.K) != self.K or self.K < 2:
            raise InvalidInputError(f"K must be an integer >= 2, got {self.K!r}")
        if self.ids is not None and len(self.ids) != len(w):
            raise InvalidInputError("ids must align with the weights")
        if self.c < self.mass - 1e-12:
            raise InvalidInputError(f"capacity c={self.c!r} is below the packed mass {self.mass!r}")

    @property
    def mass(self) -> float:
        return math.fsum(self.weights.tolist())

    @property
    def L(self) -> int:
        return target_length(self.n, self.a, self.R)

    @property
    def M(self) -> int:
        return self.K**self.L

    @property
    def capacity(self) -> float:
        return self.c * float(self.K) ** (-self.L)

    def atom_id(self, i: int) -> str:
        return str(self.ids[i]) if self.ids is not None else f"#{i}"


@dataclass(frozen=True)
class PackingRun:
    """``repeat`` consecutive bins with identical contents by weight class."""

    load: float
    repeat: int
    take: dict


@dataclass(frozen=True)
class PackingResult:
    """Outcome of :func:`greedy_pack`.

    ``bin_of[i]`` is the 0-based bin (string index at length ``L``) of the
    ``i``-th atom. ``i0`` counts the greedy steps as in the case analysis:
    ``full`` when ``i0 = M - 1`` and the last bin absorbs the remainder,
    ``short`` when the atoms ran out earlier.
    """

    bin_of: np.ndarray
    L: int
    M: int
    capacity: float
    i0: int
    case: str
    distance_lhs: float
    distance_bound: float
    short_bound: float
    runs: tuple = field(repr=False, default=())
    ids: Optional[Sequence[str]] = field(repr=False, default=None)

    @property
    def bins(self) -> list[list]:
        """Atom lists of the nonempty bins, in bin order."""
        order = np.argsort(self.bin_of, kind="stable")
        keys = self.bin_of[order]
        out: list[list] = []
        last = None
        for pos, b in zip(order.tolist(), keys.tolist()):
            if b != last:
                out.append([])
                last = b
            out[-1].append(self.ids[pos] if self.ids is not None else pos)
        return out

    @property
    def holds(self) -> bool:
        ok = self.distance_lhs <= self.distance_bound
        if self.case == "short":
            ok = ok and self.distance_lhs <= self.short_bound
        return ok


def check_packing_precondition(cfg: PackingConfig) -> None:
    """Raise if some weight exceeds ``c K^{-n(a+gamma)R}``; compared in the log domain."""
    w = cfg.weights
    if cfg.c <= 0:
        if np.any(w > 0):
            raise PreconditionError("capacity is zero but some weight is positive")
        return
    ceiling = math.log(cfg.c) - cfg.n * (cfg.a + cfg.gamma) * cfg.R * math.log(cfg.K)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    bad = np.nonzero(logw > ceiling + math.log1p(PRECONDITION_RTOL))[0]
    if len(bad):
        i = int(bad[np.argmax(logw[bad])])
        raise PreconditionError(
            f"atom {cfg.atom_id(i)} has weight {w[i]!r} above the ceiling "
            f"{math.exp(ceiling)!r} = c*K^(-n(a+gamma)R)")


def greedy_pack(cfg: PackingConfig, check_precondition: bool = True) -> PackingResult:
    """Fill bins one at a time, each maximal under the capacity ``c / K^L``.

    Atoms are scanned by decreasing weight (ties in input order) and every
    remaining atom that still fits is taken, so no leftover atom fits into
    an earlier bin. Atoms of equal weight are handled by counting, and runs
    of identical bins are emitted in one step. After ``M - 1`` bins any
    remainder goes to the last bin.
    """
    if check_precondition:
        check_packing_precondition(cfg)
    w = cfg.weights
    L, M, cap = cfg.L, cfg.M, cfg.capacity
    tol = cap * CAPACITY_RTOL

    order = np.argsort(-w, kind="stable")
    vals, starts, counts = np.unique(-w[order], return_index=True, return_counts=True)
    vals = (-vals).tolist()
    starts = starts.tolist()
    remaining = counts.tolist()
    taken = [0] * len(vals)

    runs: list[PackingRun] = []
    bins_done = 0
    nonempty = 0
    bin_of = np.zeros(len(w), dtype=object if M > 2**62 else np.int64)
    while bins_done < M - 1 and any(remaining):
        load = 0.0
        take: dict[int, int] = {}
        for g, v in enumerate(vals):
            r = remaining[g]
            if r == 0:
                continue
            room = cap - load
            if v == 0.0:
                k = r
            elif v > room + tol:
                continue
            else:
                k = min(r, int(math.floor((room + tol) / v)))
                while k > 0 and load + k * v > cap + tol:
                    k -= 1
            if k:
                take[g] = k
                load += k * v
        if not take:
            # nothing fits: every further greedy bin stays empty
            bins_done = M - 1
            break
        t = min(remaining[g] // k for g, k in take.items())
        t = max(1, min(t, M - 1 - bins_done))
        load = math.fsum(k * vals[g] for g, k in take.items())
        for g, k in take.items():
            lo = starts[g] + taken[g]
            idx = order[lo:lo + t * k]
            bin_of[idx] = np.repeat(np.arange(bins_done, bins_done + t, dtype=np.int64), k)
            taken[g] += t * k
            remaining[g] -= t * k
        runs.append(PackingRun(load, t, dict(take)))
        bins_done += t
        nonempty += t

    terms = [r.repeat * abs(r.load - cap) for r in runs]
    if any(remaining):
        left = []
        for g, r in enumerate(remaining):
            if r:
                lo = starts[g] + taken[g]
                bin_of[order[lo:lo + r]] = M - 1
                left.append(r * vals[g])
        last = math.fsum(left)
        runs.append(PackingRun(last, 1, {g: r for g, r in enumerate(remaining) if r}))
        terms.append(abs(last - cap))
        nonempty += 1
        i0 = M - 1
    else:
        i0 = max(bins_done - 1, 0)
    case = "full" if i0 == M - 1 else "short"
    # untouched bins each miss the full capacity; exact integer ratio for huge M
    terms.append(cfg.c * ((M - nonempty) / M))
    lhs = 0.5 * math.fsum(terms)
    bound = cfg.c * float(cfg.K) ** (-cfg.n * cfg.gamma * cfg.R) + 0.5 * (cfg.c - cfg.mass)
    return PackingResult(bin_of=bin_of, L=L, M=M, capacity=cap, i0=i0, case=case,
                         distance_lhs=lhs, distance_bound=bound,
                         short_bound=0.5 * (cfg.c - cfg.mass), runs=tuple(runs), ids=cfg.ids)


# ---------------------------------------------------------------------------
# slices


def slice_width(gamma: float) -> float:
    return 3.0 * gamma


def length_threshold(gamma: float) -> float:
    """Smallest blocklength at which slice lengths are pairwise distinct."""
    return 1.0 / ((1.0 - 2.0 * gamma) * 3.0 * gamma)


@dataclass(frozen=True)
class Slice:
    j: int
    indices: np.ndarray
    mass: float
    q_mass: float


@dataclass(frozen=True)
class SliceDecomposition:
    """Partition of the support by normalised self-information of ``q_tilde``.

    Slice ``j`` holds the atoms with ``(1/n) log_K 1/Q(x)`` in
    ``[3 gamma j, 3 gamma (j + 1))``. ``J1`` are the slices ``j >= 1`` whose
    source mass is at least ``K^{-n gamma R_j}``; ``J2`` is the rest,
    always including 0.
    """

    q_tilde: SubDistribution
    gamma: float
    n: int
    slices: tuple
    J1: tuple
    J2: tuple

    def rate(self, j: int) -> float:
        return slice_width(self.gamma) * j

    def length(self, j: int) -> int:
        return target_length(self.n, 1.0 - 2.0 * self.gamma, self.rate(j))

    def by_index(self) -> dict[int, Slice]:
        return {s.j: s for s in self.slices}

    def atoms(self, j: int) -> list:
        atoms = self.q_tilde.base.atoms
        return [atoms[i] for i in self.by_index()[j].indices.tolist()]


def _check_gamma(gamma: float) -> None:
    if not 0 < gamma < 0.5:
        raise InvalidInputError(f"gamma must lie in (0, 1/2), got {gamma!r}")


def slice_decompose(dist: FiniteDistribution, q_tilde: SubDistribution, gamma: float,
                    n: int) -> SliceDecomposition:
    _check_gamma(gamma)
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    if q_tilde.base is not dist and list(q_tilde.base.atoms) != list(dist.atoms):
        raise InvalidInputError("q_tilde is defined over different atoms")
    if not check_feasible(q_tilde, q_tilde.deficiency):
        raise InvalidInputError(
            f"q_tilde is not a feasible sub-distribution with deficiency {q_tilde.deficiency!r}")
    lnK = math.log(dist.K)
    iota = -np.log(q_tilde.q) / lnK
    js = np.floor(iota / (n * slice_width(gamma))).astype(np.int64)
    uniq, inverse = np.unique(js, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
    p, q = dist.probs, q_tilde.q
    slices, J1, J2 = [], [], [0]
    for k, j in enumerate(uniq.tolist()):
        idx = order[bounds[k]:bounds[k + 1]]
        s = Slice(j, idx, math.fsum(p[idx].tolist()), math.fsum(q[idx].tolist()))
        slices.append(s)
        if j >= 1:
            # P[S_j] >= K^{-n gamma R_j}, in the log domain
            if math.log(s.mass) >= -n * gamma * slice_width(gamma) * j * lnK:
                J1.append(j)
            else:
                J2.append(j)
    return SliceDecomposition(q_tilde, gamma, n, tuple(slices), tuple(J1), tuple(sorted(J2)))


@dataclass(frozen=True)
class Guarantees:
    """Bounds the built map is guaranteed to meet."""

    distance_bound: float
    length_bound: float
    n_threshold: float
    gamma: float
    tau: float
    case_per_slice: dict

    def to_json(self) -> dict[str, Any]:
        return {"distance_bound": self.distance_bound, "length_bound": self.length_bound,
                "n_threshold": self.n_threshold, "gamma": self.gamma, "tau": self.tau,
                "case_per_slice": {str(j): c for j, c in sorted(self.case_per_slice.items())}}


def construction_bounds(dist: FiniteDistribution, q_tilde: SubDistribution, gamma: float,
                        n: int) -> tuple[float, float]:
    """Distance and (unnormalised) mean-length guarantees of :func:`direct_construct`."""
    K = dist.K
    x = float(K) ** (-3.0 * n * gamma * gamma)
    geo = x / (1.0 - x)
    distance = q_tilde.deficiency + geo
    cross = math.fsum((dist.probs * -np.log(q_tilde.q)).tolist()) / math.log(K)
    shrink = 1.0 - 2.0 * gamma
    length = (shrink * cross - n * 6.0 * gamma * shrink * x / (1.0 - x) ** 2
              - 6.0 * n * gamma * shrink - 1.0)
    return distance, length


def direct_construct(dist: FiniteDistribution, q_tilde: SubDistribution, gamma: float, n: int,
                     tau: float = 0.0) -> tuple[VariableLengthMap, Guarantees]:
    """Build the slice-wise packed map and its guarantees.

    Each slice in ``J1`` is packed into strings of length
    ``floor(n (1 - 2 gamma) R_j)`` with capacity ``P[S_j]`` and weights
    ``q_tilde``; other atoms map to the null string.
    """
    _check_gamma(gamma)
    threshold = length_threshold(gamma)
    if n < threshold - 1e-12:
        raise InvalidInputError(
            f"n={n} is below the minimal blocklength {math.ceil(threshold - 1e-12)} "
            f"for gamma={gamma!r}")
    dec = slice_decompose(dist, q_tilde, gamma, n)
    lengths = np.zeros(len(dist), dtype=np.int64)
    indices = np.zeros(len(dist), dtype=object)
    big = False
    cases: dict[int, str] = {}
    slices = dec.by_index()
    seen: dict[int, int] = {}
    for j in dec.J1:
        s = slices[j]
        cfg = PackingConfig(n=n, R=dec.rate(j), a=1.0 - 2.0 * gamma, gamma=gamma, c=s.mass,
                            weights=q_tilde.q[s.indices], K=dist.K)
        res = greedy_pack(cfg)
        if res.L in seen:
            raise VlirError(f"slices {seen[res.L]} and {j} share output length {res.L}")
        seen[res.L] = j
        lengths[s.indices] = res.L
        indices[s.indices] = res.bin_of
        big = big or res.M > 2**62
        cases[j] = res.case
    if not big:
        indices = indices.astype(np.int64)
    phi = VariableLengthMap(dist.atoms, lengths, indices, dist.K)
    distance, length = construction_bounds(dist, q_tilde, gamma, n)
    return phi, Guarantees(distance, length, threshold, gamma, tau, cases)


# ---------------------------------------------------------------------------
# choosing the sub-distribution


def capped_reduction(dist: FiniteDistribution, delta: float) -> SubDistribution:
    """Remove ``delta`` from the smallest atoms, never more than a fixed share of each.

    Each atom keeps at least ``f P(x)`` with ``f = min(1/2, (1 - delta) / 2)``,
    so the result is strictly positive; atoms are drained in increasing
    probability (ties in atom order).
    """
    if not 0 <= delta < 1:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta!r}")
    f = min(0.5, (1.0 - delta) / 2.0)
    p = dist.probs
    order = np.argsort(p, kind="stable")
    room = (1.0 - f) * p[order]
    before = np.concatenate([[0.0], np.cumsum(room)[:-1]])
    take = np.clip(delta - before, 0.0, room)
    removal = np.zeros(len(p))
    removal[order] = take
    q = shrink_q(dist, removal)
    return SubDistribution(dist, q.q, delta)


def default_q_tilde(dist: FiniteDistribution, delta: float) -> SubDistribution:
    """The cross-entropy maximiser when it exists, else :func:`capped_reduction`."""
    rep = max_cross_entropy(dist, delta)
    if rep.finite:
        return rep.witness
    return capped_reduction(dist, delta)


# ---------------------------------------------------------------------------
# rate-floor witness


def quantile_floor_rate(dist: FiniteDistribution, eps: float, gamma: float, n: int) -> float:
    """Target rate ``R_0``: the spectral sup-quantile minus ``gamma``."""
    return spectral_sup_quantile(dist, eps, n) - gamma


def quantile_witness(dist: FiniteDistribution, eps: float, tau: float, gamma: float, n: int,
                     rate: Optional[float] = None) -> SubDistribution:
    """Feasible sub-distribution with ``(1/n) log_K 1/Q(x) >= R_0`` everywhere.

    Atoms with ``(1/n) log_K 1/P(x) <= R_0`` share ``K^{-n R_0}`` equally,
    the others keep ``P``; the result is then scaled to mass
    ``1 - eps - tau``. ``rate`` overrides ``R_0``. Fails when the atoms below
    the rate carry more than ``eps + tau``.
    """
    delta = eps + tau
    if not (0 <= eps and 0 <= tau and delta < 1):
        raise InvalidInputError(f"need eps, tau >= 0 and eps + tau < 1, got {eps!r}, {tau!r}")
    R0 = quantile_floor_rate(dist, eps, gamma, n) if rate is None else float(rate)
    lnK = math.log(dist.K)
    p = dist.probs
    below = (-np.log(p) / lnK / n) <= R0
    low_mass = math.fsum(p[below].tolist())
    if low_mass > delta + 1e-12:
        raise PreconditionError(
            f"mass {low_mass!r} at rates <= {R0!r} exceeds eps + tau = {delta!r} at n={n}")
    q = p.copy()
    count = int(below.sum())
    if count:
        share = math.exp(-n * R0 * lnK) / count
        q[below] = np.minimum(share, p[below])
    q *= (1.0 - delta) / math.fsum(q.tolist())
    # the scale is at most 1 up to rounding; keep domination exact
    q = np.minimum(q, p)
    return SubDistribution(dist, q, delta)
