"""Distribution value types and the elementary information measures.

All logarithms are taken in base ``K``, the size of the output alphabet.
Probabilities are stored as ``float64`` numpy arrays; the tolerances used at
each comparison are module constants so callers can see them.
"""
from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

#: Allowed deviation of a constructed distribution's total mass from 1.
MASS_TOL = 1e-12
#: Allowed deviation of a sub-distribution's total mass from ``1 - delta``.
FEASIBILITY_TOL = 1e-9
#: Allowed deviation of a JSON literal's total mass from 1 (renormalised afterwards).
LOAD_TOL = 1e-9
#: Relative gap below which two probability values are merged in a spectrum.
MERGE_RTOL = 1e-12


class VlirError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(VlirError, ValueError):
    """An argument violates a documented precondition."""


class CapacityError(VlirError, RuntimeError):
    """A computation would exceed its enumeration or expansion budget."""


class PreconditionError(InvalidInputError):
    """A construction's mathematical hypothesis does not hold for the input."""


def log_base(x, K: int):
    """Logarithm of ``x`` in base ``K`` (scalar or array)."""
    return np.log(x) / math.log(K)


def _is_lazy_atoms(atoms) -> bool:
    # lazily generated atom sequences guarantee uniqueness themselves
    return getattr(atoms, "unique_by_construction", False)


class FiniteDistribution:
    """Probability vector over an ordered list of named atoms.

    Zero-probability atoms are dropped at construction, so the stored atoms
    are exactly the support.

    Parameters
    ----------
    probs : array-like
        Nonnegative probabilities summing to 1 within ``MASS_TOL``.
    atoms : sequence of str, optional
        Atom identifiers, one per probability. Defaults to ``"0", "1", ...``.
    K : int
        Logarithm base and output alphabet size, at least 2.
    """

    __slots__ = ("_atoms", "_probs", "_K", "_index")

    def __init__(self, probs, atoms: Sequence[str] | None = None, K: int = 2):
        p = np.array(probs, dtype=float)
        if p.ndim != 1:
            raise InvalidInputError("probabilities must form a 1-D vector")
        if int(K) != K or K < 2:
            raise InvalidInputError(f"K must be an integer >= 2, got {K!r}")
        if atoms is None:
            atoms = [str(i) for i in range(len(p))]
        if len(atoms) != len(p):
            raise InvalidInputError(
                f"{len(atoms)} atoms given for {len(p)} probabilities")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidInputError("probabilities must be finite and nonnegative")
        total = float(np.sum(p))
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
        keep = p > 0
        if not keep.all():
            atoms = [a for a, k in zip(atoms, keep) if k]
            p = p[keep]
        if not _is_lazy_atoms(atoms) and len(set(atoms)) != len(atoms):
            raise InvalidInputError("atom identifiers must be unique")
        p.setflags(write=False)
        self._atoms = atoms if _is_lazy_atoms(atoms) else tuple(atoms)
        self._probs = p
        self._K = int(K)
        self._index = None

    @property
    def atoms(self) -> Sequence[str]:
        return self._atoms

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def K(self) -> int:
        return self._K

    def __len__(self) -> int:
        return len(self._probs)

    def __repr__(self) -> str:
        if len(self) <= 8:
            body = ", ".join(f"{a!r}: {p:.6g}" for a, p in zip(self._atoms, self._probs))
        else:
            body = f"{len(self)} atoms"
        return f"FiniteDistribution({{{body}}}, K={self._K})"

    def index(self, atom: str) -> int:
        """Position of ``atom`` in the atom order."""
        if _is_lazy_atoms(self._atoms):
            try:
                return self._atoms.index(atom)
            except ValueError:
                raise InvalidInputError(f"unknown atom {atom!r}") from None
        if self._index is None:
            self._index = {a: i for i, a in enumerate(self._atoms)}
        try:
            return self._index[atom]
        except KeyError:
            raise InvalidInputError(f"unknown atom {atom!r}") from None

    def prob(self, atom: str) -> float:
        return float(self._probs[self.index(atom)])

    def as_dict(self) -> dict[str, float]:
        return {a: float(p) for a, p in zip(self._atoms, self._probs)}

    def permuted(self, order) -> "FiniteDistribution":
        """Same law with atoms listed in the given order of positions."""
        order = np.asarray(order)
        return FiniteDistribution(self._probs[order],
                                  [self._atoms[i] for i in order], self._K)

    # JSON literal: {"K": 2, "atoms": {"a": 0.5, "b": 0.5}}
    @classmethod
    def from_json(cls, data: Union[str, Mapping[str, Any]]) -> "FiniteDistribution":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            K = data["K"]
            table = data["atoms"]
        except (KeyError, TypeError):
            raise InvalidInputError('distribution literal needs "K" and "atoms"') from None
        atoms = list(table)
        p = np.array([float(table[a]) for a in atoms])
        total = math.fsum(p)
        if abs(total - 1.0) > LOAD_TOL:
            raise InvalidInputError(f"distribution literal sums to {total!r}")
        return cls(p / total, atoms, K)

    def to_json(self) -> dict[str, Any]:
        return {"K": self._K, "atoms": self.as_dict()}


@dataclass(frozen=True)
class Spectrum:
    """Sorted multiset of probability values with integer multiplicities.

    ``values`` is strictly increasing; ``counts`` holds Python ints so that
    multinomial multiplicities of long blocks stay exact.
    """

    values: np.ndarray
    counts: tuple[int, ...]
    K: int = 2

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if len(v) != len(self.counts):
            raise InvalidInputError("values and counts differ in length")
        if np.any(np.diff(v) <= 0):
            raise InvalidInputError("spectrum values must be strictly increasing")
        if any(int(c) != c or c < 1 for c in self.counts):
            raise InvalidInputError("multiplicities must be positive integers")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def count_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.counts])

    @property
    def total_mass(self) -> float:
        return math.fsum(v * c for v, c in zip(self.values.tolist(), self.counts))

    @property
    def support_size(self) -> int:
        return sum(self.counts)

    @property
    def p_min(self) -> float:
        return float(self.values[0])

    def entries(self) -> list[tuple[float, int]]:
        return list(zip(self.values.tolist(), self.counts))

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (self.K == other.K and self.counts == other.counts
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.K, self.counts, self.values.tobytes()))


def compact(values, counts=None, K: int = 2) -> Spectrum:
    """Group probability values into a :class:`Spectrum`.

    Values whose relative gap is at most ``MERGE_RTOL`` are merged (ulp-level
    differences arise when equal products are evaluated in different orders);
    the merged value is the count-weighted mean.
    """
    v = np.asarray(values, dtype=float)
    if counts is None:
        c = [1] * len(v)
    else:
        c = [int(x) for x in counts]
    keep = v > 0
    order = np.argsort(v, kind="stable")
    out_v: list[float] = []
    out_c: list[int] = []
    for i in order.tolist():
        if not keep[i]:
            continue
        x, n = float(v[i]), c[i]
        if out_v and x - out_v[-1] <= MERGE_RTOL * x:
            total = out_c[-1] + n
            out_v[-1] = (out_v[-1] * out_c[-1] + x * n) / total
            out_c[-1] = total
        else:
            out_v.append(x)
            out_c.append(n)
    return Spectrum(np.array(out_v), tuple(out_c), K)


def spectrum_of(dist: FiniteDistribution) -> Spectrum:
    """Probability multiset of ``dist``; atom order is irrelevant."""
    vals, counts = np.unique(dist.probs, return_counts=True)
    return compact(vals, counts.tolist(), dist.K)


def self_information(dist: FiniteDistribution, atom: str) -> float:
    """``log_K(1 / P(atom))``."""
    p = dist.prob(atom)
    return -math.log(p) / math.log(dist.K)


def entropy(dist: Union[FiniteDistribution, Spectrum]) -> float:
    """Shannon entropy in base-``K`` units, from atoms or from a spectrum."""
    if isinstance(dist, Spectrum):
        v = dist.values
        terms = dist.count_array * v * -np.log(v)
    else:
        p = dist.probs
        terms = p * -np.log(p)
    return max(0.0, math.fsum(terms.tolist()) / math.log(dist.K))


def _as_vector(x):
    if isinstance(x, FiniteDistribution):
        return x.as_dict() if not _is_lazy_atoms(x.atoms) else x.probs
    if isinstance(x, SubDistribution):
        return x.q
    if isinstance(x, Mapping):
        return dict(x)
    return np.asarray(x, dtype=float)


def variational_distance(p, q) -> float:
    """Half the L1 distance between two mass functions.

    Accepts distributions, mappings atom -> mass (missing atoms count as 0) or
    plain vectors over a common index set (the shorter one is zero-padded).
    """
    a, b = _as_vector(p), _as_vector(q)
    if isinstance(a, dict) or isinstance(b, dict):
        if not isinstance(a, dict):
            a = dict(enumerate(np.asarray(a).tolist()))
        if not isinstance(b, dict):
            b = dict(enumerate(np.asarray(b).tolist()))
        keys = list(a) + [k for k in b if k not in a]
        return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    return 0.5 * math.fsum(np.abs(a - b).tolist())


class SubDistribution:
    """Candidate member of the class of deficient sub-distributions of ``base``.

    The values are not validated here; :func:`check_feasible` decides
    membership. ``q`` is aligned with ``base.atoms``.
    """

    __slots__ = ("base", "q", "deficiency")

    def __init__(self, base: FiniteDistribution, q, deficiency: float):
        q = np.array(q, dtype=float)
        if q.shape != base.probs.shape:
            raise InvalidInputError("sub-distribution must have one value per base atom")
        q.setflags(write=False)
        self.base = base
        self.q = q
        self.deficiency = float(deficiency)

    def __repr__(self):
        return (f"SubDistribution({len(self.q)} atoms, mass={self.mass:.12g}, "
                f"deficiency={self.deficiency:.6g})")

    @property
    def mass(self) -> float:
        return math.fsum(self.q.tolist())

    def as_dict(self) -> dict[str, float]:
        return {a: float(x) for a, x in zip(self.base.atoms, self.q)}

    def to_json(self) -> dict[str, Any]:
        return {"deficiency": self.deficiency, "q": self.as_dict()}


def check_feasible(q: SubDistribution, delta: float) -> bool:
    """Whether ``q`` is positive, dominated by its base, and has mass ``1 - delta``.

    Positivity and domination are checked exactly; the mass within
    ``FEASIBILITY_TOL``.
    """
    if not 0 <= delta < 1:
        return False
    if not np.all(q.q > 0):
        return False
    if not np.all(q.q <= q.base.probs):
        return False
    return abs(q.mass - (1.0 - delta)) <= FEASIBILITY_TOL


def shrink_q(dist: FiniteDistribution, removals) -> SubDistribution:
    """Sub-distribution ``P - removal`` with deficiency equal to the total removal.

    ``removals`` is a mapping atom -> amount (unlisted atoms keep their mass)
    or a vector aligned with ``dist.atoms``. Each removal must lie in
    ``[0, P(x))`` so the result stays strictly positive.
    """
    r = np.zeros(len(dist))
    if isinstance(removals, Mapping):
        for atom, amount in removals.items():
            r[dist.index(atom)] = float(amount)
    else:
        r = np.asarray(removals, dtype=float)
        if r.shape != dist.probs.shape:
            raise InvalidInputError("removal vector must align with the atoms")
    if np.any(r < 0):
        raise InvalidInputError("removals must be nonnegative")
    bad = np.nonzero(r >= dist.probs)[0]
    if len(bad):
        atom = dist.atoms[int(bad[0])]
        raise InvalidInputError(
            f"removal {r[bad[0]]!r} from atom {atom!r} would leave it without mass")
    q = dist.probs - r
    return SubDistribution(dist, q, math.fsum(r.tolist()))
