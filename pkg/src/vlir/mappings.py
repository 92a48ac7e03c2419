"""Variable-length maps from source atoms to strings, and their metrics.

A string over the size-``K`` alphabet is stored as ``(length, index)`` with
``0 <= index < K**length``; the null string is ``(0, 0)``. Strings are never
materialised, and strings a map does not use are accounted for in aggregate.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import FiniteDistribution, InvalidInputError, variational_distance  # noqa: F401


def _index_array(indices) -> np.ndarray:
    vals = list(indices) if not isinstance(indices, np.ndarray) else indices
    try:
        arr = np.asarray(vals, dtype=np.int64)
    except OverflowError:
        arr = np.array([int(i) for i in vals], dtype=object)
    return arr


class VariableLengthMap:
    """Assignment of every atom to a string ``(length, index)``.

    ``lengths`` and ``indices`` are aligned with ``atoms``. Indices that do
    not fit in 64 bits are kept as Python ints.
    """

    __slots__ = ("atoms", "lengths", "indices", "K")

    def __init__(self, atoms: Sequence[str], lengths, indices, K: int = 2):
        lengths = np.asarray(lengths, dtype=np.int64)
        indices = _index_array(indices)
        if lengths.shape != (len(atoms),) or indices.shape != (len(atoms),):
            raise InvalidInputError("lengths and indices must align with the atoms")
        if int(K) != K or K < 2:
            raise InvalidInputError(f"K must be an integer >= 2, got {K!r}")
        if len(lengths) and lengths.min() < 0:
            raise InvalidInputError("string lengths must be nonnegative")
        if len(indices) and min(indices) < 0:
            raise InvalidInputError("string indices must be nonnegative")
        for m in np.unique(lengths).tolist():
            top = max(indices[lengths == m])
            if int(top) >= K**m:
                raise InvalidInputError(
                    f"string index {int(top)} does not exist at length {m} (K={K})")
        lengths.setflags(write=False)
        self.atoms = atoms
        self.lengths = lengths
        self.indices = indices
        self.K = int(K)

    @classmethod
    def from_assignment(cls, assignment: Mapping[str, tuple[int, int]], K: int = 2) -> "VariableLengthMap":
        atoms = list(assignment)
        lengths = [int(assignment[a][0]) for a in atoms]
        indices = [int(assignment[a][1]) for a in atoms]
        return cls(atoms, lengths, indices, K)

    @property
    def assignment(self) -> dict[str, tuple[int, int]]:
        return {a: (int(m), int(i)) for a, m, i in zip(self.atoms, self.lengths, self.indices)}

    def __len__(self):
        return len(self.lengths)

    def __repr__(self):
        return f"VariableLengthMap({len(self)} atoms, K={self.K})"

    # JSON: {"K": 2, "assign": {"atom": [m, index], ...}}
    def to_json(self) -> dict[str, Any]:
        return {"K": self.K, "assign": {a: [m, i] for a, (m, i) in self.assignment.items()}}

    @classmethod
    def from_json(cls, data) -> "VariableLengthMap":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls.from_assignment({a: tuple(v) for a, v in data["assign"].items()},
                                       data["K"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed map literal: {exc}") from None


def _aligned(phi: VariableLengthMap, dist: FiniteDistribution):
    if phi.K != dist.K:
        raise InvalidInputError(f"map has K={phi.K} but the distribution has K={dist.K}")
    if phi.atoms is dist.atoms or (len(phi) == len(dist) and phi.atoms == dist.atoms):
        return phi.lengths, phi.indices
    pos = {a: i for i, a in enumerate(phi.atoms)}
    try:
        sel = np.array([pos[a] for a in dist.atoms], dtype=np.int64)
    except KeyError as exc:
        raise InvalidInputError(f"atom {exc.args[0]!r} is not covered by the map") from None
    return phi.lengths[sel], phi.indices[sel]


@dataclass(frozen=True)
class LengthClass:
    """Atoms sent to strings of length ``m``: their mass and per-string loads."""

    m: int
    mass: float
    indices: np.ndarray
    loads: np.ndarray

    @property
    def used_strings(self) -> dict[int, float]:
        return {int(i): float(x) for i, x in zip(self.indices, self.loads)}

    @property
    def n_used(self) -> int:
        return len(self.loads)


def length_classes(phi: VariableLengthMap, dist: FiniteDistribution) -> list[LengthClass]:
    """One class per string length carrying positive mass, in increasing length."""
    lengths, indices = _aligned(phi, dist)
    p = dist.probs
    out = []
    if len(p) < 64:
        # small maps: plain dicts beat numpy call overhead
        table: dict[int, dict[int, float]] = {}
        for m, i, x in zip(lengths.tolist(), [int(i) for i in indices], p.tolist()):
            row = table.setdefault(m, {})
            row[i] = row.get(i, 0.0) + x
        for m in sorted(table):
            row = table[m]
            keys = sorted(row)
            loads = np.array([row[k] for k in keys])
            out.append(LengthClass(m, math.fsum(loads.tolist()), _index_array(keys), loads))
        return out
    for m in np.unique(lengths).tolist():
        sel = lengths == m
        used, inverse = np.unique(indices[sel], return_inverse=True)
        loads = np.bincount(inverse.ravel(), weights=p[sel], minlength=len(used))
        out.append(LengthClass(int(m), math.fsum(loads.tolist()), used, loads))
    return out


def _unused_fraction(cls: LengthClass, K: int) -> float:
    # exact integer ratio (K^m - used) / K^m
    total = K**cls.m
    return (total - cls.n_used) / total


def _class_terms(cls: LengthClass, K: int) -> tuple[float, float]:
    """Unnormalised and class-conditional distances of one length class to uniform."""
    u = 1.0 / K**cls.m
    joint = math.fsum(np.abs(cls.loads - cls.mass * u).tolist()) + cls.mass * _unused_fraction(cls, K)
    cond = math.fsum(np.abs(cls.loads / cls.mass - u).tolist()) + _unused_fraction(cls, K)
    return 0.5 * joint, 0.5 * cond


def mean_length(phi: VariableLengthMap, dist: FiniteDistribution) -> float:
    """Expected output length ``sum_m m P[D_m]``."""
    lengths, _ = _aligned(phi, dist)
    return math.fsum((dist.probs * lengths).tolist())


def avg_variational_distance(phi: VariableLengthMap, dist: FiniteDistribution) -> float:
    """Distance between the output law and the length-matched uniform law.

    Within each length class the reference puts ``P[D_m] / K^m`` on every
    string; the ``K^m - used`` untouched strings contribute that amount each.
    """
    K = phi.K
    return math.fsum(_class_terms(c, K)[0] for c in length_classes(phi, dist))


def avg_distance_by_mixture(phi: VariableLengthMap, dist: FiniteDistribution) -> float:
    """The same distance computed as ``sum_m P[D_m] d(P_{phi | m}, uniform_m)``."""
    K = phi.K
    return math.fsum(c.mass * _class_terms(c, K)[1] for c in length_classes(phi, dist))


def per_class_sup_distance(phi: VariableLengthMap, dist: FiniteDistribution) -> float:
    """Largest distance between a class-conditional output law and uniform on its length."""
    K = phi.K
    return max(_class_terms(c, K)[1] for c in length_classes(phi, dist))


def class_conditional(phi: VariableLengthMap, dist: FiniteDistribution, m: int) -> FiniteDistribution:
    """Law of the source given that its image has length ``m``."""
    lengths, _ = _aligned(phi, dist)
    sel = np.nonzero(lengths == m)[0]
    if len(sel) == 0:
        raise InvalidInputError(f"no source mass is mapped to length {m}")
    p = dist.probs[sel]
    return FiniteDistribution(p / math.fsum(p.tolist()), [dist.atoms[i] for i in sel], dist.K)


@dataclass(frozen=True)
class MapMetrics:
    mean_length: float
    d_bar: float
    sup_class_distance: float


def evaluate(phi: VariableLengthMap, dist: FiniteDistribution) -> MapMetrics:
    """All three metrics from a single pass over the length classes."""
    K = phi.K
    classes = length_classes(phi, dist)
    terms = [_class_terms(c, K) for c in classes]
    return MapMetrics(
        mean_length=math.fsum(c.m * c.mass for c in classes),
        d_bar=math.fsum(t[0] for t in terms),
        sup_class_distance=max(t[1] for t in terms),
    )


METRIC_COLUMNS = ("map_id", "n", "mean_length", "d_bar", "sup_class_distance")


def metrics_csv(rows: Sequence[tuple[str, int, MapMetrics]]) -> str:
    """CSV report with one line per evaluated map."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for map_id, n, mm in rows:
        w.writerow([map_id, n, repr(mm.mean_length), repr(mm.d_bar), repr(mm.sup_class_distance)])
    return buf.getvalue()
