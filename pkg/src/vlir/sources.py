"""Source models and their blocklength-``n`` laws.

Product laws depend on a block only through its symbol counts, so block
spectra are built from compositions of ``n`` and never enumerate atoms.
Explicit block distributions name atoms by their symbol strings; the atom
list is generated lazily.
"""
from __future__ import annotations

import itertools
import json
import math
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np

from .core import (CapacityError, FiniteDistribution, InvalidInputError,
                   Spectrum, compact, spectrum_of)

#: Maximum number of symbol compositions enumerated for a product spectrum.
COMPOSITION_BUDGET = 10**6
#: Maximum number of atoms in an explicit block distribution.
EXPANSION_BUDGET = 2**22


class BlockAtoms(Sequence):
    """All length-``n`` strings over ``symbols`` in lexicographic product order.

    Single-character symbols are concatenated; longer ones are joined by
    commas so atom identifiers stay parseable.
    """

    unique_by_construction = True

    def __init__(self, symbols: Sequence[str], n: int):
        self.symbols = tuple(symbols)
        self.n = int(n)
        self.sep = "" if all(len(s) == 1 for s in self.symbols) else ","
        self._pos = {s: i for i, s in enumerate(self.symbols)}

    def __len__(self):
        return len(self.symbols) ** self.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        i = int(i)
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        s = len(self.symbols)
        out = []
        for _ in range(self.n):
            i, d = divmod(i, s)
            out.append(self.symbols[d])
        return self.sep.join(reversed(out))

    def __iter__(self):
        for t in itertools.product(self.symbols, repeat=self.n):
            yield self.sep.join(t)

    def index(self, atom, start=0, stop=None):
        parts = atom.split(",") if self.sep else list(atom)
        if len(parts) != self.n or any(p not in self._pos for p in parts):
            raise ValueError(f"{atom!r} is not a block atom")
        k = 0
        for p in parts:
            k = k * len(self.symbols) + self._pos[p]
        return k

    def __contains__(self, atom):
        try:
            self.index(atom)
        except (ValueError, AttributeError):
            return False
        return True

    def __eq__(self, other):
        if isinstance(other, BlockAtoms):
            return self.symbols == other.symbols and self.n == other.n
        return NotImplemented

    def __hash__(self):
        return hash((self.symbols, self.n))

    def __repr__(self):
        return f"BlockAtoms({self.symbols!r}, n={self.n})"


class SourceModel:
    """A general source at desk scale.

    Kinds
    -----
    ``iid``
        Product of a single symbol law.
    ``mixture``
        ``alpha * P1^n + (1 - alpha) * P2^n`` for two i.i.d. components.
    ``explicit``
        A table mapping blocklength to a given distribution.

    Use the :meth:`iid`, :meth:`mixture` and :meth:`explicit` constructors.
    """

    def __init__(self, kind: str, K: int = 2, *, symbols: FiniteDistribution | None = None,
                 alpha: float | None = None, components: Sequence["SourceModel"] = (),
                 table: Mapping[int, FiniteDistribution] | None = None):
        if kind not in ("iid", "mixture", "explicit"):
            raise InvalidInputError(f"unknown source kind {kind!r}")
        if int(K) != K or K < 2:
            raise InvalidInputError(f"K must be an integer >= 2, got {K!r}")
        self.kind = kind
        self.K = int(K)
        self.symbols = symbols
        self.alpha = alpha
        self.components = tuple(components)
        self.table = dict(table) if table is not None else None
        if kind == "iid" and symbols is None:
            raise InvalidInputError("an i.i.d. source needs a symbol law")
        if kind == "mixture":
            if alpha is None or not 0 < alpha < 1:
                raise InvalidInputError(f"mixture weight must lie in (0, 1), got {alpha!r}")
            if len(self.components) != 2 or any(c.kind != "iid" for c in self.components):
                raise InvalidInputError("a mixture needs exactly two i.i.d. components")
        if kind == "explicit" and not self.table:
            raise InvalidInputError("an explicit source needs a nonempty table")

    @classmethod
    def iid(cls, symbols: Mapping[str, float], K: int = 2) -> "SourceModel":
        law = FiniteDistribution.from_json({"K": K, "atoms": dict(symbols)})
        return cls("iid", K, symbols=law)

    @classmethod
    def bernoulli(cls, p: float, K: int = 2) -> "SourceModel":
        """Binary i.i.d. source with ``P(1) = p``."""
        return cls.iid({"0": 1.0 - p, "1": p}, K)

    @classmethod
    def mixture(cls, alpha: float, first: "SourceModel", second: "SourceModel") -> "SourceModel":
        if first.K != second.K:
            raise InvalidInputError("mixture components must share K")
        return cls("mixture", first.K, alpha=alpha, components=(first, second))

    @classmethod
    def explicit(cls, table: Mapping[int, FiniteDistribution]) -> "SourceModel":
        Ks = {d.K for d in table.values()}
        if len(Ks) != 1:
            raise InvalidInputError("explicit table entries must share K")
        return cls("explicit", Ks.pop(), table={int(n): d for n, d in table.items()})

    @classmethod
    def from_json(cls, data) -> "SourceModel":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, Mapping) or "kind" not in data:
            raise InvalidInputError('source spec needs a "kind"')
        kind = data["kind"]
        if kind == "iid":
            return cls.iid(data["symbols"], data.get("K", 2))
        if kind == "mixture":
            comps = data.get("components", [])
            if len(comps) != 2:
                raise InvalidInputError("a mixture needs exactly two components")
            first, second = (cls.from_json({"K": data.get("K", 2), **c}) for c in comps)
            return cls.mixture(data["alpha"], first, second)
        if kind == "explicit":
            K = data.get("K", 2)
            table = {int(n): FiniteDistribution.from_json({"K": K, "atoms": atoms})
                     for n, atoms in data["table"].items()}
            return cls.explicit(table)
        raise InvalidInputError(f"unknown source kind {kind!r}")

    def to_json(self) -> dict[str, Any]:
        if self.kind == "iid":
            return {"kind": "iid", "K": self.K, "symbols": self.symbols.as_dict()}
        if self.kind == "mixture":
            return {"kind": "mixture", "K": self.K, "alpha": self.alpha,
                    "components": [c.to_json() for c in self.components]}
        return {"kind": "explicit", "K": self.K,
                "table": {str(n): d.as_dict() for n, d in sorted(self.table.items())}}

    def __repr__(self):
        return f"SourceModel({json.dumps(self.to_json(), sort_keys=True)})"

    def alphabet(self) -> tuple[str, ...]:
        if self.kind == "iid":
            return tuple(self.symbols.atoms)
        if self.kind == "mixture":
            out = list(self.components[0].alphabet())
            out += [s for s in self.components[1].alphabet() if s not in out]
            return tuple(out)
        raise InvalidInputError("an explicit source has no symbol alphabet")


def _symbol_matrix(src: SourceModel) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Alphabet, per-component symbol probabilities and component weights."""
    alphabet = src.alphabet()
    comps = [src] if src.kind == "iid" else list(src.components)
    weights = np.array([1.0]) if src.kind == "iid" else np.array([src.alpha, 1.0 - src.alpha])
    mat = np.zeros((len(comps), len(alphabet)))
    for r, comp in enumerate(comps):
        for a, p in comp.symbols.as_dict().items():
            mat[r, alphabet.index(a)] = p
    return alphabet, mat, weights


def compositions(n: int, s: int) -> np.ndarray:
    """All vectors of ``s`` nonnegative counts summing to ``n`` (rows)."""
    total = math.comb(n + s - 1, s - 1)
    if total > COMPOSITION_BUDGET:
        raise CapacityError(
            f"{total} compositions for n={n} over {s} symbols exceed the budget "
            f"{COMPOSITION_BUDGET}; reduce n")
    if s == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for first in range(n, -1, -1):
        rest = compositions(n - first, s - 1)
        rows.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.concatenate(rows)


def _composition_values(mat: np.ndarray, weights: np.ndarray, comp: np.ndarray) -> np.ndarray:
    per_comp = np.prod(mat[:, None, :] ** comp[None, :, :], axis=2)
    return weights @ per_comp


def _multinomial(n: int, comp: np.ndarray) -> list[int]:
    fact = [math.factorial(k) for k in range(n + 1)]
    out = []
    for row in comp.tolist():
        d = 1
        for c in row:
            d *= fact[c]
        out.append(fact[n] // d)
    return out


def block_spectrum(src: SourceModel, n: int) -> Spectrum:
    """Spectrum of the blocklength-``n`` law of ``src``."""
    if n < 1:
        raise InvalidInputError(f"blocklength must be positive, got {n}")
    if src.kind == "explicit":
        return spectrum_of(_table_entry(src, n))
    _, mat, weights = _symbol_matrix(src)
    comp = compositions(n, mat.shape[1])
    values = _composition_values(mat, weights, comp)
    return compact(values, _multinomial(n, comp), src.K)


def _table_entry(src: SourceModel, n: int) -> FiniteDistribution:
    try:
        return src.table[n]
    except KeyError:
        raise CapacityError(
            f"explicit source has no distribution for n={n}; "
            f"available: {sorted(src.table)}") from None


def block_distribution(src: SourceModel, n: int) -> FiniteDistribution:
    """Explicit blocklength-``n`` law; atoms are symbol strings."""
    if n < 1:
        raise InvalidInputError(f"blocklength must be positive, got {n}")
    if src.kind == "explicit":
        return _table_entry(src, n)
    alphabet, mat, weights = _symbol_matrix(src)
    s = len(alphabet)
    size = s**n
    if size > EXPANSION_BUDGET:
        raise CapacityError(
            f"{s}^{n} = {size} block atoms exceed the expansion budget {EXPANSION_BUDGET}; "
            "use the spectrum instead")
    comp = compositions(n, s)
    values = _composition_values(mat, weights, comp)
    # per-atom symbol counts, then look up the composition's value
    idx = np.arange(size, dtype=np.int64)
    counts = np.zeros((size, s), dtype=np.int64)
    for _ in range(n):
        idx, digit = np.divmod(idx, s)
        for k in range(s):
            counts[:, k] += digit == k
    radix = (n + 1) ** np.arange(s, dtype=np.int64)
    comp_keys = comp @ radix
    order = np.argsort(comp_keys)
    pos = np.searchsorted(comp_keys[order], counts @ radix)
    probs = values[order][pos]
    atoms = BlockAtoms(alphabet, n)
    if np.all(probs > 0):
        return FiniteDistribution(probs, atoms, src.K)
    return FiniteDistribution(probs, list(atoms), src.K)
