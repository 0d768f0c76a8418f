"""Probability tables over the patterns of a centered cube Lambda_k."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from ..exceptions import PatternCodeError, ShapeMismatchError
from ..lattice.patterns import PatternKey, code_fits, pattern_space_size

logger = logging.getLogger(__name__)

EXACT = "exact"
EMPIRICAL = "empirical"


def _key_to_int(key: PatternKey, alphabet_size: int) -> int:
    if isinstance(key, tuple):
        code = 0
        for s in key:
            code = code * alphabet_size + int(s)
        return code
    return int(key)


def _int_to_key(code: int, alphabet_size: int, n_sites: int) -> PatternKey:
    if code_fits(alphabet_size, n_sites):
        return int(code)
    symbols = []
    for _ in range(n_sites):
        code, s = divmod(code, alphabet_size)
        symbols.append(s)
    return tuple(reversed(symbols))


@dataclass(frozen=True, eq=False)
class PatternDistribution:
    """Law of the Lambda_k pattern: a dense probability vector indexed by
    pattern code, or a sparse ``key -> probability`` map for large pattern
    spaces.
    """

    k: int
    d: int
    alphabet_size: int
    probs: Optional[np.ndarray] = None
    sparse: Optional[Dict[PatternKey, float]] = None
    kind: str = EXACT
    sample_count: Optional[int] = None
    tolerance: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        if (self.probs is None) == (self.sparse is None):
            raise ValueError("exactly one of probs / sparse must be given")
        if self.kind not in (EXACT, EMPIRICAL):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.probs is not None:
            probs = np.array(self.probs, dtype=float)
            if probs.shape != (self.n_patterns,):
                raise ShapeMismatchError(f"expected {self.n_patterns} probabilities, got shape {probs.shape}")
            probs.setflags(write=False)
            object.__setattr__(self, "probs", probs)
            values = probs
        else:
            object.__setattr__(self, "sparse", {k: float(v) for k, v in self.sparse.items() if v != 0.0})
            values = np.fromiter(self.sparse.values(), dtype=float)
        if values.size and values.min() < 0:
            raise ValueError("probabilities must be nonnegative")
        total = float(values.sum())
        if abs(total - 1.0) > self.tolerance:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def n_sites(self) -> int:
        return (2 * self.k + 1) ** self.d

    @property
    def n_patterns(self) -> int:
        return pattern_space_size(self.alphabet_size, self.n_sites)

    @property
    def is_dense(self) -> bool:
        return self.probs is not None

    @classmethod
    def from_counts(
        cls,
        counts: Union[np.ndarray, Mapping[PatternKey, int]],
        k: int,
        d: int,
        alphabet_size: int,
        dense_cap: int = 2**20,
    ) -> "PatternDistribution":
        """Normalized empirical law from pattern counts (dense array or key map)."""
        n_patterns = pattern_space_size(alphabet_size, (2 * k + 1) ** d)
        if isinstance(counts, Mapping):
            total = int(sum(counts.values()))
            if n_patterns <= dense_cap:
                probs = np.zeros(n_patterns)
                for key, c in counts.items():
                    probs[_key_to_int(key, alphabet_size)] = c
                return cls(k, d, alphabet_size, probs=probs / total, kind=EMPIRICAL, sample_count=total)
            sparse = {key: c / total for key, c in counts.items()}
            return cls(k, d, alphabet_size, sparse=sparse, kind=EMPIRICAL, sample_count=total)
        counts = np.asarray(counts, dtype=float)
        total = int(counts.sum())
        return cls(k, d, alphabet_size, probs=counts / total, kind=EMPIRICAL, sample_count=total)

    @classmethod
    def uniform(cls, k: int, d: int, alphabet_size: int) -> "PatternDistribution":
        n_patterns = pattern_space_size(alphabet_size, (2 * k + 1) ** d)
        return cls(k, d, alphabet_size, probs=np.full(n_patterns, 1.0 / n_patterns))

    @classmethod
    def point_mass(cls, key: PatternKey, k: int, d: int, alphabet_size: int) -> "PatternDistribution":
        n_sites = (2 * k + 1) ** d
        if code_fits(alphabet_size, n_sites) and pattern_space_size(alphabet_size, n_sites) <= 2**20:
            probs = np.zeros(pattern_space_size(alphabet_size, n_sites))
            probs[_key_to_int(key, alphabet_size)] = 1.0
            return cls(k, d, alphabet_size, probs=probs)
        return cls(k, d, alphabet_size, sparse={key: 1.0})

    def prob(self, key: PatternKey) -> float:
        if self.is_dense:
            code = _key_to_int(key, self.alphabet_size)
            if not 0 <= code < self.n_patterns:
                raise PatternCodeError(f"pattern code {code} outside [0, {self.n_patterns})")
            return float(self.probs[code])
        return self.sparse.get(key, 0.0)

    def items(self) -> Iterator[Tuple[PatternKey, float]]:
        """(key, probability) for every pattern with positive mass."""
        if self.is_dense:
            for code in np.flatnonzero(self.probs):
                yield _int_to_key(int(code), self.alphabet_size, self.n_sites), float(self.probs[code])
        else:
            yield from self.sparse.items()

    def check_compatible(self, other: "PatternDistribution") -> None:
        """Raise ShapeMismatchError unless both laws live on the same pattern space."""
        if (self.k, self.d, self.alphabet_size) != (other.k, other.d, other.alphabet_size):
            raise ShapeMismatchError(
                f"pattern spaces differ: (k={self.k}, d={self.d}, |S|={self.alphabet_size}) vs "
                f"(k={other.k}, d={other.d}, |S|={other.alphabet_size})"
            )

    def to_text(self) -> str:
        """Two-column table ``code probability``; floats are written with repr for exact round trips."""
        header = f"# k={self.k} d={self.d} alphabet_size={self.alphabet_size} kind={self.kind}"
        if self.sample_count is not None:
            header += f" samples={self.sample_count}"
        lines = [header]
        lines += [f"{_key_to_int(key, self.alphabet_size)} {p!r}" for key, p in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, dense_cap: int = 2**20) -> "PatternDistribution":
        lines = text.strip().splitlines()
        meta = dict(token.split("=") for token in lines[0].lstrip("#").split())
        k, d, q = int(meta["k"]), int(meta["d"]), int(meta["alphabet_size"])
        samples = int(meta["samples"]) if "samples" in meta else None
        n_sites = (2 * k + 1) ** d
        entries = [(int(code), float(p)) for code, p in (line.split() for line in lines[1:] if line.strip())]
        if pattern_space_size(q, n_sites) <= dense_cap:
            probs = np.zeros(pattern_space_size(q, n_sites))
            for code, p in entries:
                probs[code] = p
            return cls(k, d, q, probs=probs, kind=meta["kind"], sample_count=samples)
        sparse = {_int_to_key(code, q, n_sites): p for code, p in entries}
        return cls(k, d, q, sparse=sparse, kind=meta["kind"], sample_count=samples)

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def read(cls, path: Union[str, Path]) -> "PatternDistribution":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read())


def aligned_masses(p: PatternDistribution, q: PatternDistribution) -> Tuple[np.ndarray, np.ndarray, list]:
    """Probabilities of both laws over the union of their supports.

    Returns:
        (p masses, q masses, keys) with matching order

    Raises:
        ShapeMismatchError: If the pattern spaces differ
    """
    p.check_compatible(q)
    if p.is_dense and q.is_dense:
        support = np.flatnonzero((p.probs > 0) | (q.probs > 0))
        keys = [_int_to_key(int(c), p.alphabet_size, p.n_sites) for c in support]
        return p.probs[support], q.probs[support], keys
    p_items = dict(p.items())
    q_items = dict(q.items())
    keys = sorted(set(p_items) | set(q_items), key=lambda key: _key_to_int(key, p.alphabet_size))
    return (
        np.array([p_items.get(key, 0.0) for key in keys]),
        np.array([q_items.get(key, 0.0) for key in keys]),
        keys,
    )
