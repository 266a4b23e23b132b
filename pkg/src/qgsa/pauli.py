"""Pauli words and sums in the symplectic (x-mask, z-mask) representation.

A word on ``n`` qubits is stored as two integers. Bit ``j`` of ``x`` marks an
X component on qubit ``j`` and bit ``j`` of ``z`` a Z component; both bits set
means Y. The word is the Hermitian operator ``i**popcount(x & z) X^x Z^z``.

Text labels read left to right from qubit 0, so ``"XZ"`` is X on qubit 0 and
Z on qubit 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

PRUNE_TOL = 1e-12

_LABEL_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_LABEL = {v: k for k, v in _LABEL_TO_BITS.items()}
_PHASES = (1, 1j, -1, -1j)

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class EmptyHypergraphError(ValueError):
    """The Hamiltonian has no non-identity terms."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliWord:
    n_qubits: int
    x: int
    z: int

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if self.n_qubits < 1 or not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError(f"masks do not fit {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> PauliWord:
        x = z = 0
        for j, ch in enumerate(label.upper()):
            try:
                bx, bz = _LABEL_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli character {ch!r} in {label!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliWord:
        return cls(n_qubits, 0, 0)

    @property
    def label(self) -> str:
        return "".join(
            _BITS_TO_LABEL[((self.x >> j) & 1, (self.z >> j) & 1)]
            for j in range(self.n_qubits)
        )

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> frozenset[int]:
        m = self.x | self.z
        return frozenset(j for j in range(self.n_qubits) if (m >> j) & 1)

    def axis(self, qubit: int) -> str:
        return _BITS_TO_LABEL[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    def commutes(self, other: PauliWord) -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def to_matrix(self) -> np.ndarray:
        # qubit 0 is the least significant bit, i.e. the rightmost kron factor
        out = np.ones((1, 1), dtype=complex)
        for ch in self.label:
            out = np.kron(_SINGLE[ch], out)
        return out

    def __str__(self) -> str:
        return self.label


def word_multiply(a: PauliWord, b: PauliWord) -> tuple[complex, PauliWord]:
    """Return ``(phase, word)`` with ``phase * word == a @ b``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    x, z = a.x ^ b.x, a.z ^ b.z
    k = (_popcount(a.x & a.z) + _popcount(b.x & b.z) - _popcount(x & z)
         + 2 * _popcount(a.z & b.x)) % 4
    return _PHASES[k], PauliWord(a.n_qubits, x, z)


def _mul_masks(ax: int, az: int, bx: int, bz: int) -> tuple[int, int, int]:
    """Mask-level product used in hot loops; returns (phase index, x, z)."""
    x, z = ax ^ bx, az ^ bz
    k = (_popcount(ax & az) + _popcount(bx & bz) - _popcount(x & z)
         + 2 * _popcount(az & bx)) % 4
    return k, x, z


class PauliSum:
    """Linear combination of Pauli words with complex coefficients.

    Instances are treated as immutable; arithmetic returns new objects.
    Coefficients with magnitude below ``prune`` are dropped on construction.
    """

    __slots__ = ("n_qubits", "_terms", "_compiled")

    def __init__(self, n_qubits: int, terms=None, prune: float = PRUNE_TOL):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self._compiled = None
        clean: dict[tuple[int, int], complex] = {}
        limit = 1 << n_qubits
        for key, c in (terms or {}).items():
            if isinstance(key, PauliWord):
                if key.n_qubits != n_qubits:
                    raise DimensionError("word size does not match sum size")
                key = (key.x, key.z)
            x, z = key
            if not (0 <= x < limit and 0 <= z < limit):
                raise ValueError(f"masks do not fit {n_qubits} qubits")
            c = complex(c)
            if abs(c) >= prune:
                clean[(x, z)] = c
        self._terms = clean

    # construction helpers

    @classmethod
    def from_terms(cls, n_qubits: int, pairs: Iterable[tuple[complex, str | PauliWord]],
                   prune: float = PRUNE_TOL) -> PauliSum:
        acc: dict[tuple[int, int], complex] = {}
        for c, w in pairs:
            if isinstance(w, str):
                w = PauliWord.from_label(w)
            if w.n_qubits != n_qubits:
                raise DimensionError(f"label {w.label!r} is not {n_qubits} qubits long")
            acc[(w.x, w.z)] = acc.get((w.x, w.z), 0) + c
        return cls(n_qubits, acc, prune)

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> PauliSum:
        w = PauliWord.from_label(label)
        return cls(w.n_qubits, {(w.x, w.z): coeff})

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def single(cls, n_qubits: int, qubit: int, axis: str, coeff: complex = 1.0) -> PauliSum:
        bx, bz = _LABEL_TO_BITS[axis]
        return cls(n_qubits, {(bx << qubit, bz << qubit): coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits)

    # container protocol

    @property
    def terms(self) -> dict[tuple[int, int], complex]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[PauliWord, complex]]:
        for (x, z), c in self._terms.items():
            yield PauliWord(self.n_qubits, x, z), c

    def sorted_items(self) -> list[tuple[PauliWord, complex]]:
        """Terms in canonical order (lexicographic by ``(x, z)`` masks)."""
        return [(PauliWord(self.n_qubits, x, z), self._terms[(x, z)])
                for x, z in sorted(self._terms)]

    def coefficient(self, word: PauliWord | str) -> complex:
        if isinstance(word, str):
            word = PauliWord.from_label(word)
        return self._terms.get((word.x, word.z), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.items())

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        parts = [f"{c:.6g}*{w.label}" for w, c in self.sorted_items()[:6]]
        more = "" if len(self) <= 6 else f" + ... ({len(self)} terms)"
        return f"PauliSum({' + '.join(parts) or '0'}{more})"

    # arithmetic

    def _check(self, other: PauliSum):
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliSum(self.n_qubits, acc)

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.n_qubits, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, {k: c * other for k, c in self._terms.items()})
        if isinstance(other, PauliSum):
            return self @ other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __matmul__(self, other: PauliSum) -> PauliSum:
        self._check(other)
        acc: dict[tuple[int, int], complex] = {}
        for (ax, az), ca in self._terms.items():
            for (bx, bz), cb in other._terms.items():
                k, x, z = _mul_masks(ax, az, bx, bz)
                acc[(x, z)] = acc.get((x, z), 0) + _PHASES[k] * ca * cb
        return PauliSum(self.n_qubits, acc)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, frozenset(self._terms.items())))

    def allclose(self, other: PauliSum, atol: float = 1e-10) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= atol for k in keys)

    def dagger(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real_part(self) -> PauliSum:
        """Drop imaginary coefficient parts (words are self-adjoint)."""
        return PauliSum(self.n_qubits, {k: c.real for k, c in self._terms.items()})

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        idx = np.arange(dim)
        for (x, z), c in self._terms.items():
            phase = _PHASES[_popcount(x & z) % 4]
            # column j maps to row j ^ x with sign (-1)^popcount(j & z)
            signs = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int64)
            out[idx ^ x, idx] += c * phase * signs
        return out

    def compiled(self):
        """Terms grouped by x-mask for the statevector kernels (cached)."""
        if self._compiled is None:
            from .statevector import CompiledPauliSum
            self._compiled = CompiledPauliSum(self)
        return self._compiled


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``a b - b a``; commuting word pairs are skipped."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    acc: dict[tuple[int, int], complex] = {}
    for (ax, az), ca in a._terms.items():
        for (bx, bz), cb in b._terms.items():
            if (_popcount(ax & bz) + _popcount(az & bx)) % 2 == 0:
                continue
            k, x, z = _mul_masks(ax, az, bx, bz)
            # anticommuting words: ab - ba = 2ab
            acc[(x, z)] = acc.get((x, z), 0) + 2 * _PHASES[k] * ca * cb
    return PauliSum(a.n_qubits, acc)


# interaction hypergraph


@dataclass(frozen=True)
class InteractionHypergraph:
    n_vertices: int
    edges: tuple[frozenset[int], ...]

    @property
    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for e in self.edges:
            for v in e:
                deg[v] += 1
        return deg

    @property
    def d(self) -> int:
        return max(self.degrees)

    @property
    def k(self) -> int:
        return max(len(e) for e in self.edges)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for r, e in enumerate(self.edges):
            for v in e:
                inc[v].append(r)
        return inc


def _edge_order(e: frozenset[int]):
    return (len(e), sorted(e))


def hypergraph_of(h: PauliSum) -> InteractionHypergraph:
    """Hyperedges are the distinct supports of the non-identity words of ``h``."""
    supports = {x | z for (x, z) in h._terms if x | z}
    if not supports:
        raise EmptyHypergraphError("Hamiltonian has only an identity component")
    edges = [frozenset(j for j in range(h.n_qubits) if (m >> j) & 1) for m in supports]
    edges.sort(key=_edge_order)
    return InteractionHypergraph(h.n_qubits, tuple(edges))


def is_triangle_free(g: InteractionHypergraph) -> bool:
    """No pair i, j in an edge R0 shares a third vertex through edges R1, R2.

    R0, R1 and R2 must be pairwise distinct.
    """
    inc = g.incident()
    for r0, e0 in enumerate(g.edges):
        for i, j in itertools.combinations(sorted(e0), 2):
            # vertices reachable from i (resp. j) through an edge other than R0
            via_i: dict[int, set[int]] = {}
            for r1 in inc[i]:
                if r1 == r0:
                    continue
                for kappa in g.edges[r1]:
                    if kappa != i and kappa != j:
                        via_i.setdefault(kappa, set()).add(r1)
            if not via_i:
                continue
            for r2 in inc[j]:
                if r2 == r0:
                    continue
                for kappa in g.edges[r2]:
                    r1s = via_i.get(kappa)
                    if r1s and (len(r1s) > 1 or r2 not in r1s):
                        return False
    return True


def strict_local_norm(h: PauliSum, k: int | None = None) -> float:
    """Sum of squared coefficients over words of weight exactly ``k``.

    Defaults ``k`` to the locality of ``h``.
    """
    if k is None:
        k = hypergraph_of(h).k
    if k <= 0:
        raise ValueError("k must be positive")
    return float(sum(abs(c) ** 2 for (x, z), c in h._terms.items()
                     if _popcount(x | z) == k))


def identity_coefficient(h: PauliSum) -> float:
    """Coefficient of the identity word, i.e. Tr(H) / 2**n."""
    return float(h._terms.get((0, 0), 0j).real)


def locality(h: PauliSum) -> int:
    return max((_popcount(x | z) for (x, z) in h._terms), default=0)


# text format


def dumps(h: PauliSum, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    for w, c in h.sorted_items():
        lines.append(f"{c.real!r} {c.imag!r} {w.label}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> PauliSum:
    pairs = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected '<re> <im> <string>'")
        re_, im_, label = parts
        if n is None:
            n = len(label)
        elif len(label) != n:
            raise ValueError(f"line {lineno}: string length {len(label)} != {n}")
        pairs.append((complex(float(re_), float(im_)), PauliWord.from_label(label)))
    if n is None:
        raise ValueError("no terms found")
    return PauliSum.from_terms(n, pairs)


def load(path) -> PauliSum:
    with open(path) as fh:
        return loads(fh.read())


def dump(h: PauliSum, path, header: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(h, header))


def binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0
