"""Electronic-structure integrals, second-quantized operators and qubit encodings.

Spin orbitals are interleaved: spin orbital ``2p`` is spatial orbital ``p``
with spin alpha and ``2p + 1`` the same orbital with spin beta.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .pauli import PRUNE_TOL, PauliSum, _mul_masks, _PHASES


class FcidumpHeaderError(ValueError):
    pass


class FcidumpRecordError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class IntegralSet:
    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    orbital_energies: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_orbitals
        if self.one_body.shape != (n, n) or self.two_body.shape != (n, n, n, n):
            raise ValueError("integral tables do not match n_orbitals")
        if not 0 <= self.n_electrons <= 2 * n:
            raise ValueError(f"{self.n_electrons} electrons do not fit {n} orbitals")

    @property
    def n_modes(self) -> int:
        return 2 * self.n_orbitals


_TWO_BODY_IMAGES = (
    lambda p, q, r, s: (p, q, r, s),
    lambda p, q, r, s: (q, p, r, s),
    lambda p, q, r, s: (p, q, s, r),
    lambda p, q, r, s: (q, p, s, r),
    lambda p, q, r, s: (r, s, p, q),
    lambda p, q, r, s: (s, r, p, q),
    lambda p, q, r, s: (r, s, q, p),
    lambda p, q, r, s: (s, r, q, p),
)


def _header_int(header: str, key: str) -> int | None:
    m = re.search(rf"\b{key}\s*=\s*(-?\d+)", header, re.IGNORECASE)
    return int(m.group(1)) if m else None


def parse_fcidump(text: str) -> IntegralSet:
    """Parse FCIDUMP text (chemist-notation two-electron integrals)."""
    lines = text.splitlines()
    start = next((i for i, ln in enumerate(lines) if ln.strip().upper().startswith("&FCI")), None)
    if start is None:
        raise FcidumpHeaderError("missing &FCI namelist header")
    header_parts = []
    end = None
    for i in range(start, len(lines)):
        ln = lines[i]
        stripped = ln.strip()
        upper = stripped.upper()
        if i > start and (upper.startswith("&END") or upper.startswith("/")):
            end = i
            break
        if stripped.endswith("/") or upper.endswith("&END"):
            header_parts.append(re.sub(r"(/|&END)\s*$", "", ln, flags=re.IGNORECASE))
            end = i
            break
        header_parts.append(ln)
    if end is None:
        raise FcidumpHeaderError("header is not terminated by '/' or '&END'")
    header = " ".join(header_parts)
    norb = _header_int(header, "NORB")
    nelec = _header_int(header, "NELEC")
    if norb is None or nelec is None:
        raise FcidumpHeaderError("header must define NORB and NELEC")
    ms2 = _header_int(header, "MS2") or 0

    h1 = np.zeros((norb, norb))
    h2 = np.zeros((norb,) * 4)
    core = 0.0
    orb_e: dict[int, float] = {}
    for lineno in range(end + 2, len(lines) + 1):
        raw = lines[lineno - 1].strip()
        if not raw:
            continue
        parts = raw.replace(",", " ").split()
        if len(parts) != 5:
            raise FcidumpRecordError(lineno, f"expected 5 fields, got {len(parts)}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, a, j, b = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpRecordError(lineno, str(exc)) from None
        if any(not 0 <= idx <= norb for idx in (i, a, j, b)):
            raise FcidumpRecordError(lineno, f"index out of range 0..{norb}")
        if i == a == j == b == 0:
            core = value
        elif j == 0 and b == 0:
            if a == 0:
                orb_e[i - 1] = value
            elif i == 0:
                raise FcidumpRecordError(lineno, "one-body record with zero index")
            else:
                h1[i - 1, a - 1] = h1[a - 1, i - 1] = value
        elif 0 in (i, a, j, b):
            raise FcidumpRecordError(lineno, "two-body record with zero index")
        else:
            for img in _TWO_BODY_IMAGES:
                h2[img(i - 1, a - 1, j - 1, b - 1)] = value
    return IntegralSet(norb, nelec, ms2, core, h1, h2, orb_e)


def read_fcidump(path) -> IntegralSet:
    with open(path) as fh:
        return parse_fcidump(fh.read())


def emit_fcidump(ints: IntegralSet, tol: float = 0.0) -> str:
    n = ints.n_orbitals
    out = [f"&FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},", "&END"]
    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s in range(r + 1):
                    if (p * (p + 1) // 2 + q) < (r * (r + 1) // 2 + s):
                        continue
                    v = ints.two_body[p, q, r, s]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            v = ints.one_body[p, q]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {p + 1} {q + 1} 0 0")
    for i, v in sorted(ints.orbital_energies.items()):
        out.append(f"{float(v)!r} {i + 1} 0 0 0")
    out.append(f"{float(ints.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


# second quantized operators

Ladder = tuple[int, int]  # (mode, 1 for creation / 0 for annihilation)


def _bubble_key(op: Ladder):
    return (-op[1], op[0])


def normal_order(ops: tuple[Ladder, ...]) -> dict[tuple[Ladder, ...], float]:
    """Expand a product of ladder operators into normal-ordered terms.

    Normal order puts creators before annihilators, each group sorted by
    ascending mode index.
    """
    out: dict[tuple[Ladder, ...], float] = {}
    stack = [(1.0, tuple(ops))]
    while stack:
        coeff, term = stack.pop()
        for pos in range(len(term) - 1):
            a, b = term[pos], term[pos + 1]
            if _bubble_key(a) > _bubble_key(b):
                break
            if a == b:
                pos = -1
                break
        else:
            out[term] = out.get(term, 0.0) + coeff
            continue
        if pos == -1:
            continue  # repeated identical operator: c c = 0
        a, b = term[pos], term[pos + 1]
        swapped = term[:pos] + (b, a) + term[pos + 2:]
        stack.append((-coeff, swapped))
        if a[0] == b[0] and a[1] == 0 and b[1] == 1:
            stack.append((coeff, term[:pos] + term[pos + 2:]))
    return {k: v for k, v in out.items() if v != 0.0}


class FermionSum:
    """Sum of normal-ordered ladder-operator products."""

    def __init__(self, n_modes: int, terms=None):
        self.n_modes = n_modes
        self.terms: dict[tuple[Ladder, ...], complex] = {}
        for ops, c in (terms or {}).items():
            self.add_term(ops, c)

    def add_term(self, ops, coeff: complex) -> None:
        ops = tuple((int(m), int(d)) for m, d in ops)
        for m, _ in ops:
            if not 0 <= m < self.n_modes:
                raise ValueError(f"mode {m} outside 0..{self.n_modes - 1}")
        for term, sign in normal_order(ops).items():
            self.terms[term] = self.terms.get(term, 0) + sign * coeff

    def pruned(self, tol: float = PRUNE_TOL) -> FermionSum:
        out = FermionSum(self.n_modes)
        out.terms = {k: v for k, v in self.terms.items() if abs(v) >= tol}
        return out

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: FermionSum) -> FermionSum:
        out = FermionSum(max(self.n_modes, other.n_modes))
        out.terms = dict(self.terms)
        for k, v in other.terms.items():
            out.terms[k] = out.terms.get(k, 0) + v
        return out

    def __mul__(self, c):
        out = FermionSum(self.n_modes)
        out.terms = {k: v * c for k, v in self.terms.items()}
        return out

    __rmul__ = __mul__

    def dagger(self) -> FermionSum:
        out = FermionSum(self.n_modes)
        for ops, c in self.terms.items():
            out.add_term(tuple((m, 1 - d) for m, d in reversed(ops)), np.conj(c))
        return out


def number_operator(n_modes: int) -> FermionSum:
    return FermionSum(n_modes, {((p, 1), (p, 0)): 1.0 for p in range(n_modes)})


def build_fermion_hamiltonian(ints: IntegralSet, tol: float = PRUNE_TOL) -> FermionSum:
    """H = core + sum t_ij c+_i c_j + sum u_ijkm c+_i c+_k c_m c_j.

    ``t`` is the spin-diagonal expansion of h_pq and
    ``u_ijkm = (pq|rs) / 2`` with i = (p, s1), j = (q, s1), k = (r, s2), m = (s, s2).
    """
    n = ints.n_orbitals
    fs = FermionSum(2 * n)
    if ints.core_energy:
        fs.terms[()] = complex(ints.core_energy)
    for p, q in zip(*np.nonzero(np.abs(ints.one_body) > tol)):
        for sigma in (0, 1):
            fs.add_term(((2 * p + sigma, 1), (2 * q + sigma, 0)), ints.one_body[p, q])
    h2 = ints.two_body
    for p, q, r, s in zip(*np.nonzero(np.abs(h2) > tol)):
        v = 0.5 * h2[p, q, r, s]
        for s1 in (0, 1):
            for s2 in (0, 1):
                i, j, k, m = 2 * p + s1, 2 * q + s1, 2 * r + s2, 2 * s + s2
                if i == k or j == m:
                    continue
                fs.add_term(((i, 1), (k, 1), (m, 0), (j, 0)), v)
    return fs.pruned(tol)


def spin_orbital_tables(ints: IntegralSet) -> tuple[np.ndarray, np.ndarray]:
    """Spin-orbital h[i, j] and chemist (ij|kl) with spin deltas applied."""
    n = ints.n_orbitals
    spin = np.arange(2 * n) % 2
    spatial = np.arange(2 * n) // 2
    same = spin[:, None] == spin[None, :]
    h = ints.one_body[np.ix_(spatial, spatial)] * same
    g = ints.two_body[np.ix_(spatial, spatial, spatial, spatial)]
    g = g * same[:, :, None, None] * same[None, None, :, :]
    return h, g


def determinant_energy(ints: IntegralSet, occupied) -> float:
    """Slater-Condon energy of a single determinant (spin-orbital indices)."""
    h, g = spin_orbital_tables(ints)
    occ = np.array(sorted(occupied), dtype=int)
    if occ.size == 0:
        return float(ints.core_energy)
    e1 = h[occ, occ].sum()
    coul = g[np.ix_(occ, occ, occ, occ)]
    j = np.einsum("iijj->", coul)
    k = np.einsum("ijji->", coul)
    return float(ints.core_energy + e1 + 0.5 * (j - k))


# qubit encodings


def _update_set(q: int, n: int) -> set[int]:
    out = set()
    idx = q + 1
    while idx <= n:
        out.add(idx - 1)
        idx += idx & -idx
    return out


def _occupation_set(q: int) -> set[int]:
    out = {q}
    idx = q + 1
    parent = idx & (idx - 1)
    idx -= 1
    while idx != parent:
        out.add(idx - 1)
        idx &= idx - 1
    return out


def _parity_set(q: int) -> set[int]:
    """Qubits whose parity equals the parity of modes 0..q (empty for q < 0)."""
    out = set()
    idx = q + 1
    while idx > 0:
        out.add(idx - 1)
        idx &= idx - 1
    return out


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@lru_cache(maxsize=None)
def _majoranas(encoding: str, q: int, n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """(x, z) masks of the two Majorana words c_q and d_q."""
    if encoding == "jw":
        low = (1 << q) - 1
        return (1 << q, low), (1 << q, low | (1 << q))
    if encoding == "bk":
        upd = _mask(_update_set(q, n))
        par = _mask(_parity_set(q - 1))
        occ = _mask(_occupation_set(q))
        c = (upd, par)
        d = (upd, ((par ^ occ) & ~(1 << q)) | (1 << q))
        return c, d
    raise ValueError(f"unknown encoding {encoding!r}")


def _ladder_image(encoding: str, mode: int, dagger: int, n: int):
    """a_q = (c + i d)/2, a+_q = (c - i d)/2 as [(coeff, x, z), ...]."""
    (cx, cz), (dx, dz) = _majoranas(encoding, mode, n)
    s = -0.5j if dagger else 0.5j
    return [(0.5, cx, cz), (s, dx, dz)]


def encode(fs: FermionSum, encoding: str = "bk", n_qubits: int | None = None) -> PauliSum:
    n = n_qubits or fs.n_modes
    acc: dict[tuple[int, int], complex] = {}
    for ops, coeff in fs.terms.items():
        partial = {(0, 0): complex(coeff)}
        for mode, dag in ops:
            image = _ladder_image(encoding, mode, dag, n)
            nxt: dict[tuple[int, int], complex] = {}
            for (ax, az), ca in partial.items():
                for cb, bx, bz in image:
                    k, x, z = _mul_masks(ax, az, bx, bz)
                    nxt[(x, z)] = nxt.get((x, z), 0) + _PHASES[k] * ca * cb
            partial = nxt
        for key, c in partial.items():
            acc[key] = acc.get(key, 0) + c
    return PauliSum(n, acc)


def jordan_wigner(fs: FermionSum, n_qubits: int | None = None) -> PauliSum:
    return encode(fs, "jw", n_qubits)


def bravyi_kitaev(fs: FermionSum, n_qubits: int | None = None) -> PauliSum:
    return encode(fs, "bk", n_qubits)


def encode_occupation(occupied, n_modes: int, encoding: str = "bk") -> int:
    """Computational-basis index of an occupation vector under an encoding."""
    bits = 0
    for q in occupied:
        if encoding == "jw":
            bits ^= 1 << q
        elif encoding == "bk":
            bits ^= _mask(_update_set(q, n_modes))
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
    return bits
