"""Benchmark Hamiltonians and reference states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fermion import FermionSum, IntegralSet, encode_occupation, spin_orbital_tables

BLOCH_TOL = 1e-12
UNITARY_TOL = 1e-10


class LatticeError(ValueError):
    pass


def lattice_edges(rows: int, cols: int, periodic: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs with row-major site indices, each listed once."""
    if rows < 1 or cols < 1:
        raise LatticeError("lattice dimensions must be positive")
    seen: set[tuple[int, int]] = set()
    edges = []

    def add(a, b):
        key = (min(a, b), max(a, b))
        if a != b and key not in seen:
            seen.add(key)
            edges.append(key)

    for r in range(rows):
        for c in range(cols):
            site = r * cols + c
            if c + 1 < cols:
                add(site, site + 1)
            elif periodic:
                add(site, r * cols)
            if r + 1 < rows:
                add(site, site + cols)
            elif periodic:
                add(site, c)
    return edges


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int
    periodic: bool
    edges: tuple[tuple[int, int], ...]
    hoppings: tuple[float, ...]
    interactions: tuple[float, ...]
    seed: int | None = None
    t_range: tuple[float, float] | None = None
    v_range: tuple[float, float] | None = None

    def __post_init__(self):
        if not (len(self.edges) == len(self.hoppings) == len(self.interactions)):
            raise LatticeError("one hopping and one interaction per edge")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def to_dict(self) -> dict:
        return {
            "rows": self.rows, "cols": self.cols, "periodic": self.periodic,
            "seed": self.seed, "t_range": self.t_range, "v_range": self.v_range,
            "edges": [list(e) for e in self.edges],
            "hoppings": list(self.hoppings), "interactions": list(self.interactions),
        }


def make_lattice(rows: int, cols: int, periodic: bool = False, t: float = 1.0,
                 v: float = 1.0, disorder_t: bool = False, disorder_v: bool = False,
                 t_range=(0.5, 1.5), v_range=(0.5, 1.5), seed: int | None = None) -> LatticeSpec:
    """Uniform couplings, optionally replaced by i.i.d. uniform draws per edge.

    Hoppings are drawn before interactions from a single generator.
    """
    edges = lattice_edges(rows, cols, periodic)
    rng = np.random.default_rng(seed)
    m = len(edges)
    hop = rng.uniform(*t_range, size=m) if disorder_t else np.full(m, float(t))
    inter = rng.uniform(*v_range, size=m) if disorder_v else np.full(m, float(v))
    return LatticeSpec(rows, cols, periodic, tuple(edges), tuple(map(float, hop)),
                       tuple(map(float, inter)), seed,
                       tuple(t_range) if disorder_t else None,
                       tuple(v_range) if disorder_v else None)


def build_spinless_hubbard(spec: LatticeSpec) -> FermionSum:
    """-sum t_ij (c+_i c_j + h.c.) + sum v_ij n_i n_j over the lattice edges."""
    if spec.n_sites < 2 or not spec.edges:
        raise LatticeError("lattice has no edges")
    fs = FermionSum(spec.n_sites)
    for (i, j), t, v in zip(spec.edges, spec.hoppings, spec.interactions):
        fs.add_term(((i, 1), (j, 0)), -t)
        fs.add_term(((j, 1), (i, 0)), -t)
        if v:
            fs.add_term(((i, 1), (i, 0), (j, 1), (j, 0)), v)
    return fs


# states


def bloch_unitary(r) -> np.ndarray:
    """Unitary whose first column is the spinor of Bloch vector ``r``."""
    rx, ry, rz = r
    theta = math.acos(max(-1.0, min(1.0, rz)))
    phi = math.atan2(ry, rx)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -np.exp(-1j * phi) * s],
                     [np.exp(1j * phi) * s, c]], dtype=complex)


@dataclass(frozen=True)
class ProductState:
    bloch: np.ndarray  # shape (n, 3)

    def __post_init__(self):
        b = np.array(self.bloch, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(b, axis=1)
        if b.shape[0] < 1 or np.any(np.abs(norms - 1) > BLOCH_TOL):
            raise ValueError("Bloch vectors must have unit norm")
        b.setflags(write=False)
        object.__setattr__(self, "bloch", b)

    @property
    def n_qubits(self) -> int:
        return self.bloch.shape[0]

    def unitaries(self) -> tuple[np.ndarray, ...]:
        return tuple(bloch_unitary(r) for r in self.bloch)

    def spinors(self) -> list[np.ndarray]:
        return [u[:, 0] for u in self.unitaries()]

    def preparation(self) -> Preparation:
        return Preparation.rotation(self.unitaries())

    def with_vector(self, qubit: int, r) -> ProductState:
        b = self.bloch.copy()
        b[qubit] = r
        return ProductState(b)


def random_product_state(n: int, rng: np.random.Generator) -> ProductState:
    """Uniform on the Bloch sphere per qubit: r_z ~ U[-1, 1], phi ~ U[0, 2pi)."""
    if n < 1:
        raise ValueError("need at least one qubit")
    rz = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2 * math.pi, size=n)
    rho = np.sqrt(1 - rz ** 2)
    b = np.stack([rho * np.cos(phi), rho * np.sin(phi), rz], axis=1)
    # renormalize against rounding in sqrt/cos/sin
    return ProductState(b / np.linalg.norm(b, axis=1, keepdims=True))


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_I = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class Preparation:
    """``W`` with ``W|0...0>`` the reference state.

    ``kind == "flip"``: product of X on ``flips``. ``kind == "rotation"``:
    one 2x2 unitary per qubit.
    """

    n_qubits: int
    kind: str
    flips: frozenset = frozenset()
    unitaries: tuple = ()

    def __post_init__(self):
        if self.kind == "flip":
            if any(not 0 <= q < self.n_qubits for q in self.flips):
                raise ValueError("flipped qubit out of range")
        elif self.kind == "rotation":
            if len(self.unitaries) != self.n_qubits:
                raise ValueError("one unitary per qubit")
            for u in self.unitaries:
                if u.shape != (2, 2) or np.abs(u.conj().T @ u - _I).max() > UNITARY_TOL:
                    raise ValueError("local preparation is not unitary")
        else:
            raise ValueError(f"unknown preparation kind {self.kind!r}")

    @classmethod
    def flip(cls, n_qubits: int, qubits=()) -> Preparation:
        return cls(n_qubits, "flip", frozenset(int(q) for q in qubits))

    @classmethod
    def from_index(cls, n_qubits: int, index: int) -> Preparation:
        return cls.flip(n_qubits, [q for q in range(n_qubits) if index >> q & 1])

    @classmethod
    def rotation(cls, unitaries) -> Preparation:
        us = tuple(np.array(u, dtype=complex) for u in unitaries)
        return cls(len(us), "rotation", unitaries=us)

    @property
    def basis_index(self) -> int:
        if self.kind != "flip":
            raise ValueError("only flip preparations give a basis state")
        return sum(1 << q for q in self.flips)

    def local(self, qubit: int) -> np.ndarray:
        if self.kind == "flip":
            return _X if qubit in self.flips else _I
        return self.unitaries[qubit]

    def frame(self) -> list[np.ndarray]:
        return [self.local(q) for q in range(self.n_qubits)]

    def inverse(self) -> Preparation:
        if self.kind == "flip":
            return self
        return Preparation.rotation(u.conj().T for u in self.unitaries)


def occupation_string(occupied, n_modes: int) -> str:
    occ = set(occupied)
    return "".join("1" if m in occ else "0" for m in range(n_modes))


def occupation_preparation(occupied, n_modes: int, encoding: str) -> Preparation:
    return Preparation.from_index(n_modes, encode_occupation(occupied, n_modes, encoding))


def checkerboard_state(rows: int, cols: int, encoding: str = "jw") -> tuple[Preparation, str]:
    """Sites with even ``row + col`` occupied."""
    if rows * cols < 1:
        raise LatticeError("lattice dimensions must be positive")
    occ = [r * cols + c for r in range(rows) for c in range(cols) if (r + c) % 2 == 0]
    n = rows * cols
    return occupation_preparation(occ, n, encoding), occupation_string(occ, n)


def hartree_fock_occupation(ints: IntegralSet, rule: str = "fock", max_iter: int = 100) -> list[int]:
    """Spin orbitals of the reference determinant.

    ``rule="one_body"`` takes the lowest diagonal ``h_pp``. ``rule="fock"``
    starts there and repeatedly re-occupies the lowest diagonal Fock energies
    ``h_ii + sum_j in occ [(ii|jj) - (ij|ji)]`` until the set stops changing;
    if the iteration cycles, the cycle member of lowest determinant energy
    is returned.
    """
    from .fermion import determinant_energy

    eta = ints.n_electrons
    n = ints.n_modes
    if eta > n:
        raise ValueError(f"{eta} electrons do not fit in {n} spin orbitals")
    if eta < 0:
        raise ValueError("negative electron count")
    h, g = spin_orbital_tables(ints)
    occ = tuple(sorted(np.argsort(np.diag(h), kind="stable")[:eta].tolist()))
    if rule == "one_body" or eta == 0:
        return list(occ)
    if rule != "fock":
        raise ValueError(f"unknown rule {rule!r}")
    coulomb = np.einsum("iijj->ij", g)
    exchange = np.einsum("ijji->ij", g)
    seen = [occ]
    for _ in range(max_iter):
        eps = np.diag(h) + (coulomb - exchange)[:, list(occ)].sum(axis=1)
        new = tuple(sorted(np.argsort(eps, kind="stable")[:eta].tolist()))
        if new == occ:
            return list(occ)
        if new in seen:
            cycle = seen[seen.index(new):]
            return list(min(cycle, key=lambda o: determinant_energy(ints, o)))
        seen.append(new)
        occ = new
    raise ArithmeticError("aufbau iteration did not settle")


def hartree_fock_preparation(ints: IntegralSet, encoding: str = "bk",
                             rule: str = "fock") -> tuple[Preparation, str]:
    occ = hartree_fock_occupation(ints, rule)
    return (occupation_preparation(occ, ints.n_modes, encoding),
            occupation_string(occ, ints.n_modes))
