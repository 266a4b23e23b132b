"""Randomized product states improved by a one-step Bloch-vector update.

On a k-local Hamiltonian each trial samples a uniformly random product
state and a random half ``A`` of the qubits. A qubit ``i`` in ``A`` is
pointed along ``g_i / |g_i|`` where ``g_i^a`` collects the all-``a``
coefficients ``u_R^a`` of the hyperedges ``R`` that meet ``A`` only in ``i``,
weighted by the untouched neighbours' Bloch components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import ProductState, random_product_state
from .pauli import (InteractionHypergraph, PauliSum, hypergraph_of, identity_coefficient,
                    is_triangle_free, strict_local_norm)

_AXES = "xyz"
# (x bit, z bit) of the single-qubit X, Y, Z
_AXIS_BITS = ((1, 0), (1, 1), (0, 1))
GRADIENT_TOL = 1e-14


@dataclass(frozen=True)
class SurfaceCoefficients:
    edges: tuple[frozenset[int], ...]
    u: np.ndarray          # shape (n_edges, 3): u_R^x, u_R^y, u_R^z
    w: np.ndarray          # per-edge identity share
    identity: float

    def of(self, edge) -> dict[str, float]:
        r = self.edges.index(frozenset(edge))
        return dict(zip(_AXES, self.u[r]))


def uniform_word(edge, axis: int) -> tuple[int, int]:
    bx, bz = _AXIS_BITS[axis]
    m = sum(1 << j for j in edge)
    return (m if bx else 0, m if bz else 0)


def surface_coefficients(h: PauliSum, g: InteractionHypergraph | None = None) -> SurfaceCoefficients:
    """Coefficients of the uniform X/Y/Z words on each hyperedge.

    The identity coefficient is shared equally over the hyperedges.
    """
    if g is None:
        g = hypergraph_of(h)
    terms = h.terms
    u = np.array([[terms.get(uniform_word(e, a), 0j).real for a in range(3)]
                  for e in g.edges])
    ident = identity_coefficient(h)
    w = np.full(len(g.edges), ident / len(g.edges))
    return SurfaceCoefficients(g.edges, u, w, ident)


class _ProductEvaluator:
    """Energies of product states from per-word axis lists."""

    def __init__(self, h: PauliSum):
        self.n = h.n_qubits
        self.const = 0.0
        qubits, axes, coeffs, owner = [], [], [], []
        for k, ((x, z), c) in enumerate(sorted(h.terms.items())):
            if x == 0 and z == 0:
                self.const += c.real
                continue
            for j in range(self.n):
                bx, bz = (x >> j) & 1, (z >> j) & 1
                if bx or bz:
                    qubits.append(j)
                    axes.append(_AXIS_BITS.index((bx, bz)))
                    owner.append(len(coeffs))
            coeffs.append(c.real)
        self.qubits = np.array(qubits, dtype=np.int64)
        self.axes = np.array(axes, dtype=np.int64)
        self.owner = np.array(owner, dtype=np.int64)
        self.coeffs = np.array(coeffs)

    def __call__(self, bloch: np.ndarray) -> float:
        factors = bloch[self.qubits, self.axes]
        prods = np.ones(self.coeffs.size)
        np.multiply.at(prods, self.owner, factors)
        return float(self.const + np.dot(self.coeffs, prods))


def product_energy(h: PauliSum, v: ProductState) -> float:
    """``sum_w gamma_w prod_i r_i^{axis(w, i)}``."""
    if v.n_qubits != h.n_qubits:
        raise ValueError(f"state on {v.n_qubits} qubits, operator on {h.n_qubits}")
    return _ProductEvaluator(h)(v.bloch)


@dataclass
class Theorem1Report:
    best: ProductState
    best_energy: float
    baseline: float
    trials: int
    energies: list[float]
    random_energies: list[float]
    f_h: float
    d: int
    k: int
    triangle_free: bool
    mode: str
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "seed": self.seed, "trials": self.trials,
            "baseline": self.baseline, "best_energy": self.best_energy,
            "mean_energy": float(np.mean(self.energies)),
            "mean_random_energy": float(np.mean(self.random_energies)),
            "f_h": self.f_h, "d": self.d, "k": self.k,
            "triangle_free": self.triangle_free,
            "best_bloch": self.best.bloch.tolist(),
            "energies": [float(e) for e in self.energies],
            "random_energies": [float(e) for e in self.random_energies],
        }


def update_bloch(bloch: np.ndarray, in_a: np.ndarray, edges, u: np.ndarray) -> np.ndarray:
    """Point each qubit of ``A`` along its normalized boundary gradient ``g_i``."""
    out = bloch.copy()
    grads = np.zeros_like(bloch)
    for r, e in enumerate(edges):
        hit = [j for j in e if in_a[j]]
        if len(hit) != 1:
            continue
        i = hit[0]
        rest = [j for j in e if j != i]
        prod = np.prod(bloch[rest], axis=0) if rest else np.ones(3)
        grads[i] += u[r] * prod
    for i in np.flatnonzero(in_a):
        nrm = np.linalg.norm(grads[i])
        if nrm > GRADIENT_TOL:
            out[i] = grads[i] / nrm
    return out


def improve_product_state(h: PauliSum, trials: int, rng: np.random.Generator,
                          mode: str = "minimize", seed: int | None = None) -> Theorem1Report:
    """Best of ``trials`` randomized, updated product states.

    Minimization runs the maximizing update on ``-H``. Each trial draws from
    its own child generator spawned from ``rng``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if mode not in ("minimize", "maximize"):
        raise ValueError(f"unknown mode {mode!r}")
    if not h.is_hermitian(1e-10):
        raise ValueError("Hamiltonian must be Hermitian")
    g = hypergraph_of(h)
    target = -h if mode == "minimize" else h
    surf = surface_coefficients(target, g)
    energy = _ProductEvaluator(h)
    better = (lambda a, b: a < b) if mode == "minimize" else (lambda a, b: a > b)
    best, best_e = None, None
    energies, random_energies = [], []
    for child in rng.spawn(trials):
        v = random_product_state(h.n_qubits, child)
        in_a = child.random(h.n_qubits) < 0.5
        b = update_bloch(v.bloch, in_a, g.edges, surf.u)
        e = energy(b)
        energies.append(e)
        random_energies.append(energy(v.bloch))
        if best_e is None or better(e, best_e):
            best, best_e = b, e
    return Theorem1Report(
        best=ProductState(best), best_energy=best_e, baseline=identity_coefficient(h),
        trials=trials, energies=energies, random_energies=random_energies,
        f_h=strict_local_norm(h, g.k), d=g.d, k=g.k, triangle_free=is_triangle_free(g),
        mode=mode, seed=seed)
