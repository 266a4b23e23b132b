"""Exact ground-state energies by dense diagonalization or Lanczos iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum
from .statevector import HermiticityError, check_capacity

DENSE_MAX_QUBITS = 14
AUTO_DENSE_QUBITS = 10
ITERATIVE_MAX_QUBITS = 24
RESIDUAL_TOL = 1e-8


class DegenerateReferenceError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumResult:
    energy: float
    method: str
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {"energy": self.energy, "method": self.method,
                "residual": self.residual, "iterations": self.iterations}


def ground_energy(h: PauliSum, method: str = "auto", tol: float = RESIDUAL_TOL,
                  max_basis: int = 100, max_restarts: int = 40, seed: int = 0,
                  v0: np.ndarray | None = None) -> SpectrumResult:
    """Lowest eigenvalue of a Hermitian Pauli sum.

    ``auto`` diagonalizes densely up to ten qubits and iterates above. A start
    vector ``v0`` (for example a reference determinant) confines the iteration
    to its symmetry sector and usually converges much faster than a random one.
    """
    if not h.is_hermitian(1e-10):
        raise HermiticityError("ground energy needs a Hermitian operator")
    n = h.n_qubits
    if method == "auto":
        method = "dense" if n <= AUTO_DENSE_QUBITS else "iterative"
    if method == "dense":
        check_capacity(n, DENSE_MAX_QUBITS)
        mat = h.to_matrix()
        if h.compiled().symmetric:
            mat = mat.real
        evals = np.linalg.eigvalsh(mat)
        return SpectrumResult(float(evals[0]), "dense", 0.0, 0)
    if method == "iterative":
        check_capacity(n, ITERATIVE_MAX_QUBITS)
        return lanczos(h, tol, max_basis, max_restarts, seed, v0)
    raise ValueError(f"unknown method {method!r}")


def lanczos(h: PauliSum, tol: float = RESIDUAL_TOL, max_basis: int = 100,
            max_restarts: int = 40, seed: int = 0,
            v0: np.ndarray | None = None) -> SpectrumResult:
    """Restarted Lanczos with full reorthogonalization, restarting from the Ritz vector."""
    comp = h.compiled()
    dim = comp.dim
    real = comp.symmetric
    dtype = np.float64 if real else np.complex128
    if v0 is None:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(dim)
        if not real:
            v = v + 1j * rng.standard_normal(dim)
    else:
        v = np.array(v0, dtype=np.complex128)
        if v.shape != (dim,):
            raise ValueError("start vector has the wrong dimension")
        if real:
            # a real symmetric operator preserves both parts separately
            v = v.real.copy() if np.abs(v.real).max() > 0 else v.imag.copy()
    v = v.astype(dtype)
    v /= np.linalg.norm(v)
    basis = np.empty((max_basis, dim), dtype=dtype)
    iterations = 0
    theta, residual = np.nan, np.inf
    for _ in range(max_restarts):
        alphas: list[float] = []
        betas: list[float] = []
        basis[0] = v
        w = comp.matvec(basis[0])
        for m in range(max_basis):
            iterations += 1
            alpha = float(np.vdot(basis[m], w).real)
            alphas.append(alpha)
            # two passes of classical Gram-Schmidt against the whole basis
            for _ in range(2):
                w -= basis[: m + 1].T @ (basis[: m + 1].conj() @ w)
            beta = float(np.linalg.norm(w))
            t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            evals, evecs = np.linalg.eigh(t)
            theta, y = float(evals[0]), evecs[:, 0]
            if beta * abs(y[-1]) < 0.5 * tol or beta < 1e-13 or m + 1 == max_basis:
                x = y.astype(dtype) @ basis[: m + 1]
                x /= np.linalg.norm(x)
                hx = comp.matvec(x)
                theta = float(np.vdot(x, hx).real)
                residual = float(np.linalg.norm(hx - theta * x))
                if residual < tol:
                    return SpectrumResult(theta, "iterative", residual, iterations)
                if beta < 1e-13 or m + 1 == max_basis:
                    v = x
                    break
            betas.append(beta)
            basis[m + 1] = w / beta
            w = comp.matvec(basis[m + 1])
    raise ArithmeticError(f"Lanczos did not converge: residual {residual:.3e} after "
                          f"{iterations} iterations (estimate {theta})")


def correlation_fraction(e_ref: float, e: float, e_exact: float) -> float:
    """Share of the correlation energy ``e_ref - e_exact`` recovered by ``e``."""
    if not e_ref > e_exact:
        raise DegenerateReferenceError("reference energy must lie above the exact energy")
    return (e_ref - e) / (e_ref - e_exact)
