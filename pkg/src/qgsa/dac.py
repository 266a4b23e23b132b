"""Deep approximation circuits ``exp(-i theta A)`` with ``A = i[H, F]``.

``F`` sums the single-qubit projectors onto the state orthogonal to the
prepared one, so ``F W|0> = 0``. The first-order energy change under
``exp(-i theta A)`` is ``-2 theta <v|H F H|v>``, negative unless ``v`` is
an eigenstate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .linesearch import ScanResult, best_sample, golden_section, scan, theta_grid
from .models import Preparation
from .pauli import PauliSum, commutator, hypergraph_of
from .sac import SacResult, _result, pauli_decompose_2x2

DEFAULT_GRID = (-math.pi / 2, math.pi / 2, 401)
HERMITIAN_TOL = 1e-10
_Z = np.diag([1.0, -1.0]).astype(complex)


def build_F(w: Preparation, n: int | None = None) -> PauliSum:
    """``sum_j W (1 - Z_j)/2 W^-1``."""
    if n is None:
        n = w.n_qubits
    if n != w.n_qubits:
        raise ValueError("preparation size does not match n")
    f = PauliSum.identity(n, n / 2)
    for q in range(n):
        u = w.local(q)
        # W Z W^dag = n.sigma for the Bloch vector n of the prepared qubit
        dec = pauli_decompose_2x2(u @ _Z @ u.conj().T)
        for axis in "XYZ":
            c = dec[axis].real
            if abs(c) > 1e-15:
                f = f + PauliSum.single(n, q, axis, -c / 2)
    return f


@dataclass
class DacPlan:
    F: PauliSum
    A: PauliSum
    n_terms: int
    local_bound: int
    basis_bound: int
    lightcone: int = 1

    @property
    def is_empty(self) -> bool:
        return len(self.A) == 0

    def counts(self) -> dict:
        return {"a_terms": self.n_terms, "local_bound": self.local_bound,
                "basis_bound": self.basis_bound, "lightcone": self.lightcone}


def build_A(h: PauliSum, f: PauliSum, lightcone: int = 1) -> DacPlan:
    """``A = i[H, F]`` with its term count against ``k 4^k |E|`` and ``N_H N``."""
    if h.n_qubits != f.n_qubits:
        raise ValueError("H and F act on different registers")
    if not (h.is_hermitian(HERMITIAN_TOL) and f.is_hermitian(HERMITIAN_TOL)):
        raise sv.HermiticityError("H and F must be Hermitian")
    a = commutator(h, f) * 1j
    if not a.is_hermitian(HERMITIAN_TOL):
        raise AssertionError("i[H, F] came out non-Hermitian")
    a = a.real_part()
    g = hypergraph_of(h) if any(x | z for (x, z) in h.terms) else None
    local = g.k * 4 ** g.k * g.n_edges if g is not None else 0
    return DacPlan(F=f, A=a, n_terms=len(a), local_bound=local,
                   basis_bound=len(h) * h.n_qubits, lightcone=lightcone)


def dac_plan(h: PauliSum, w: Preparation) -> DacPlan:
    return build_A(h, build_F(w))


def dac_energy_function(h: PauliSum, plan: DacPlan, psi0: np.ndarray,
                        method: str = "exact", steps: int = 1):
    return lambda theta: sv.expectation(
        h, sv.apply_exponential(plan.A, theta, psi0, method, steps))


def _march(plan: DacPlan, psi0: np.ndarray, thetas: np.ndarray):
    """Yield ``(i, state)`` over the grid, stepping outward from the sample nearest zero."""
    i0 = int(np.argmin(np.abs(thetas)))
    start = sv.apply_exponential(plan.A, thetas[i0], psi0)
    yield i0, start
    for order in (range(i0 + 1, thetas.size), range(i0 - 1, -1, -1)):
        prev, state = i0, start
        for i in order:
            state = sv.apply_exponential(plan.A, thetas[i] - thetas[prev], state)
            prev = i
            yield i, state


def dac_optimize(h: PauliSum, psi0: np.ndarray, plan: DacPlan, method: str = "exact",
                 grid=DEFAULT_GRID, steps: int = 1, tol: float = 1e-8,
                 e_exact: float | None = None) -> SacResult:
    """Grid scan of ``E(theta)`` plus golden-section refinement around the best sample.

    The exact method marches along the grid and refines from the nearest
    grid state; Trotter energies are evaluated from ``psi0`` directly.
    """
    thetas = theta_grid(*grid)
    e0 = sv.expectation(h, psi0)
    var = sv.variance(h, psi0)
    extra = {"counts": plan.counts(), "method": method}
    if method == "trotter":
        extra["steps"] = steps
    if plan.is_empty:
        res = ScanResult(0.0, e0, thetas, np.full(thetas.size, e0), 0)
        return _result(res, e0, var, e_exact, extra)
    if method == "exact":
        energies = np.empty(thetas.size)
        kept: dict[int, np.ndarray] = {}
        for j, state in _march(plan, psi0, thetas):
            energies[j] = sv.expectation(h, state)
            # hold only the states that can still be the best sample
            kept[j] = state
            i = best_sample(thetas[list(kept)], energies[list(kept)])
            keep = list(kept)[i]
            kept = {keep: kept[keep]}
        (i,) = kept
        lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, thetas.size - 1)]
        base, anchor = kept[i], thetas[i]

        def f(theta):
            return sv.expectation(h, sv.apply_exponential(plan.A, theta - anchor, base))

        x, fx, n_eval = golden_section(f, lo, hi, tol)
        if energies[i] < fx:
            x, fx = float(thetas[i]), float(energies[i])
        res = ScanResult(float(x), float(fx), thetas, energies, n_eval + thetas.size)
    elif method == "trotter":
        f = dac_energy_function(h, plan, psi0, method, steps)
        res = scan(f, thetas, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = _result(res, e0, var, e_exact, extra)
    if out.energy > e0:
        raise AssertionError("optimized energy exceeds the reference energy")
    return out


def run_dac(h: PauliSum, w: Preparation, method: str = "exact", grid=DEFAULT_GRID,
            steps: int = 1, tol: float = 1e-8, e_exact: float | None = None):
    plan = dac_plan(h, w)
    return plan, dac_optimize(h, sv.prepare(w), plan, method, grid, steps, tol, e_exact)
