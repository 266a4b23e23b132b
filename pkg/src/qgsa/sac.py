"""Shallow approximation circuits ``exp(i theta L)`` built from commutator signs.

For a reference ``|v> = W|0>`` the generator is ``L = sum_s c_s W P_s W^-1``
over vertex subsets ``s`` of the chosen size that sit inside a hyperedge,
with ``P_s`` the tensor product of ``P(t) = cos(pi/2t) X + sin(pi/2t) Y``
(branch ``P``) or of X (branch ``X``). Since ``P(t) = R X R^dag`` with
``R = diag(1, exp(i pi/2t))``, every ``P_s`` is an X-string in the frame
``V = W R``; the plan stores that frame and the X-string generator.

The sign ``c_s = sign(i beta_s)`` with ``beta_s = <v|[W P_s W^-1, H]|v>``
makes ``dE/dtheta`` at zero equal to ``-sum_s |beta_s|``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import statevector as sv
from .exact import correlation_fraction
from .linesearch import ScanResult, refine_scan, theta_grid
from .models import Preparation
from .pauli import InteractionHypergraph, PauliSum, binom, hypergraph_of

DEAD_ZONE = 1e-12
DEFAULT_GRID = (-math.pi, math.pi, 401)

_PAULI_2X2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class FlatLandscapeWarning(UserWarning):
    pass


def p_angle(t: int) -> float:
    if t < 1:
        raise ValueError("t must be at least 1")
    return math.pi / (2 * t)


def single_qubit_P(t: int) -> PauliSum:
    """``cos(pi/2t) X + sin(pi/2t) Y`` on one qubit."""
    a = p_angle(t)
    return PauliSum.from_terms(1, [(math.cos(a), "X"), (math.sin(a), "Y")])


def enumerate_S(g: InteractionHypergraph, t: int) -> list[tuple[int, ...]]:
    """All ``t``-subsets of vertices contained in at least one hyperedge."""
    if not 1 <= t <= g.k:
        raise ValueError(f"t must lie in 1..{g.k}")
    out = set()
    for e in g.edges:
        out.update(itertools.combinations(sorted(e), t))
    return sorted(out)


def pauli_decompose_2x2(m: np.ndarray) -> dict[str, complex]:
    return {k: complex(np.trace(p @ m)) / 2 for k, p in _PAULI_2X2.items()}


def _frame(w: Preparation, branch: str, a: float) -> list[np.ndarray]:
    r = np.diag([1.0, np.exp(1j * a)]) if branch == "P" else np.eye(2)
    return [w.local(q) @ r for q in range(w.n_qubits)]


@dataclass
class SacPlan:
    n_qubits: int
    t_hat: int
    p_param: int
    branch: str
    subsets: list[tuple[int, ...]]
    betas: np.ndarray
    signs: np.ndarray
    frame: list[np.ndarray]
    l_x: PauliSum
    theta_init: float
    q: np.ndarray
    n_candidates: int
    commutator_terms: int
    bound: int
    k: int
    d: int
    n_edges: int
    warning: str | None = None

    @property
    def beta_total(self) -> float:
        return float(np.abs(self.betas).sum())

    @property
    def is_empty(self) -> bool:
        return len(self.subsets) == 0

    @property
    def period(self) -> float:
        """Period of ``E(theta)``.

        ``exp(i pi/2 L)`` is a phase times the X-string on the XOR of all
        subset masks, so the period halves to ``pi/2`` when that XOR is empty.
        """
        acc = 0
        for s in self.subsets:
            acc ^= _mask(s)
        return math.pi / 2 if acc == 0 else math.pi

    def generator(self) -> PauliSum:
        """``L`` expanded in Pauli words (each ``W P_s W^-1`` is a sum of ``2^t`` words)."""
        n = self.n_qubits
        one_qubit = []
        for q in range(n):
            v = self.frame[q]
            one_qubit.append(pauli_decompose_2x2(v @ _PAULI_2X2["X"] @ v.conj().T))
        out = PauliSum.zero(n)
        for s, c in zip(self.subsets, self.signs):
            term = PauliSum.identity(n, float(c))
            for q in s:
                local = PauliSum.from_terms(n, [(coef, "I" * q + lab + "I" * (n - q - 1))
                                                for lab, coef in one_qubit[q].items()
                                                if abs(coef) > 1e-15])
                term = term @ local
            out = out + term
        return out

    def state(self, theta: float, v: np.ndarray) -> np.ndarray:
        """``exp(i theta L)|v>``."""
        return sv.apply_commuting_exponential(self.l_x, theta, v, self.frame)

    def counts(self) -> dict:
        return {"candidates": self.n_candidates, "retained": len(self.subsets),
                "commutator_terms": self.commutator_terms, "bound": self.bound}

    def to_dict(self) -> dict:
        return {
            "t_hat": self.t_hat, "p_param": self.p_param, "branch": self.branch,
            "subsets": [list(s) for s in self.subsets],
            "i_beta": [float((1j * b).real) for b in self.betas],
            "signs": [int(c) for c in self.signs], "beta_total": self.beta_total,
            "theta_init": self.theta_init, "period": self.period,
            "q": [float(x) for x in self.q],
            "k": self.k, "d": self.d, "n_edges": self.n_edges,
            "counts": self.counts(), "warning": self.warning,
        }


def _mask(s) -> int:
    return sum(1 << q for q in s)


def count_commutator_terms(h: PauliSum, subsets) -> int:
    """Pairs ``(s, w)`` with ``s`` inside the support of a non-identity word ``w``.

    Only those words can give a nonzero ``<v|[P_s, w]|v>`` for product ``v``:
    on a qubit of ``s`` outside ``w`` the factor ``<0|P|0>`` vanishes.
    """
    supports = [x | z for (x, z) in h.terms if x | z]
    total = 0
    for s in subsets:
        m = _mask(s)
        total += sum(1 for sup in supports if sup & m == m)
    return total


def beta_termwise(h: PauliSum, w: Preparation, subsets, branch: str = "P",
                  p_param: int = 2) -> tuple[np.ndarray, int]:
    """``beta_s`` summed term by term from single-qubit matrix elements.

    Returns the betas and the number of commutator terms evaluated.
    """
    n = h.n_qubits
    a = p_angle(p_param)
    p_single = (math.cos(a) * _PAULI_2X2["X"] + math.sin(a) * _PAULI_2X2["Y"]
                if branch == "P" else _PAULI_2X2["X"])
    # bare[q][lab] = <0|W^dag sigma W|0>, with_p[q][lab] = <0|P W^dag sigma W|0>
    bare, with_p = [], []
    for q in range(n):
        u = w.local(q)
        rot = {lab: u.conj().T @ m @ u for lab, m in _PAULI_2X2.items()}
        bare.append({lab: m[0, 0] for lab, m in rot.items()})
        with_p.append({lab: (p_single @ m)[0, 0] for lab, m in rot.items()})
    words = [(wd, c.real) for wd, c in h.sorted_items() if wd.x | wd.z]
    betas = np.zeros(len(subsets), dtype=complex)
    evaluations = 0
    for i, s in enumerate(subsets):
        m = _mask(s)
        for wd, c in words:
            sup = wd.x | wd.z
            if sup & m != m:
                continue
            evaluations += 1
            val = 1.0 + 0j
            for q in range(n):
                if sup >> q & 1:
                    lab = wd.axis(q)
                    val *= with_p[q][lab] if m >> q & 1 else bare[q][lab]
            betas[i] += c * 2j * val.imag
    return betas, evaluations


def choose_t(q: np.ndarray, k: int) -> int:
    """Smallest ``t`` in ``1..k`` maximizing ``q_t``."""
    return 1 + int(np.argmax(np.asarray(q[1:k + 1])))


def sac_build(h: PauliSum, w: Preparation, branch: str = "P", t_hat: int | None = None,
              p_param: int | None = None, dead_zone: float = DEAD_ZONE,
              v: np.ndarray | None = None, q: np.ndarray | None = None) -> SacPlan:
    """Steps 1-5 for one branch.

    ``t_hat`` overrides the weight choice and ``p_param`` the ``t`` inside
    ``P(t)`` (both default to the argmax of ``q_t``).
    """
    if branch not in ("P", "X"):
        raise ValueError("branch must be 'P' or 'X'")
    if not h.is_hermitian(1e-10):
        raise sv.HermiticityError("Hamiltonian must be Hermitian")
    n = h.n_qubits
    if w.n_qubits != n:
        raise ValueError("preparation and Hamiltonian sizes differ")
    g = hypergraph_of(h)
    if v is None:
        v = sv.prepare(w)
    phi = sv.frame_residual(h, v, w)
    if q is None:
        q = np.bincount(sv.popcounts(n), weights=np.abs(phi) ** 2, minlength=n + 1)
    if t_hat is None:
        t_hat = choose_t(q, g.k)
    if p_param is None:
        p_param = t_hat
    a = p_angle(p_param)
    candidates = enumerate_S(g, t_hat)
    phase = np.exp(-1j * a * t_hat) if branch == "P" else 1.0
    keep, betas = [], []
    for s in candidates:
        beta = 2j * (phase * phi[_mask(s)]).imag
        if abs(beta) >= dead_zone:
            keep.append(s)
            betas.append(beta)
    betas = np.array(betas, dtype=complex)
    signs = np.sign((1j * betas).real).astype(int)
    l_x = PauliSum.from_terms(n, [(float(c), "".join("X" if j in s else "I" for j in range(n)))
                                  for s, c in zip(keep, signs)])
    k, d = g.k, g.d
    theta_init = float(np.abs(betas).sum()) / (k ** 2 * d ** 2 * binom(k, t_hat - 1) ** 2)
    warning = None
    if not keep:
        warning = "all commutator expectations vanish; the energy landscape is flat at theta = 0"
        warnings.warn(warning, FlatLandscapeWarning, stacklevel=2)
    plan = SacPlan(
        n_qubits=n, t_hat=t_hat, p_param=p_param, branch=branch, subsets=keep,
        betas=betas, signs=signs, frame=_frame(w, branch, a), l_x=l_x,
        theta_init=theta_init, q=np.asarray(q), n_candidates=len(candidates),
        commutator_terms=count_commutator_terms(h, keep), bound=complexity_bound(g, t_hat),
        k=k, d=d, n_edges=g.n_edges, warning=warning)
    return plan


def complexity_bound(g: InteractionHypergraph, t: int) -> int:
    return binom(g.k, t) * g.n_edges * 4 ** g.k


def complexity_report(plan: SacPlan) -> dict:
    out = plan.counts()
    if out["commutator_terms"] > out["bound"]:
        raise AssertionError("commutator evaluations exceed C(k,t)|E|4^k")
    return out


@dataclass
class SacResult:
    theta_star: float
    energy: float
    reference_energy: float
    thetas: np.ndarray
    energies: np.ndarray
    variance: float
    evaluations: int
    exact_energy: float | None = None
    fraction: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def improvement(self) -> float:
        return self.reference_energy - self.energy

    def to_dict(self) -> dict:
        return {"theta_star": self.theta_star, "energy": self.energy,
                "reference_energy": self.reference_energy, "variance": self.variance,
                "exact_energy": self.exact_energy, "fraction": self.fraction,
                "evaluations": self.evaluations, **self.extra}


def _result(res: ScanResult, e0: float, var: float, e_exact, extra=None) -> SacResult:
    theta, energy = res.theta, res.value
    if e0 < energy:
        theta, energy = 0.0, e0
    frac = None
    if e_exact is not None and e0 > e_exact:
        frac = correlation_fraction(e0, energy, e_exact)
    return SacResult(theta, energy, e0, res.thetas, res.values, var, res.evaluations,
                     e_exact, frac, extra or {})


def sac_energy_function(h: PauliSum, plan: SacPlan, v: np.ndarray):
    return lambda theta: sv.expectation(h, plan.state(theta, v))


def sac_optimize(h: PauliSum, w: Preparation, plan: SacPlan, grid=DEFAULT_GRID,
                 tol: float = 1e-8, e_exact: float | None = None,
                 v: np.ndarray | None = None) -> SacResult:
    """Scan ``E(theta)`` on the grid and refine the best sample by golden section."""
    if v is None:
        v = sv.prepare(w)
    thetas = theta_grid(*grid)
    e0 = sv.expectation(h, v)
    var = sv.variance(h, v)
    if plan.is_empty:
        energies = np.full(thetas.size, e0)
        res = ScanResult(0.0, e0, thetas, energies, 0)
    else:
        f = sac_energy_function(h, plan, v)
        energies = np.array([f(t) for t in thetas])
        res = refine_scan(f, thetas, energies, tol)
        res.evaluations += thetas.size
    out = _result(res, e0, var, e_exact, {"plan": plan.to_dict()})
    out.extra["strict"] = bool(out.energy < e0 - 1e-10)
    return out


def run_sac(h: PauliSum, w: Preparation, branch: str = "auto", grid=DEFAULT_GRID,
            tol: float = 1e-8, e_exact: float | None = None) -> tuple[SacPlan, SacResult]:
    """Build and optimize; ``auto`` keeps the better branch.

    For a real Hamiltonian and a basis-state reference the X branch has
    vanishing commutators and is skipped.
    """
    v = sv.prepare(w)
    if branch == "auto":
        real = all(abs(c.imag) == 0 for c in h.terms.values()) and h.compiled().symmetric
        branches = ["P"] if (real and w.kind == "flip") else ["P", "X"]
    else:
        branches = [branch]
    best = None
    for b in branches:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FlatLandscapeWarning)
            plan = sac_build(h, w, b, v=v)
        res = sac_optimize(h, w, plan, grid, tol, e_exact, v)
        if best is None or res.energy < best[1].energy:
            best = (plan, res)
    return best


# t sweep


def flip_conjugate(h: PauliSum, mask: int) -> PauliSum:
    """``X^mask H X^mask``: words anticommuting with the flips change sign."""
    return PauliSum(h.n_qubits, {(x, z): c * (-1) ** (bin(z & mask).count("1") & 1)
                                 for (x, z), c in h.terms.items()})


@dataclass
class SweepEntry:
    p_param: int
    theta_star: float
    energy: float
    empty: bool


def t_sweep(h: PauliSum, w: Preparation, t_values, t_hat: int | None = None,
            grid=(-math.pi / 2, math.pi / 2, 41), tol: float = 1e-8) -> dict[int, SweepEntry]:
    """Optimal energy when ``P(t)`` is built with each ``t`` while the subsets keep size ``t_hat``.

    When all nonempty plans share subsets and signs and the reference is a
    basis state, one histogram pass per angle gives every ``t`` at once.
    """
    v = sv.prepare(w)
    e0 = sv.expectation(h, v)
    phi_res = sv.frame_residual(h, v, w)
    q = np.bincount(sv.popcounts(h.n_qubits), weights=np.abs(phi_res) ** 2,
                    minlength=h.n_qubits + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FlatLandscapeWarning)
        plans = {t: sac_build(h, w, "P", t_hat, t, v=v, q=q) for t in t_values}
    live = {t: p for t, p in plans.items() if not p.is_empty}
    thetas = theta_grid(*grid)
    out = {t: SweepEntry(t, 0.0, e0, True) for t, p in plans.items() if p.is_empty}
    if not live:
        return out
    first = next(iter(live.values()))
    shared = w.kind == "flip" and all(
        p.subsets == first.subsets and np.array_equal(p.signs, first.signs) for p in live.values())
    if shared:
        hp = flip_conjugate(h, w.basis_index).compiled()
        zero = sv.basis_state(0, h.n_qubits)
        m = np.arange(-h.n_qubits, h.n_qubits + 1)
        cache: dict[float, np.ndarray] = {}

        def hist(theta):
            if theta not in cache:
                phi = sv.apply_commuting_exponential(first.l_x, theta, zero)
                cache[theta] = hp.weight_histogram(phi)
            return cache[theta]

        def energy(theta, t):
            return float((np.exp(1j * p_angle(t) * m) * hist(theta)).sum().real)

        for t in live:
            f = lambda th, t=t: energy(th, t)
            vals = np.array([f(th) for th in thetas])
            res = refine_scan(f, thetas, vals, tol)
            out[t] = SweepEntry(t, res.theta, min(res.value, e0), False)
    else:
        for t, p in live.items():
            res = sac_optimize(h, w, p, grid, tol, v=v)
            out[t] = SweepEntry(t, res.theta_star, res.energy, False)
    return dict(sorted(out.items()))
