"""Dense statevector simulation on little-endian amplitude arrays.

A state on ``n`` qubits is a complex128 numpy array of length ``2**n``;
bit ``j`` of the basis index is qubit ``j``.
"""

from __future__ import annotations

import math
import struct

import numba as nb
import numpy as np
from numba import types
from numba.extending import intrinsic

from .pauli import DimensionError, PauliSum, _PHASES, _popcount

MAX_QUBITS = 24
HERMITIAN_TOL = 1e-8
NORM_TOL = 1e-10
_BLOCK = 2048
# states with at most dim / SPARSE_RATIO nonzero amplitudes take the sparse path
SPARSE_RATIO = 64
_MAGIC = b"QGSA"
_DUMP_VERSION = 1
_HEADER = "<4sHHB"


class CapacityError(ValueError):
    pass


class HermiticityError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@intrinsic
def _popc(typingctx, v):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


def n_qubits_of(psi: np.ndarray) -> int:
    n = int(psi.size).bit_length() - 1
    if psi.ndim != 1 or (1 << n) != psi.size:
        raise ValueError("amplitude array length must be a power of two")
    return n


def check_capacity(n: int, limit: int = MAX_QUBITS) -> None:
    if n > limit:
        raise CapacityError(f"{n} qubits exceeds the configured maximum of {limit}")


def _top_bit(x: int) -> np.uint64:
    return np.uint64(1 << (x.bit_length() - 1)) if x else np.uint64(0)


# compiled sums


class CompiledPauliSum:
    """Terms grouped by x-mask with the Pauli phases folded into the coefficients.

    Word ``(x, z)`` maps ``|j>`` to ``c (-1)^{j.z} |j^x>`` after folding, so a
    group contributes ``out[j^x] += D(j) psi[j]`` with ``D(j) = sum_k c_k
    (-1)^{j.z_k}``. When every folded coefficient is real and the sum is
    Hermitian the matrix is real symmetric and each pair ``(j, j^x)`` is
    visited once.
    """

    def __init__(self, h: PauliSum):
        self.n_qubits = h.n_qubits
        groups: dict[int, list[tuple[int, complex]]] = {}
        for (x, z), c in h.terms.items():
            groups.setdefault(x, []).append((z, c * _PHASES[_popcount(x & z) % 4]))
        diag = groups.pop(0, [])
        folded = [c for _, c in diag] + [c for g in groups.values() for _, c in g]
        self.symmetric = all(c.imag == 0 for c in folded) and h.is_hermitian(0.0)
        dtype = np.float64 if self.symmetric else np.complex128
        cast = (lambda c: c.real) if self.symmetric else complex
        self.n_groups = len(groups)
        self.diag_z = np.array([z for z, _ in diag], dtype=np.uint64)
        self.diag_c = np.array([cast(c) for _, c in diag], dtype=dtype)
        order = sorted(groups)
        self.xs = np.array(order, dtype=np.uint64)
        self.tops = np.array([_top_bit(x) for x in order], dtype=np.uint64)
        starts, zs, cs = [0], [], []
        for x in order:
            for z, c in groups[x]:
                zs.append(z)
                cs.append(c)
            starts.append(len(zs))
        self.starts = np.array(starts, dtype=np.int64)
        self.zs = np.array(zs, dtype=np.uint64)
        self.cs = np.array([cast(c) for c in cs], dtype=dtype)
        self._diag = None

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def _args(self):
        return (self.xs, self.tops, self.starts, self.zs, self.cs, min(self.dim, _BLOCK))

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            out = np.zeros(self.dim, dtype=self.diag_c.dtype)
            if self.diag_z.size:
                _diagonal_kernel(out, self.diag_z, self.diag_c)
            self._diag = out
        return self._diag

    def _check(self, psi):
        if psi.shape != (self.dim,):
            raise DimensionError(f"state has {psi.size} amplitudes, operator needs {self.dim}")

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        """``H psi``; real input stays real when the matrix is real symmetric."""
        self._check(psi)
        if self.symmetric and np.isrealobj(psi):
            psi = np.ascontiguousarray(psi, dtype=np.float64)
        else:
            psi = np.ascontiguousarray(psi, dtype=complex)
        out = self.diagonal() * psi
        if self.n_groups:
            if self.symmetric:
                _sym_matvec(psi, out, *self._args())
            else:
                _gen_matvec(psi, out, *self._args())
        return out

    def _support(self, psi: np.ndarray):
        """Indices of the nonzero amplitudes when the state is sparse enough, else None."""
        if self.dim < 4 * SPARSE_RATIO:
            return None
        idx = np.flatnonzero(psi)
        return idx if idx.size * SPARSE_RATIO <= self.dim else None

    def _sparse_histogram(self, psi: np.ndarray, idx: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        hist = np.zeros(2 * n + 1, dtype=complex)
        _sparse_hist(idx.astype(np.uint64), psi[idx], self.xs, self.starts, self.zs,
                     self.cs.astype(complex), self.diag_z, self.diag_c.astype(complex), n, hist)
        return hist

    def expectation_complex(self, psi: np.ndarray) -> complex:
        self._check(psi)
        psi = np.ascontiguousarray(psi, dtype=complex)
        idx = self._support(psi)
        if idx is not None:
            return complex(self._sparse_histogram(psi, idx).sum())
        if self.symmetric:
            e = float(np.dot(self.diagonal(), psi.real ** 2 + psi.imag ** 2))
            if self.n_groups:
                e += _sym_expect(psi, *self._args())
            return complex(e)
        return complex(np.vdot(psi, self.matvec(psi)))

    def weight_histogram(self, psi: np.ndarray) -> np.ndarray:
        """``C[m + n] = sum conj(psi_i) H_ij psi_j`` over pairs with ``|j| - |i| = m``.

        If ``R`` multiplies each amplitude by ``exp(i a |y|)`` then
        ``<R psi|H|R psi> = sum_m exp(i a m) C[m + n]``.
        """
        self._check(psi)
        psi = np.ascontiguousarray(psi, dtype=complex)
        idx = self._support(psi)
        if idx is not None:
            return self._sparse_histogram(psi, idx)
        n = self.n_qubits
        hist = np.zeros(2 * n + 1, dtype=complex)
        hist[n] = np.dot(self.diagonal(), np.abs(psi) ** 2)
        if self.n_groups:
            if self.symmetric:
                _sym_histogram(psi, hist, *self._args(), n)
            else:
                _gen_histogram(psi, hist, *self._args(), n)
        return hist


@nb.njit(cache=True)
def _diagonal_kernel(out, zs, cs):
    one = np.uint64(1)
    for k in range(zs.size):
        z = zs[k]
        c = cs[k]
        for j in range(out.size):
            out[j] += c * (1.0 - 2.0 * np.float64(_popc(np.uint64(j) & z) & one))


@nb.njit(cache=True, inline="always")
def _signs_into(d, base, zs, cs, k0, k1):
    # d[t] = sum_k c_k (-1)^{(base ^ t).z_k}
    one = np.uint64(1)
    for t in range(d.size):
        d[t] = 0.0
    for k in range(k0, k1):
        z = zs[k]
        c = cs[k]
        for t in range(d.size):
            d[t] += c * (1.0 - 2.0 * np.float64(_popc((base ^ np.uint64(t)) & z) & one))


@nb.njit(cache=True)
def _sym_matvec(v, out, xs, tops, starts, zs, cs, blk):
    d = np.empty(blk)
    for b0 in range(0, v.size, blk):
        ub0 = np.uint64(b0)
        for g in range(xs.size):
            top = tops[g]
            if ub0 & top:
                continue
            base = ub0 ^ xs[g]
            _signs_into(d, base, zs, cs, starts[g], starts[g + 1])
            if top < blk:
                for t in range(blk):
                    out[b0 + t] += d[t] * v[base ^ np.uint64(t)]
            else:
                for t in range(blk):
                    j = base ^ np.uint64(t)
                    i = b0 + t
                    out[i] += d[t] * v[j]
                    out[j] += d[t] * v[i]


@nb.njit(cache=True)
def _gen_matvec(v, out, xs, tops, starts, zs, cs, blk):
    d = np.empty(blk, dtype=np.complex128)
    for b0 in range(0, v.size, blk):
        ub0 = np.uint64(b0)
        for g in range(xs.size):
            base = ub0 ^ xs[g]
            _signs_into(d, base, zs, cs, starts[g], starts[g + 1])
            for t in range(blk):
                # the group maps |base^t> onto |b0+t>
                out[b0 + t] += d[t] * v[base ^ np.uint64(t)]


@nb.njit(cache=True)
def _sym_expect(v, xs, tops, starts, zs, cs, blk):
    d = np.empty(blk)
    acc = 0.0
    for b0 in range(0, v.size, blk):
        ub0 = np.uint64(b0)
        for g in range(xs.size):
            top = tops[g]
            if ub0 & top:
                continue
            base = ub0 ^ xs[g]
            _signs_into(d, base, zs, cs, starts[g], starts[g + 1])
            s = 0.0
            for t in range(blk):
                a = v[b0 + t]
                b = v[base ^ np.uint64(t)]
                s += d[t] * (a.real * b.real + a.imag * b.imag)
            acc += s if top < blk else 2.0 * s
    return acc


@nb.njit(cache=True)
def _sym_histogram(v, hist, xs, tops, starts, zs, cs, blk, n):
    d = np.empty(blk)
    for b0 in range(0, v.size, blk):
        ub0 = np.uint64(b0)
        for g in range(xs.size):
            top = tops[g]
            if ub0 & top:
                continue
            x = xs[g]
            wx = np.int64(_popc(x))
            base = ub0 ^ x
            _signs_into(d, base, zs, cs, starts[g], starts[g + 1])
            paired = top >= blk
            for t in range(blk):
                i = ub0 + np.uint64(t)
                j = base ^ np.uint64(t)
                m = wx - 2 * np.int64(_popc(i & x))
                term = d[t] * (v[i].conjugate() * v[j])
                hist[n + m] += term
                if paired:
                    hist[n - m] += term.conjugate()


@nb.njit(cache=True)
def _gen_histogram(v, hist, xs, tops, starts, zs, cs, blk, n):
    d = np.empty(blk, dtype=np.complex128)
    for b0 in range(0, v.size, blk):
        ub0 = np.uint64(b0)
        for g in range(xs.size):
            x = xs[g]
            wx = np.int64(_popc(x))
            base = ub0 ^ x
            _signs_into(d, base, zs, cs, starts[g], starts[g + 1])
            for t in range(blk):
                i = ub0 + np.uint64(t)
                m = wx - 2 * np.int64(_popc(i & x))
                hist[n + m] += d[t] * (v[i].conjugate() * v[base ^ np.uint64(t)])


@nb.njit(cache=True)
def _sparse_hist(idx, vals, xs, starts, zs, cs, dz, dc, n, hist):
    # pairs (i = j ^ x, j) with both amplitudes nonzero; idx is sorted
    one = np.uint64(1)
    for a in range(idx.size):
        j = idx[a]
        vj = vals[a]
        d = 0.0 + 0.0j
        for k in range(dz.size):
            d += dc[k] * (1.0 - 2.0 * np.float64(_popc(j & dz[k]) & one))
        hist[n] += d * (vj.conjugate() * vj)
        wj = np.int64(_popc(j))
        for g in range(xs.size):
            i = j ^ xs[g]
            b = np.searchsorted(idx, i)
            if b == idx.size or idx[b] != i:
                continue
            d = 0.0 + 0.0j
            for k in range(starts[g], starts[g + 1]):
                d += cs[k] * (1.0 - 2.0 * np.float64(_popc(j & zs[k]) & one))
            m = wj - np.int64(_popc(i))
            hist[n + m] += d * (vals[b].conjugate() * vj)


@nb.njit(cache=True)
def _word_rotation(v, x, top, z, ph, a, b):
    """In place ``v <- a v + b P v`` for the word ``P = ph X^x Z^z``."""
    one = np.uint64(1)
    if x == 0:
        for i in range(v.size):
            s = 1.0 - 2.0 * np.float64(_popc(np.uint64(i) & z) & one)
            v[i] = (a + b * ph * s) * v[i]
        return
    for i in range(v.size):
        ui = np.uint64(i)
        if ui & top:
            continue
        j = ui ^ x
        si = 1.0 - 2.0 * np.float64(_popc(ui & z) & one)
        sj = 1.0 - 2.0 * np.float64(_popc(j & z) & one)
        vi = v[i]
        vj = v[j]
        v[i] = a * vi + b * ph * sj * vj
        v[j] = a * vj + b * ph * si * vi


def rotate_word(psi: np.ndarray, x: int, z: int, a: complex, b: complex) -> None:
    """In place ``psi <- a psi + b P psi`` for the Pauli word with masks ``(x, z)``."""
    ph = _PHASES[_popcount(x & z) % 4]
    _word_rotation(psi, np.uint64(x), _top_bit(x), np.uint64(z), complex(ph),
                   complex(a), complex(b))


# preparation


def basis_state(index: int, n: int) -> np.ndarray:
    check_capacity(n)
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def product_vector(spinors) -> np.ndarray:
    """Tensor product with the first spinor on qubit 0 (least significant)."""
    psi = np.ones(1, dtype=complex)
    for s in spinors:
        psi = np.kron(np.asarray(s, dtype=complex), psi)
    return psi


def prepare(p, n: int | None = None, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """State ``W|0...0>`` for a Preparation, or the product state of a ProductState."""
    from .models import Preparation, ProductState

    if n is None:
        n = p.n_qubits
    if n != p.n_qubits:
        raise DimensionError(f"preparation acts on {p.n_qubits} qubits, asked for {n}")
    check_capacity(n, max_qubits)
    if isinstance(p, ProductState):
        return product_vector(p.spinors())
    if not isinstance(p, Preparation):
        raise TypeError("expected a Preparation or ProductState")
    if p.kind == "flip":
        return basis_state(p.basis_index, n)
    return product_vector(u[:, 0] for u in p.unitaries)


def apply_local(psi: np.ndarray, qubit: int, u: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit; returns a new array."""
    n = n_qubits_of(psi)
    view = psi.reshape(1 << (n - qubit - 1), 2, 1 << qubit)
    return np.einsum("ab,ibj->iaj", u, view).reshape(-1)


def apply_flips(psi: np.ndarray, mask: int) -> np.ndarray:
    if mask == 0:
        return psi.copy()
    return psi[np.arange(psi.size, dtype=np.int64) ^ mask]


def _monomial(u: np.ndarray):
    """``(flip, (f0, f1))`` with ``u|b> = f_b |b ^ flip>``, or None for dense ``u``."""
    if u[0, 1] == 0 and u[1, 0] == 0:
        return 0, (u[0, 0], u[1, 1])
    if u[0, 0] == 0 and u[1, 1] == 0:
        return 1, (u[1, 0], u[0, 1])
    return None


def apply_frame(frame, psi: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Apply per-qubit unitaries ``frame[q]``; ``None`` entries are identities.

    Diagonal and anti-diagonal factors are combined into one phase vector
    and one index flip.
    """
    n = n_qubits_of(psi)
    factors, flips, dense = [], 0, []
    for q in range(n):
        u = frame[q] if q < len(frame) else None
        if u is None:
            factors.append((1.0, 1.0))
            continue
        u = u.conj().T if inverse else u
        mono = _monomial(u)
        if mono is None:
            factors.append((1.0, 1.0))
            dense.append((q, u))
        else:
            flips |= mono[0] << q
            factors.append(mono[1])
    out = psi
    if flips or any(f != (1.0, 1.0) for f in factors):
        out = apply_flips(product_vector(factors) * psi, flips)
    for q, u in dense:
        out = apply_local(out, q, u)
    return out


def apply_preparation(w, psi: np.ndarray, inverse: bool = False) -> np.ndarray:
    """``W psi`` or ``W^-1 psi`` for a Preparation ``w``."""
    if w.kind == "flip":
        return apply_flips(psi, w.basis_index)
    return apply_frame(w.unitaries, psi, inverse)


# operator application


def _match(h: PauliSum, psi: np.ndarray) -> int:
    n = n_qubits_of(psi)
    if n != h.n_qubits:
        raise DimensionError(f"operator on {h.n_qubits} qubits, state on {n}")
    check_capacity(n)
    return n


def apply_pauli_sum(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    """``H|psi>`` (not normalized)."""
    _match(h, psi)
    return h.compiled().matvec(psi)


def expectation(h: PauliSum, psi: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    _match(h, psi)
    val = h.compiled().expectation_complex(psi)
    if abs(val.imag) > tol:
        raise HermiticityError(f"expectation has imaginary part {val.imag:.3e}")
    return val.real


def variance(h: PauliSum, psi: np.ndarray) -> float:
    hpsi = apply_pauli_sum(h, psi)
    mean = np.vdot(psi, hpsi)
    if abs(mean.imag) > HERMITIAN_TOL:
        raise HermiticityError(f"expectation has imaginary part {mean.imag:.3e}")
    return max(0.0, float(np.vdot(hpsi, hpsi).real) - mean.real ** 2)


def popcounts(n: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)


def frame_residual(h: PauliSum, v: np.ndarray, w) -> np.ndarray:
    """``W^-1 H|v>``."""
    return apply_preparation(w, apply_pauli_sum(h, v), inverse=True)


def weight_resolved_overlap(h: PauliSum, v: np.ndarray, w) -> np.ndarray:
    """``q_t`` for ``t = 0..n``: weight of ``W^-1 H|v>`` at Hamming weight ``t``."""
    phi = frame_residual(h, v, w)
    n = n_qubits_of(v)
    return np.bincount(popcounts(n), weights=np.abs(phi) ** 2, minlength=n + 1)


# exponentials


def _renormalize(psi: np.ndarray, ref_norm: float) -> np.ndarray:
    nrm = np.linalg.norm(psi)
    if abs(nrm - ref_norm) > NORM_TOL * max(1.0, ref_norm):
        raise ArithmeticError(f"norm drifted by {abs(nrm - ref_norm):.3e}")
    return psi * (ref_norm / nrm)


def check_commuting_involutions(l_sum: PauliSum) -> None:
    words = sorted(l_sum.terms.items())
    for _, c in words:
        if abs(abs(c) - 1.0) > 1e-12 or abs(c.imag) > 1e-12:
            raise PreconditionError("coefficients must be +1 or -1")
    if not words:
        return
    xs = np.array([w[0][0] for w in words], dtype=np.uint64)
    zs = np.array([w[0][1] for w in words], dtype=np.uint64)
    sym = np.bitwise_count(xs[:, None] & zs[None, :]) + np.bitwise_count(zs[:, None] & xs[None, :])
    odd = np.argwhere(sym & 1)
    if odd.size:
        i, j = odd[0]
        raise PreconditionError(f"terms {i} and {j} of L do not commute")


def apply_commuting_exponential(l_sum: PauliSum, theta: float, psi: np.ndarray,
                                frame=None) -> np.ndarray:
    """``V exp(i theta L) V^dag psi`` with ``L`` a sum of commuting +-1 weighted words.

    Applied exactly as the product of ``cos(theta) + i c_s sin(theta) P_s``.
    ``frame`` optionally gives per-qubit unitaries ``V``.
    """
    check_commuting_involutions(l_sum)
    _match(l_sum, psi)
    ref = np.linalg.norm(psi)
    out = np.array(psi, dtype=complex)
    if frame is not None:
        out = apply_frame(frame, out, inverse=True)
    cth, sth = math.cos(theta), math.sin(theta)
    for (x, z), c in sorted(l_sum.terms.items()):
        rotate_word(out, x, z, cth, 1j * c.real * sth)
    if frame is not None:
        out = apply_frame(frame, out)
    return _renormalize(out, ref)


def apply_exponential(a_sum: PauliSum, theta: float, psi: np.ndarray,
                      method: str = "exact", steps: int = 1,
                      tol: float = 1e-14) -> np.ndarray:
    """``exp(-i theta A) psi`` by scaled Taylor series or first-order Trotter."""
    if not a_sum.is_hermitian(1e-10):
        raise PreconditionError("exponent must be Hermitian")
    _match(a_sum, psi)
    ref = np.linalg.norm(psi)
    out = np.array(psi, dtype=complex)
    if theta == 0 or not a_sum.terms:
        return out
    if method == "exact":
        comp = a_sum.compiled()
        sub = max(1, math.ceil(abs(theta) * a_sum.norm1()))
        for _ in range(sub):
            out = taylor_step(comp, theta / sub, out, tol)
    elif method == "trotter":
        if steps < 1:
            raise ValueError("trotter needs at least one step")
        words = a_sum.sorted_items()
        for _ in range(steps):
            for w, g in words:
                phi = theta * g.real / steps
                rotate_word(out, w.x, w.z, math.cos(phi), -1j * math.sin(phi))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _renormalize(out, ref)


def taylor_step(comp: CompiledPauliSum, tau: float, psi: np.ndarray,
                tol: float = 1e-14) -> np.ndarray:
    """Truncated series for ``exp(-i tau A) psi``, stopped when a term is negligible."""
    acc = np.array(psi, dtype=complex)
    term = acc
    for k in range(1, 200):
        term = comp.matvec(term) * (-1j * tau / k)
        acc += term
        if np.linalg.norm(term) < tol * np.linalg.norm(acc):
            return acc
    raise ArithmeticError("Taylor series failed to converge")


# binary dump


def dump_amplitudes(psi: np.ndarray, path) -> None:
    n = n_qubits_of(psi)
    with open(path, "wb") as fh:
        fh.write(struct.pack(_HEADER, _MAGIC, _DUMP_VERSION, n, 1))
        fh.write(np.asarray(psi, dtype="<c8").tobytes())


def load_amplitudes(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, version, n, little = struct.unpack(_HEADER, fh.read(struct.calcsize(_HEADER)))
        if magic != _MAGIC or version != _DUMP_VERSION:
            raise ValueError(f"{path}: not a version-{_DUMP_VERSION} amplitude dump")
        data = np.frombuffer(fh.read(), dtype="<c8" if little else ">c8")
    if data.size != 1 << n:
        raise ValueError(f"{path}: expected {1 << n} amplitudes, found {data.size}")
    return data.astype(complex)
