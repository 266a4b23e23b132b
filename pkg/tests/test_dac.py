import math

import numpy as np
import pytest
import scipy.linalg as sla

from qgsa import dac, models
from qgsa import statevector as sv
from qgsa.models import Preparation
from qgsa.pauli import PauliSum

from conftest import k_local_sum


def toy():
    h = PauliSum.from_label("X")
    return h, Preparation.flip(1, ())


def random_instance(rng, n=4, k=2, edges=4, product=True):
    h = k_local_sum(rng, n, k, edges)
    if product:
        w = models.random_product_state(n, rng).preparation()
    else:
        w = Preparation.from_index(n, int(rng.integers(1 << n)))
    return h, w


class TestBuildF:
    def test_flip_example(self):
        f = dac.build_F(Preparation.flip(2, [0]), 2)
        assert f.allclose(PauliSum.from_terms(2, [(1, "II"), (0.5, "ZI"), (-0.5, "IZ")]))

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            dac.build_F(Preparation.flip(2, []), 3)

    @pytest.mark.parametrize("product", [False, True])
    def test_annihilates_reference(self, rng, product):
        for _ in range(5):
            _, w = random_instance(rng, 5, product=product)
            f = dac.build_F(w)
            v = sv.prepare(w)
            assert np.linalg.norm(sv.apply_pauli_sum(f, v)) < 1e-12

    def test_spectrum_is_distance(self, rng):
        # in the prepared frame F counts the excited qubits
        _, w = random_instance(rng, 3)
        evals = np.linalg.eigvalsh(dac.build_F(w).to_matrix())
        np.testing.assert_allclose(evals, sorted(bin(b).count("1") for b in range(8)),
                                   atol=1e-12)


class TestBuildA:
    def test_x_on_zero(self):
        h, w = toy()
        plan = dac.dac_plan(h, w)
        assert plan.A.allclose(PauliSum.from_label("Y", -1.0))

    def test_xx(self):
        plan = dac.dac_plan(PauliSum.from_label("XX"), Preparation.flip(2, ()))
        assert plan.A.allclose(PauliSum.from_terms(2, [(-1, "YX"), (-1, "XY")]))

    def test_diagonal_is_empty(self):
        h = PauliSum.from_terms(2, [(1, "ZZ"), (0.4, "ZI")])
        plan = dac.dac_plan(h, Preparation.flip(2, [1]))
        assert plan.is_empty
        res = dac.dac_optimize(h, sv.prepare(Preparation.flip(2, [1])), plan)
        assert res.theta_star == 0 and res.energy == res.reference_energy

    def test_hermitian_and_dense(self, rng):
        for _ in range(5):
            h, w = random_instance(rng)
            f = dac.build_F(w)
            plan = dac.build_A(h, f)
            hm, fm = h.to_matrix(), f.to_matrix()
            np.testing.assert_allclose(plan.A.to_matrix(), 1j * (hm @ fm - fm @ hm), atol=1e-12)

    def test_rejects_non_hermitian(self):
        h = PauliSum.from_label("X", 1j)
        with pytest.raises(sv.HermiticityError):
            dac.build_A(h, dac.build_F(Preparation.flip(1, ())))

    def test_term_bounds(self, rng):
        for product in (False, True):
            h, w = random_instance(rng, 6, 3, 5, product)
            plan = dac.dac_plan(h, w)
            assert plan.n_terms <= plan.local_bound
            if not product:
                assert plan.n_terms <= plan.basis_bound


class TestOptimize:
    def test_toy(self):
        h, w = toy()
        _, res = dac.run_dac(h, w)
        assert res.theta_star == pytest.approx(math.pi / 4, abs=1e-6)
        assert res.energy == pytest.approx(-1, abs=1e-8)
        np.testing.assert_allclose(res.energies, -np.sin(2 * res.thetas), atol=1e-10)

    def test_grid_energies_match_expm(self, rng):
        h, w = random_instance(rng, 4)
        plan = dac.dac_plan(h, w)
        v = sv.prepare(w)
        res = dac.dac_optimize(h, v, plan, grid=(-1, 1, 9))
        hm, am = h.to_matrix(), plan.A.to_matrix()
        for t, e in zip(res.thetas, res.energies):
            psi = sla.expm(-1j * t * am) @ v
            assert e == pytest.approx(np.vdot(psi, hm @ psi).real, abs=1e-10)

    def test_first_order_change(self, rng):
        for _ in range(5):
            h, w = random_instance(rng, 5)
            plan = dac.dac_plan(h, w)
            v = sv.prepare(w)
            f = dac.dac_energy_function(h, plan, v)
            step = 1e-5
            fd = (f(step) - f(-step)) / (2 * step)
            hv = sv.apply_pauli_sum(h, v)
            hfh = np.vdot(hv, sv.apply_pauli_sum(plan.F, hv)).real
            assert fd == pytest.approx(-2 * hfh, rel=1e-5, abs=1e-9)
            a2 = np.linalg.norm(sv.apply_pauli_sum(plan.A, v)) ** 2
            assert a2 > 0

    def test_never_above_reference(self, rng):
        for _ in range(10):
            h, w = random_instance(rng, 5, 3, 4)
            _, res = dac.run_dac(h, w, grid=(-math.pi / 2, math.pi / 2, 61))
            assert res.energy <= res.reference_energy
            assert res.energy < res.reference_energy - 1e-10

    def test_trotter_converges(self, rng):
        h, w = random_instance(rng, 5, 2, 6)
        plan = dac.dac_plan(h, w)
        v = sv.prepare(w)
        theta = 0.4
        exact = sv.apply_exponential(plan.A, theta, v)
        errs = [np.linalg.norm(sv.apply_exponential(plan.A, theta, v, "trotter", r) - exact)
                for r in (4, 8, 16, 32)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] / errs[-2] == pytest.approx(0.5, abs=0.1)

    def test_trotter_method_runs(self, rng):
        h, w = random_instance(rng, 4)
        plan = dac.dac_plan(h, w)
        res = dac.dac_optimize(h, sv.prepare(w), plan, "trotter", (-1, 1, 11), steps=8)
        assert res.energy <= res.reference_energy
        assert res.extra["steps"] == 8 and res.extra["method"] == "trotter"

    def test_unknown_method(self, rng):
        h, w = random_instance(rng, 3)
        with pytest.raises(ValueError):
            dac.run_dac(h, w, method="leapfrog")

    def test_fraction(self):
        h = PauliSum.from_terms(2, [(1, "XX"), (1, "ZI")])
        w = Preparation.flip(2, [0])
        _, res = dac.run_dac(h, w, e_exact=-math.sqrt(2))
        assert 0 < res.fraction <= 1 + 1e-9
