from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import admissible_disc, random_complex, vanishing_slopes, well_conditioned
from spectral_lab.discs import AnalyticDisc
from spectral_lab.errors import NotCyclic, NotSingleEigenvalue, ThetaViolated
from spectral_lab.lifting import (LiftFunction, NilpotentJordanForm, all_forms, build_lift,
                                  degree_vector, lift_matrix, lift_through, mobius_disc_taylor,
                                  mobius_sigma, nilpotent_normal_form, sigma_of_lift,
                                  theta_residuals)
from spectral_lab.matrix_core import companion, is_cyclic, mobius_matrix, sigma, sigma_from_roots

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def disc_from_root_polys(polys):
    """Disc whose value at zeta is sigma of the roots p_k(zeta), for polynomial p_k."""
    n = len(polys)
    deg = sum(len(p) - 1 for p in polys)
    e = [np.zeros(deg + 1, dtype=complex) for _ in range(n + 1)]
    e[0][0] = 1
    for k, p in enumerate(polys, start=1):
        for j in range(k, 0, -1):
            prod = np.convolve(e[j - 1], p)[: deg + 1]
            e[j] = e[j] + np.pad(prod, (0, deg + 1 - prod.size))
    return AnalyticDisc(np.array(e[1:]))


class TestForms:
    def test_zero(self):
        form, P = nilpotent_normal_form(np.zeros((3, 3)))
        assert form.F0 == (1, 2, 3) and form.r == 0
        assert np.allclose(P, np.eye(3))

    def test_single_entry(self):
        B = np.zeros((3, 3))
        B[1, 2] = 1
        form, _ = nilpotent_normal_form(B)
        assert form.F0 == (1, 2) and form.F1 == (3,) and form.r == 1

    def test_jordan_block(self):
        form, _ = nilpotent_normal_form(np.eye(3, k=1))
        assert form.F0 == (1,) and form.F1 == (2, 3) and form.r == 2

    @pytest.mark.parametrize("form", all_forms(5), ids=lambda f: str(f.block_sizes))
    def test_conjugated_forms(self, form, rng):
        lam = 0.3 - 0.2j
        P0 = well_conditioned(rng, 5, 30)
        B = P0 @ (lam * np.eye(5) + form.matrix()) @ np.linalg.inv(P0)
        got, P = nilpotent_normal_form(B, declared=[(lam, 5)])
        assert got == form
        assert np.allclose(np.linalg.solve(P, mobius_matrix(lam, B) @ P), form.matrix(), atol=1e-8)

    def test_two_eigenvalues_rejected(self):
        with pytest.raises(NotSingleEigenvalue):
            nilpotent_normal_form(np.diag([0.0, 0.5]))

    def test_gap_monotonicity(self):
        assert NilpotentJordanForm.from_block_sizes([3, 1, 2]).F0 == (1, 2, 4)
        assert NilpotentJordanForm(4, (1, 3)).block_sizes == (2, 2)
        with pytest.raises(ValueError):
            NilpotentJordanForm(4, (1, 4))  # blocks 3 then 1
        with pytest.raises(ValueError):
            NilpotentJordanForm(3, (2,))

    def test_partition_count(self):
        assert [len(all_forms(n)) for n in range(1, 7)] == [1, 2, 3, 5, 7, 11]


class TestDegreeVector:
    def test_single_entry_form(self):
        assert degree_vector(NilpotentJordanForm(3, (1, 2))) == (1, 1, 2)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_zero_matrix(self, n):
        assert degree_vector(NilpotentJordanForm(n, tuple(range(1, n + 1)))) == tuple(range(1, n + 1))

    @pytest.mark.parametrize("n", [2, 4])
    def test_single_block(self, n):
        assert degree_vector(NilpotentJordanForm(n, (1,))) == (1,) * n

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_bounds(self, n):
        for form in all_forms(n):
            d = degree_vector(form)
            assert d[0] == 1
            assert all(1 <= di <= i for i, di in enumerate(d, start=1))

    @pytest.mark.parametrize("form", all_forms(3), ids=lambda f: str(f.F0))
    def test_vanishing_order_of_perturbations(self, form, rng):
        # sigma_i(B + tM) vanishes to order exactly d_i for a generic direction M
        slopes = vanishing_slopes(form.matrix(), random_complex(rng, (3, 3)))
        assert np.allclose(slopes, degree_vector(form), atol=0.1)


class TestTheta:
    def test_admissible(self, rng):
        form = NilpotentJordanForm(3, (1, 2))
        assert max(theta_residuals(admissible_disc(rng, form), form)) == 0

    def test_violation(self):
        form = NilpotentJordanForm(3, (1, 2))
        phi = AnalyticDisc([[0, 0], [0, 0], [0, 1]])
        assert max(theta_residuals(phi, form)) == 1
        with pytest.raises(ThetaViolated):
            build_lift(phi, form)

    def test_derivatives_from_coefficients(self):
        form = NilpotentJordanForm(3, (1, 2, 3))
        phi = AnalyticDisc([[0, 0, 0], [0, 0, 0], [0, 0, 0.5]])
        # third coordinate: phi_3''(0) = 2! * 0.5
        assert theta_residuals(phi, form)[-1] == pytest.approx(1.0)

    def test_sigma_of_matrix_disc_is_admissible(self, rng):
        # phi = sigma(B + zeta M) for the form matrix B satisfies the conditions
        for form in all_forms(3):
            M = random_complex(rng, (3, 3), 0.3)
            zs = np.linspace(0, 1, 7)
            vals = np.array([sigma(form.matrix() + z * M) for z in zs])
            coeffs = np.array([np.polynomial.polynomial.polyfit(zs, vals[:, i], 6) for i in range(3)])
            coeffs[np.abs(coeffs) < 1e-11] = 0
            assert max(theta_residuals(AnalyticDisc(coeffs), form)) <= 1e-10


class TestBuildLift:
    def test_shape_for_single_entry_form(self, rng):
        form = NilpotentJordanForm(3, (1, 2))
        phi = admissible_disc(rng, form)
        L = build_lift(phi, form)
        assert L.f == ("zeta", "1")
        z = 0.37 + 0.2j
        p = phi(z)
        assert np.allclose(L.psi_values(z), [p[0], -p[1], p[2] / z])

    def test_two_by_two_zero(self):
        c = 0.3
        phi = AnalyticDisc([[0, 0.2, 0], [0, 0, c * c]])
        L = build_lift(phi, NilpotentJordanForm(2, (1, 2)))
        z = 0.5
        assert np.allclose(L.matrix(z), [[0, z], [-c * c * z, 0.2 * z]])
        assert np.allclose(sigma(L.matrix(z)), phi(z))

    def test_stationary_disc(self):
        form = NilpotentJordanForm(3, (1, 2))
        L = build_lift(AnalyticDisc.constant([0, 0, 0], 2), form)
        assert np.array_equal(L.matrix(0), form.matrix())
        assert np.allclose(L.psi_values(0.8), 0)

    @given(seeds, st.sampled_from(all_forms(3) + all_forms(4)))
    def test_sigma_identity(self, seed, form):
        rng = np.random.default_rng(seed)
        phi = admissible_disc(rng, form)
        L = build_lift(phi, form)
        zs = 0.9 * np.exp(2j * np.pi * np.arange(64) / 64)
        assert max(np.max(np.abs(sigma(L.matrix(z)) - phi(z))) for z in zs) <= 1e-9
        assert np.max(np.abs(L.matrix(0) - form.matrix())) <= 1e-12
        for z in 0.2 + 0.7 * rng.random(4):
            assert is_cyclic(L.matrix(z * np.exp(2j * np.pi * rng.random())))

    def test_json(self, rng):
        form = NilpotentJordanForm(3, (1,))
        L = build_lift(admissible_disc(rng, form), form)
        js = L.to_json()
        assert js["f"] == ["1", "1"]
        back = LiftFunction.from_json(js)
        assert np.array_equal(back.psi, L.psi) and back.f == L.f


class TestSigmaOfLift:
    def test_first_coordinate(self):
        L = LiftFunction(3, ("zeta", "1"), np.array([[0.1, 0.2], [0, 1], [0, 0.5]], dtype=complex))
        assert sigma_of_lift(L, 0.4)[0] == pytest.approx(0.1 + 0.2 * 0.4)

    def test_companion_shape(self):
        p, q = 0.3 + 0.1j, -0.2
        M = lift_matrix([1.0], [p, q])
        assert np.allclose(sigma(M), [p, -q])

    @given(seeds)
    def test_matches_matrix_sigma(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        f = tuple(rng.choice(["1", "zeta"], size=n - 1))
        L = LiftFunction(n, f, random_complex(rng, (n, 4), 0.5))
        z = complex(*rng.standard_normal(2)) * 0.5
        assert np.max(np.abs(sigma_of_lift(L, z) - sigma(L.matrix(z)))) <= 1e-12


class TestMobiusTransport:
    def test_pointwise(self, rng):
        lam = 0.3 + 0.2j
        roots = random_complex(rng, 4, 0.4)
        got = mobius_sigma(lam, sigma_from_roots(roots))
        want = sigma_from_roots((lam - roots) / (1 - np.conj(lam) * roots))
        assert np.allclose(got, want, atol=1e-13)

    def test_taylor_matches_pointwise(self, rng):
        lam = -0.4 + 0.1j
        phi = AnalyticDisc(random_complex(rng, (3, 3), 0.2))
        T = mobius_disc_taylor(lam, phi, 12)
        z = 0.05
        assert np.allclose(T(z), mobius_sigma(lam, phi(z)), atol=1e-12)


class TestLiftThrough:
    def test_zero_two_by_two(self):
        c, z0 = 0.3, 0.5
        phi = AnalyticDisc([[0, 0, 0], [0, 0, c * c]])
        A = companion(phi(z0))
        W = lift_through(np.zeros((2, 2)), A, phi, z0)
        assert np.allclose(W(0), 0, atol=1e-12) and np.allclose(W(z0), A, atol=1e-10)
        for z in (0.2, -0.3j, 0.45):
            assert np.allclose(sigma(W(z)), phi(z), atol=1e-10)

    def test_scalar_with_nonzero_eigenvalue(self):
        lam, c, z0 = 0.3 + 0.1j, 0.2, 0.4
        phi = AnalyticDisc([[2 * lam, 0, 0], [lam ** 2, 0, -c * c]])
        A = companion(phi(z0))
        W = lift_through(lam * np.eye(2), A, phi, z0, declared_b=[(lam, 2)])
        assert np.allclose(W(0), lam * np.eye(2), atol=1e-10)

    def test_two_eigenvalue_case(self, rng):
        lam, lam1, c, z0 = 0.0, 0.3, 0.2, 0.5
        phi = disc_from_root_polys([[lam, c], [lam, -0.5 * c], [lam1, 0.1]])
        P = well_conditioned(rng, 3, 10)
        B = P @ np.diag([lam, lam, lam1]) @ np.linalg.inv(P)
        A = companion(phi(z0))
        W = lift_through(B, A, phi, z0)
        assert np.allclose(W(0), B, atol=1e-9) and np.allclose(W(z0), A, atol=1e-9)

    def test_two_eigenvalue_violation(self):
        # roots +-c sqrt(zeta) near the double eigenvalue: phi_2 has a simple zero
        c, lam1, z0 = 0.3, 0.3, 0.5
        phi = AnalyticDisc([[lam1, 0], [0, -c * c], [0, -c * c * lam1]])
        with pytest.raises(ThetaViolated):
            lift_through(np.diag([0, 0, lam1]), companion(phi(z0)), phi, z0)

    def test_nilpotent_violation(self):
        phi = AnalyticDisc([[0, 0], [0, 0], [0, 1]])
        B = np.zeros((3, 3))
        B[1, 2] = 1
        with pytest.raises(ThetaViolated):
            lift_through(B, companion(phi(0.5)), phi, 0.5)

    def test_derogatory_target(self):
        with pytest.raises(NotCyclic):
            lift_through(np.zeros((2, 2)), np.zeros((2, 2)), AnalyticDisc.constant([0, 0], 2), 0.5)

    def test_three_clusters_rejected(self):
        phi = disc_from_root_polys([[0.1, 0.1], [0.2, 0.1], [-0.3, 0.1]])
        B = np.diag([0.1, 0.2, -0.3])
        with pytest.raises(NotSingleEigenvalue):
            lift_through(B, companion(phi(0.5)), phi, 0.5)

    def test_interpolation_checked(self):
        phi = AnalyticDisc([[0, 0, 0], [0, 0, 0.1]])
        with pytest.raises(ValueError):
            lift_through(np.zeros((2, 2)), companion([0, 0.5]), phi, 0.5)
