from __future__ import annotations

import cmath
import itertools
import math

import numpy as np
import pytest

from conftest import random_complex, well_conditioned
from spectral_lab.config import RunConfig
from spectral_lab.discontinuity_lab import (Certificate, PerturbationSpec, build_perturbation,
                                            cyclic_approximants, det_identity_details,
                                            discontinuity_certificate, example_5_1, example_5_2,
                                            green_reduction, green_vs_lempert_chain,
                                            jordan_family, verify_det_identity)
from spectral_lab.errors import (CertificateFailed, ChainInconclusive, DegenerateInput, NotCyclic,
                                 OutsideBall)
from spectral_lab.gn_geometry import ball_radius_in_Gn
from spectral_lab.matrix_core import companion, is_cyclic, sigma

W = cmath.exp(2j * math.pi / 3)
FAST = RunConfig(restarts=3)


def admissible_J(m):
    for r in range(m - 1):
        yield from itertools.combinations(range(2, m + 1), r)


class TestPerturbationSpec:
    def test_derived_quantities(self):
        spec = PerturbationSpec(4, (2, 3), 0.1)
        assert (spec.r, spec.n, spec.k) == (2, 4, 3)
        assert PerturbationSpec(3, (2,), 0.1).k == 2
        assert PerturbationSpec(4, (2, 4), 0.1).k == 2

    @pytest.mark.parametrize("kwargs", [
        dict(m=1, J=(), delta=0.1),
        dict(m=3, J=(2, 3), delta=0.1),
        dict(m=3, J=(1,), delta=0.1),
        dict(m=3, J=(), delta=-0.1),
        dict(m=3, J=(), delta=0.1, A1=np.zeros((1, 1))),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PerturbationSpec(**kwargs)

    def test_A1_outside_ball(self):
        with pytest.raises(OutsideBall):
            PerturbationSpec(3, (2,), 0.1, np.array([[1.5]]))


class TestBuildPerturbation:
    def test_three_by_three(self):
        A, X, B = build_perturbation(PerturbationSpec(3, (2,), 0.01))
        want_X = np.zeros((3, 3))
        want_X[1, 2], want_X[2, 0] = -1, 1
        assert np.array_equal(X, want_X)
        assert A[0, 1] == 1 and np.count_nonzero(A) == 1
        assert np.array_equal(B, A + 0.01 * X)

    def test_smallest_case(self):
        A, X, B = build_perturbation(PerturbationSpec(2, (), 0.01))
        assert np.array_equal(A, np.zeros((2, 2)))
        assert np.array_equal(X, [[0, -1], [1, 0]])
        assert np.allclose(B, 0.01 * X)

    def test_block_diagonal(self):
        A, X, B = build_perturbation(PerturbationSpec(3, (2,), 0.01, np.array([[0.5]])))
        assert A.shape == (4, 4) and A[3, 3] == 0.5
        assert np.all(X[3] == 0) and np.all(X[:, 3] == 0)
        assert np.all(A[:3, 3] == 0) and np.all(B[3, :3] == 0)

    def test_outside_ball(self):
        with pytest.raises(OutsideBall):
            build_perturbation(PerturbationSpec(2, (), 1.5))


class TestDetIdentity:
    def test_full_grid(self):
        worst = max(verify_det_identity(PerturbationSpec(m, J, d))
                    for m in range(2, 7) for J in admissible_J(m) for d in (1e-3, 1e-2, 1e-1))
        assert worst <= 1e-12

    def test_three_by_three_value(self):
        info = det_identity_details(PerturbationSpec(3, (2,), 0.01))
        assert np.allclose(info["sigma"][:2], 0, atol=1e-15)
        assert abs(info["sigma"][2]) == pytest.approx(1e-4, abs=1e-16)

    def test_two_by_two_value(self):
        # t^2 + delta^2: sigma_2 = delta^2 up to sign
        info = det_identity_details(PerturbationSpec(2, (), 0.1))
        assert abs(info["sigma"][1]) == pytest.approx(0.01, abs=1e-15)
        assert info["sign"] in (-1, 1)

    def test_observed_sign(self):
        # recorded, not prescribed: sigma_m(B_0) = (-1)^r delta^(m-r) on the whole grid
        for m in range(2, 6):
            for J in admissible_J(m):
                assert det_identity_details(PerturbationSpec(m, J, 0.1))["sign"] == (-1) ** len(J)

    def test_zero_delta(self):
        info = det_identity_details(PerturbationSpec(4, (2,), 0.0))
        assert np.all(info["sigma"] == 0) and info["residual"] == 0


class TestApproximants:
    def test_two_by_two(self):
        assert np.array_equal(cyclic_approximants(PerturbationSpec(2, (), 0.1), 4), [[0, 0.25], [0, 0]])

    def test_vacant_slot_filled(self):
        Aj = cyclic_approximants(PerturbationSpec(3, (2,), 0.1), 10)
        assert Aj[1, 2] == pytest.approx(0.1) and Aj[0, 1] == 1

    @pytest.mark.parametrize("m,J", [(3, (2,)), (4, (3,)), (5, (2, 4))])
    def test_cyclic_and_converging(self, m, J):
        spec = PerturbationSpec(m, J, 0.1, np.array([[0.5]]))
        A, _, _ = build_perturbation(spec)
        hint = [(0, m), (0.5, 1)]
        for j in range(1, 101):
            Aj = cyclic_approximants(spec, j)
            assert is_cyclic(Aj, declared=hint)
            assert np.linalg.norm(Aj - A, 2) == pytest.approx(1 / j, rel=1e-14)

    def test_invalid_j(self):
        with pytest.raises(ValueError):
            cyclic_approximants(PerturbationSpec(2, (), 0.1), 0)


@pytest.mark.slow
class TestCertificates:
    def test_three_by_three(self):
        cert = discontinuity_certificate(PerturbationSpec(3, (2,), 0.1), cfg=FAST)
        assert cert.conclusion and cert.margin >= 1e-4
        assert cert.lower[0] == "bharali"
        assert cert.lower[1] == pytest.approx(0.1 ** (4 / 3), rel=1e-9)
        assert [u["j"] for u in cert.uppers] == [10, 100]
        assert cert.gap >= cert.margin
        R = ball_radius_in_Gn(3)
        for u in cert.uppers:
            assert u["value"] <= 0.01 / R + 1e-12

    def test_two_by_two(self):
        # A = 0, B_0 has eigenvalues +-i delta: the A-side branch gives delta
        delta = 0.05
        cert = discontinuity_certificate(PerturbationSpec(2, (), delta), cfg=FAST)
        assert cert.lower[1] == pytest.approx(delta, rel=1e-9)
        assert cert.conclusion
        assert cert.max_upper <= delta ** 2 / ball_radius_in_Gn(2) + 1e-12

    def test_embedded_block(self):
        cert = discontinuity_certificate(PerturbationSpec(3, (2,), 0.1, np.array([[0.5]])), cfg=FAST)
        assert cert.conclusion and cert.parameters["n"] == 4

    def test_monotone_in_delta(self):
        results = [discontinuity_certificate(PerturbationSpec(3, (2,), d), cfg=FAST, auto_shrink=False).conclusion
                   for d in (0.2, 0.02)]
        assert results == sorted(results)
        assert results[-1]

    def test_auto_shrink(self):
        # lower = delta and upper ~ delta^2: the gap is below 0.1 at delta = 0.95
        cfg = RunConfig(restarts=3, margin=0.1)
        spec = PerturbationSpec(2, (), 0.95)
        with pytest.raises(CertificateFailed) as info:
            discontinuity_certificate(spec, cfg=cfg, auto_shrink=False)
        assert "attempts" in info.value.diagnostics
        cert = discontinuity_certificate(spec, cfg=cfg)
        assert cert.conclusion and cert.parameters["delta"] == pytest.approx(0.475)
        assert len(cert.parameters["attempts"]) >= 2

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            discontinuity_certificate(PerturbationSpec(3, (2,), 0.0))

    def test_json_shape(self):
        cert = discontinuity_certificate(PerturbationSpec(2, (), 0.05), j_list=(10,), cfg=FAST)
        js = cert.to_json()
        assert set(js) >= {"pair", "lower", "uppers", "conclusion", "margin"}
        assert set(js["lower"]) == {"method", "value"}
        assert {"j", "method", "value"} <= set(js["uppers"][0])


@pytest.mark.slow
class TestExamples:
    def test_first_example(self):
        cert = example_5_1(0.1, FAST)
        assert cert.lower[1] == pytest.approx(0.01, abs=1e-12)
        g3 = next(u for u in cert.uppers if u["j"] == 0)
        assert g3["value"] <= 1e-3 / ball_radius_in_Gn(3)
        assert cert.conclusion

    def test_first_example_inputs(self):
        with pytest.raises(DegenerateInput):
            example_5_1(0.0)
        with pytest.raises(ValueError):
            example_5_1(0.3)

    def test_second_example_zero(self):
        rep = example_5_2(0.0, FAST)
        assert rep.best_lower() == 0 and rep.best_upper() == 0

    def test_second_example(self):
        rep = example_5_2(0.2, FAST)
        assert rep.lower_bounds["caratheodory3"].value == pytest.approx(0.2, abs=1e-6)
        assert rep.best_upper("G") <= 0.202
        assert rep.verdict == "consistent"

    def test_second_example_outside(self):
        with pytest.raises(OutsideBall):
            example_5_2(1.0)


class TestGreenReduction:
    def test_jordan_family(self):
        for alpha in (0.0, 0.1, 0.5j):
            assert np.allclose(green_reduction(jordan_family(0.3, alpha, 3)), 0.3 * np.eye(3), atol=1e-12)

    def test_alpha_independent_and_idempotent(self):
        ref = green_reduction(jordan_family(-0.2j, 0.1, 4))
        for alpha in (0.01, 0.3, 1.0):
            G = green_reduction(jordan_family(-0.2j, alpha, 4))
            assert np.max(np.abs(G - ref)) <= 1e-12
            assert np.max(np.abs(green_reduction(G) - G)) <= 1e-12

    def test_diagonal(self):
        assert np.allclose(green_reduction(np.diag([0.4, -0.1, 0.2j])), np.diag([-0.1, 0.2j, 0.4]))

    def test_companion(self):
        eps = 0.1
        got = np.diag(green_reduction(companion([0, 0, eps ** 3])))
        want = sorted([eps, W * eps, W * W * eps], key=lambda z: (round(z.real, 9), z.imag))
        assert np.allclose(got, want, atol=1e-12)

    def test_conjugation_invariant(self, rng):
        P = well_conditioned(rng, 3)
        D = np.diag(random_complex(rng, 3, 0.3))
        assert np.allclose(green_reduction(P @ D @ np.linalg.inv(P)), green_reduction(D), atol=1e-10)


class TestGreenChain:
    @pytest.mark.slow
    def test_witness(self):
        rep = green_vs_lempert_chain(np.diag([0.5, -0.5, 0.0]), 0.0, 0.1, FAST)
        assert rep["conclusion"] and rep["gap"] >= rep["margin"] > 0
        assert rep["lower"]["value"] == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(np.array(rep["green_reduction"]["re"]), 0)

    def test_alpha_zero(self):
        with pytest.raises(DegenerateInput):
            green_vs_lempert_chain(np.diag([0.5, -0.5, 0.0]), 0.0, 0.0)

    def test_single_eigenvalue(self):
        with pytest.raises(DegenerateInput):
            green_vs_lempert_chain(0.2 * np.eye(3) + np.eye(3, k=1), 0.0, 0.1)

    def test_derogatory_A(self):
        with pytest.raises(NotCyclic):
            green_vs_lempert_chain(np.diag([0.5, 0.5, 0.0]), 0.0, 0.1)

    def test_mu_outside(self):
        with pytest.raises(OutsideBall):
            green_vs_lempert_chain(np.diag([0.5, -0.5, 0.0]), 1.2, 0.1)

    @pytest.mark.slow
    def test_inconclusive_is_not_a_refutation(self):
        cfg = RunConfig(restarts=3, margin=0.5)
        with pytest.raises(ChainInconclusive) as info:
            green_vs_lempert_chain(np.diag([0.5, -0.5, 0.0]), 0.0, 0.1, cfg)
        assert info.value.diagnostics["gap"] > 0 and "lower" in info.value.diagnostics


def test_certificate_properties():
    c = Certificate({}, ("bharali", 0.5), [{"j": 1, "method": "ball", "value": 0.2},
                                           {"j": 2, "method": "ball", "value": 0.3}], True, 1e-4)
    assert c.max_upper == 0.3 and c.gap == pytest.approx(0.2)
    assert c.to_json()["gap"] == pytest.approx(0.2)
    assert sigma(np.zeros((2, 2))).size == 2
