"""Kinematics and symmetric-tensor convention tests."""

import numpy as np
import pytest

from maturesim import tensors as tn
from maturesim.errors import DeformationError, ParameterError

from _oracles import random_C, random_F, random_rotation


class TestVoigt:
    def test_component_order(self):
        A = np.arange(9, dtype=float).reshape(3, 3)
        A = 0.5 * (A + A.T)
        v = tn.to_voigt(A)
        assert v[0] == A[0, 0] and v[1] == A[1, 1] and v[2] == A[2, 2]
        assert v[3] == A[0, 1] and v[4] == A[0, 2] and v[5] == A[1, 2]

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            C = random_C(rng)
            assert np.array_equal(tn.from_voigt(tn.to_voigt(C)), C)

    def test_sym_dot_is_full_contraction(self):
        rng = np.random.default_rng(1)
        A, B = random_C(rng), random_C(rng)
        assert tn.sym_dot(tn.to_voigt(A), tn.to_voigt(B)) == pytest.approx(
            np.tensordot(A, B), rel=1e-14)

    def test_sym_outer_product_contraction(self):
        # (A . A) : B must equal A B A for symmetric B
        rng = np.random.default_rng(2)
        A, B = random_C(rng), random_C(rng)
        M = tn.sym_outer_product(A, A)
        contracted = M @ (tn.VOIGT_WEIGHTS * tn.to_voigt(B))
        assert np.allclose(contracted, tn.to_voigt(A @ B @ A), rtol=1e-13)


class TestDirections:
    def test_unit_vector_normalizes(self):
        v = tn.unit_vector([3.0, 0.0, 4.0])
        assert np.allclose(v, [0.6, 0.0, 0.8])

    def test_zero_vector_rejected(self):
        with pytest.raises(ParameterError):
            tn.unit_vector([0.0, 0.0, 0.0])


class TestRightCauchyGreen:
    def test_definition(self):
        rng = np.random.default_rng(3)
        F = random_F(rng)
        assert np.allclose(tn.right_cauchy_green(F), F.T @ F, rtol=1e-14)

    def test_rejects_inverted(self):
        F = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(DeformationError):
            tn.right_cauchy_green(F)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            F = random_F(rng)
            Q = random_rotation(rng)
            assert np.max(np.abs(tn.right_cauchy_green(Q @ F)
                                 - tn.right_cauchy_green(F))) < 1e-12


class TestStructuralTensor:
    def test_reference_value(self):
        H = tn.gen_structural_tensor([1.0, 0.0, 0.0], 0.15)
        assert np.allclose(H, np.diag([0.70, 0.15, 0.15]), atol=1e-15)

    def test_trace_one(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.standard_normal(3)
            kappa = rng.uniform(0.0, 1.0 / 3.0)
            H = tn.gen_structural_tensor(a, kappa)
            assert np.trace(H) == pytest.approx(1.0, abs=1e-14)

    def test_isotropic_limit(self):
        H = tn.gen_structural_tensor([0.2, -0.5, 1.0], 1.0 / 3.0)
        assert np.allclose(H, np.eye(3) / 3.0, atol=1e-15)

    def test_kappa_domain(self):
        for kappa in (-0.01, 0.34):
            with pytest.raises(ParameterError):
                tn.gen_structural_tensor([1.0, 0.0, 0.0], kappa)


class TestFiberStrain:
    def test_reference_value(self):
        H = tn.gen_structural_tensor([1.0, 0.0, 0.0], 0.15)
        lam_sq, E = tn.fiber_strain(np.diag([1.44, 1.0, 1.0]), H)
        assert lam_sq == pytest.approx(1.308, abs=1e-12)
        assert E == pytest.approx(0.308, abs=1e-12)

    def test_linearity_in_C(self):
        rng = np.random.default_rng(6)
        H = tn.gen_structural_tensor(rng.standard_normal(3), 0.1)
        C = random_C(rng)
        l1, _ = tn.fiber_strain(C, H)
        l2, _ = tn.fiber_strain(2.5 * C, H)
        assert l2 == pytest.approx(2.5 * l1, rel=1e-14)


class TestTextileInvariants:
    def test_reference_values(self):
        M1 = tn.structural_dyad([1.0, 0.0, 0.0])
        M2 = tn.structural_dyad([0.0, 1.0, 0.0])
        C = np.diag([1.44, 1.21, 1.0])
        i1, i2, i3, i4, i5 = tn.textile_invariants(C, M1, M2)
        assert i1 == pytest.approx(3.65, abs=1e-14)
        assert i2 == pytest.approx(1.44, abs=1e-14)
        assert i3 == pytest.approx(2.0736, abs=1e-12)
        assert i4 == pytest.approx(1.21, abs=1e-14)
        assert i5 == pytest.approx(1.4641, abs=1e-12)

    def test_cauchy_schwarz_bound(self):
        # tr(C^2 M) >= tr(C M)^2 for rank-one M built from a unit vector
        rng = np.random.default_rng(7)
        for _ in range(100):
            C = random_C(rng, spread=0.6)
            M1 = tn.structural_dyad(rng.standard_normal(3))
            M2 = tn.structural_dyad(rng.standard_normal(3))
            _, i2, i3, i4, i5 = tn.textile_invariants(C, M1, M2)
            assert i3 >= i2**2 - 1e-12
            assert i5 >= i4**2 - 1e-12
