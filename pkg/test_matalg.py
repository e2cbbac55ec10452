#!/usr/bin/env python3
"""
Tests for the oblique-segment bases of Mat_{c×c} and the ℰ map.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from rfde_unfold.errors import InvalidBasisError
from rfde_unfold.matalg import (
    ObliqueIndex,
    build_E_map,
    build_kerTstar_basis,
    build_Pi,
    build_rangeT_basis,
    build_W_basis,
    check_gamma_residual,
    column_labels,
    commutator,
    direct_sum_rank,
    gamma_project,
    oblique_indices,
)
from rfde_unfold.numerics import numerical_rank
from rfde_unfold.oracles import principal_angles, random_jordan_spec, sylvester_spaces
from rfde_unfold.spectral import JordanSpec, compute_bases
from test_model import pupil_reflex, scalar_double_zero

RANDOM_SPECS = 200


def test_column_labels():
    print("🧪 Testing segment column labels...")
    assert column_labels(3, 2) == [1, 2]
    assert column_labels(2, 2) == [1, 2]
    assert column_labels(1, 3) == [3]
    assert column_labels(2, 4) == [3, 4]
    print("✅ 𝒬(ξ, λ) as expected")


def test_oblique_indices_count():
    print("🧪 Testing segment counts...")
    spec = JordanSpec((0.0, 1.0), ((3, 1), (2,)))
    indices = oblique_indices(spec)
    assert len(indices) == spec.delta == 8
    assert indices[0] == ObliqueIndex(1, 1, 1, 1)
    assert indices[-1] == ObliqueIndex(2, 1, 1, 2)
    assert ObliqueIndex(1, 2, 1, 3) in indices
    assert ObliqueIndex(1, 1, 2, 1) in indices
    assert indices[0].label() == "j=1,xi=1,lam=1,m=1"
    print("✅ δ segments in (j, ξ, λ, m) order")


def test_w_basis_for_double_zero():
    print("🧪 Testing 𝒲 for a single 2×2 Jordan block...")
    spec = JordanSpec((0.0,), ((2,),))
    W = build_W_basis(spec)
    assert len(W) == 2
    np.testing.assert_array_equal(W.elements[0], [[0, 0], [0, 1]])
    np.testing.assert_array_equal(W.elements[1], [[0, 0], [1, 0]])

    kernel = build_kerTstar_basis(spec)
    np.testing.assert_array_equal(kernel.elements[0], np.eye(2))
    np.testing.assert_array_equal(kernel.elements[1], [[0, 0], [1, 0]])
    assert len(build_rangeT_basis(spec)) == 2
    print("✅ 𝒲 = {E₂₂, E₂₁}")


def test_commutator():
    print("🧪 Testing the commutator...")
    B = JordanSpec((0.0,), ((2,),)).jordan_matrix()
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(commutator(B, M), B @ M - M @ B)
    with pytest.raises(ValueError):
        commutator(B, np.eye(3))
    print("✅ [B, M] = BM − MB")


def test_gamma_projection():
    print("🧪 Testing Γ on a mixed structure...")
    spec = JordanSpec((0.0, 2.0), ((2, 1), (1,)))
    rng = np.random.default_rng(7)
    Z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    projected = gamma_project(Z, spec)
    W = build_W_basis(spec)
    # Γ(Z) lies in 𝒲 and Z − Γ(Z) in range(𝒯)
    support = sum(np.abs(element) for element in W.elements)
    assert np.all(projected[support == 0] == 0)
    assert check_gamma_residual(Z, spec) < 1e-12
    np.testing.assert_allclose(gamma_project(projected, spec), projected)
    with pytest.raises(ValueError):
        gamma_project(np.eye(3), spec)
    print("✅ Γ is a projection onto 𝒲 along range(𝒯)")


def test_pi_rank_check():
    print("🧪 Testing Π_j rank checks...")
    spec = JordanSpec((0.0,), ((1, 1),))
    psi0 = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(InvalidBasisError):
        build_Pi(psi0, spec)
    projections = build_Pi(np.eye(2), spec)
    np.testing.assert_array_equal(projections[0], np.eye(2))
    print("✅ Dependent block-end rows rejected")


def test_e_map_double_zero():
    print("🧪 Testing ℰ for ẋ = x(t) − x(t−1)...")
    bases = compute_bases(scalar_double_zero(), [0.0])
    e_map = build_E_map(bases.spec, bases.psi0)
    assert len(e_map.r_matrices) == 2
    np.testing.assert_allclose(e_map.r_matrices[0], [[0.0, 0.5]], atol=1e-12)
    np.testing.assert_allclose(e_map.r_matrices[1], [[0.5, 0.0]], atol=1e-12)
    np.testing.assert_allclose(e_map.w_hat.elements[0], [[0.0, 1 / 3], [0.0, 1.0]], atol=1e-12)
    assert e_map.span_decision.rank == 4
    assert e_map.indices == tuple(oblique_indices(bases.spec))
    print("✅ R₁ = (0, 1/2), R₂ = (1/2, 0)")


def test_e_map_pupil_reflex():
    print("🧪 Testing ℰ at the 1:2 double Hopf point...")
    bases = compute_bases(pupil_reflex(), [1j, 2j, -1j, -2j])
    e_map = build_E_map(bases.spec, bases.psi0)
    for m, (R, W) in enumerate(zip(e_map.r_matrices, e_map.w_hat.elements)):
        # R_m carries one vector in column m and Ψ(0)R_m hits Ω_m on the diagonal
        assert np.count_nonzero(np.abs(R).sum(axis=0) > 0) == 1
        assert abs(W[m, m] - 1.0) < 1e-10
    print("✅ Ŵ complements range(𝒯)")


def test_random_specs():
    print(f"🧪 Testing {RANDOM_SPECS} random Jordan structures...")
    rng = np.random.default_rng(2024)
    for _ in range(RANDOM_SPECS):
        spec = random_jordan_spec(rng, max_c=8)
        B = spec.jordan_matrix()
        W = build_W_basis(spec)
        kernel = build_kerTstar_basis(spec)
        rangeT = build_rangeT_basis(spec)

        assert len(W) == len(kernel) == spec.delta
        assert len(rangeT) == spec.c ** 2 - spec.delta
        assert direct_sum_rank(rangeT, W, 1e-10) == spec.c ** 2
        for element in kernel.elements:
            assert np.max(np.abs(commutator(B.conj().T, element)), initial=0.0) < 1e-12

        if len(rangeT):
            cross = rangeT.as_columns().conj().T @ kernel.as_columns()
            assert np.max(np.abs(cross)) < 1e-12

        if spec.c <= 6:
            range_dense, kernel_dense = sylvester_spaces(B)
            assert kernel_dense.shape[1] == spec.delta
            assert range_dense.shape[1] == len(rangeT)
            # angle accuracy is about eps over the smallest kept singular value of 𝒯
            assert np.max(principal_angles(kernel.as_columns(), kernel_dense)) < 1e-7
            if len(rangeT):
                assert np.max(principal_angles(rangeT.as_columns(), range_dense)) < 1e-7

        n = max(spec.k) + 1
        psi0 = rng.standard_normal((spec.c, n)) + 1j * rng.standard_normal((spec.c, n))
        e_map = build_E_map(spec, psi0)
        assert len(e_map.r_matrices) == spec.delta
        combined = np.hstack([rangeT.as_columns(), e_map.w_hat.as_columns()]) if len(rangeT) else e_map.w_hat.as_columns()
        assert numerical_rank(combined, 1e-8).rank == spec.c ** 2
    print("✅ Dimensions, subspaces, orthogonality and spanning agree")


def main():
    """Run all tests."""
    print("🚀 Starting matrix algebra tests")
    print("=" * 60)
    tests = [
        test_column_labels,
        test_oblique_indices_count,
        test_w_basis_for_double_zero,
        test_commutator,
        test_gamma_projection,
        test_pi_rank_check,
        test_e_map_double_zero,
        test_e_map_pupil_reflex,
        test_random_specs,
    ]
    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"❌ {test.__name__} failed: {e}")
    print(f"\n📊 Test Results: {passed}/{len(tests)} tests passed")
    return 0 if passed == len(tests) else 1


if __name__ == "__main__":
    sys.exit(main())
