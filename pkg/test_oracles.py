#!/usr/bin/env python3
"""
Tests for the brute-force oracles and the double Hopf locator.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from rfde_unfold.errors import ResonanceError
from rfde_unfold.matalg import build_kerTstar_basis, build_rangeT_basis
from rfde_unfold.model import char_matrix
from rfde_unfold.oracles import (
    DENSE_ORACLE_LIMIT,
    bilinear_form_quadrature,
    check_resonance,
    find_double_hopf,
    first_order_spectrum_check,
    hopf_crossings,
    hopf_curve,
    principal_angles,
    root_mismatch,
    sylvester_spaces,
)
from rfde_unfold.spectral import JordanSpec, bilinear_form, compute_bases
from rfde_unfold.synthesis import decomplexify, synthesize
from test_model import pupil_reflex, scalar_double_zero

PUPIL_LAMBDAS = [1j, 2j, -1j, -2j]


def test_sylvester_dimensions():
    print("🧪 Testing dense Sylvester spaces...")
    spec = JordanSpec((0.0, 1.0 + 1j), ((3, 1), (2,)))
    range_dense, kernel_dense = sylvester_spaces(spec.jordan_matrix())
    assert kernel_dense.shape[1] == spec.delta == 8
    assert range_dense.shape[1] == spec.c ** 2 - spec.delta

    range_basis = build_rangeT_basis(spec).as_columns()
    kernel_basis = build_kerTstar_basis(spec).as_columns()
    assert np.max(principal_angles(range_basis, range_dense)) < 1e-8
    assert np.max(principal_angles(kernel_basis, kernel_dense)) < 1e-8

    with pytest.raises(ValueError):
        sylvester_spaces(np.eye(DENSE_ORACLE_LIMIT + 1))

    for B, (range_dim, kernel_dim) in (
        (np.diag([1.0, 2.0]), (2, 2)),
        (JordanSpec((0.0,), ((3,),)).jordan_matrix(), (6, 3)),
        (np.zeros((3, 3)), (0, 9)),
    ):
        range_dense, kernel_dense = sylvester_spaces(B)
        assert (range_dense.shape[1], kernel_dense.shape[1]) == (range_dim, kernel_dim)
    print("✅ Combinatorial and dense subspaces coincide")


def test_quadrature_pairing():
    print("🧪 Testing the bilinear form against quadrature...")
    for rfde, lambdas in ((scalar_double_zero(), [0.0]), (pupil_reflex(), PUPIL_LAMBDAS)):
        bases = compute_bases(rfde, lambdas)
        closed = bilinear_form(bases.psi0, bases.phi0, rfde, bases.B)
        quadrature = bilinear_form_quadrature(bases.psi0, bases.phi0, rfde, bases.B)
        np.testing.assert_allclose(quadrature, closed, atol=1e-10)
        np.testing.assert_allclose(quadrature, np.eye(bases.c), atol=1e-9)
    print("✅ (Ψ, Φ) = I by quadrature as well")


def test_root_mismatch():
    print("🧪 Testing the cluster mismatch...")
    centers = [0.0, 5.0]
    assert root_mismatch([0.1, -0.1, 5.0], [0.1j, -0.1j, 5.0], centers) == pytest.approx(0.02)
    assert root_mismatch([0.1, 5.0], [0.1, 0.2], centers) == float("inf")
    assert root_mismatch([1.0, 5.0], [1.0, 5.0], centers) == 0.0
    print("✅ Split roots compared via cluster polynomials")


def test_spectrum_check_double_zero():
    print("🧪 Testing first-order root motion at the double zero...")
    rfde = scalar_double_zero()
    family = synthesize(rfde, compute_bases(rfde, [0.0]).spec)
    report = first_order_spectrum_check(rfde, family, trials=3, seed=0)
    assert report.passed, report
    assert report.max_mismatch < 1e-4
    assert report.min_slope >= 1.8
    print(f"✅ Max mismatch {report.max_mismatch:.2e}, min slope {report.min_slope:.2f}")


def test_spectrum_check_pupil_reflex():
    print("🧪 Testing first-order root motion at the 1:2 double Hopf point...")
    rfde = pupil_reflex()
    bases = compute_bases(rfde, PUPIL_LAMBDAS)
    family = synthesize(rfde, bases.spec, bases=bases)
    report = first_order_spectrum_check(rfde, family, trials=2, seed=1)
    assert report.passed
    assert report.max_mismatch < 1e-4

    real_report = first_order_spectrum_check(rfde, decomplexify(family, bases.spec), trials=2, seed=2)
    assert real_report.passed
    print("✅ Complex and real unfoldings predict the root motion")


def test_hopf_curve_roots():
    print("🧪 Testing the Hopf curve...")
    omega = np.array([0.7, 2.3, 4.1])
    A1, A2 = hopf_curve(omega, 1.0, 2.0)
    for w, a1, a2 in zip(omega, A1, A2):
        rfde_value = 1j * w - a1 * np.exp(-1j * w) - a2 * np.exp(-2j * w)
        assert abs(rfde_value) < 1e-12
    print("✅ iω is a root along the curve")


def test_double_hopf_point():
    print("🧪 Testing the double Hopf locator for delays (1, 2)...")
    assert hopf_crossings(1.0, 2.0)
    point = find_double_hopf(1.0, 2.0)
    assert point.residual < 1e-10
    assert 0 < point.omega1 < point.omega2
    rfde = point.to_rfde()
    for lam in point.lambdas():
        assert np.max(np.abs(char_matrix(rfde, lam))) < 1e-9

    bases = compute_bases(rfde, point.lambdas())
    assert bases.c == 4
    family = synthesize(rfde, bases.spec, bases=bases)
    assert family.delta == 4
    assert len(family.delays) == 4
    assert family.report.miniversal
    print(f"✅ ω₁ = {point.omega1:.6f}, ω₂ = {point.omega2:.6f}")


def test_double_hopf_seeded():
    print("🧪 Testing Newton from a seed near (ω₁, ω₂) ≈ (2.58, 5.31)...")
    w1, w2 = 2.58, 5.31
    A1, A2 = hopf_curve(np.array([w1]), 1.0, 2.0)
    point = find_double_hopf(1.0, 2.0, guess=(A1[0], A2[0], w1, w2))
    assert point.residual < 1e-10
    print(f"✅ Converged to ω = ({point.omega1:.6f}, {point.omega2:.6f})")


def test_resonance_errors():
    print("🧪 Testing resonance detection...")
    with pytest.raises(ResonanceError):
        check_resonance(1.0, 2.0)
    with pytest.raises(ResonanceError):
        check_resonance(2.0, 3.0)
    check_resonance(1.0, np.sqrt(2.0))
    with pytest.raises(ResonanceError):
        find_double_hopf(1.0, 2.0, guess=(1.0, 1.0, 2.0, 2.0))
    with pytest.raises(ValueError):
        find_double_hopf(2.0, 1.0)
    print("✅ Resonant frequencies rejected")


def main():
    """Run all tests."""
    print("🚀 Starting oracle tests")
    print("=" * 60)
    tests = [
        test_sylvester_dimensions,
        test_quadrature_pairing,
        test_root_mismatch,
        test_spectrum_check_double_zero,
        test_spectrum_check_pupil_reflex,
        test_hopf_curve_roots,
        test_double_hopf_point,
        test_double_hopf_seeded,
        test_resonance_errors,
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
