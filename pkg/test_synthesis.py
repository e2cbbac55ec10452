#!/usr/bin/env python3
"""
Tests for delay selection, coefficient solves and the unfolding constructions.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from rfde_unfold.errors import CoefficientSolveError, RealnessError
from rfde_unfold.matalg import build_E_map
from rfde_unfold.model import DelayAtom, LinearRFDE
from rfde_unfold.spectral import basis_change, compute_bases
from rfde_unfold.synthesis import (
    UnfoldingFamily,
    decomplexify,
    defining_residual,
    select_delays,
    simplify_scalar,
    solve_coefficients,
    synthesize,
)
from test_model import pupil_reflex, scalar_double_zero

PI = np.pi
PUPIL_LAMBDAS = [1j, 2j, -1j, -2j]


def quarter_period_delay() -> LinearRFDE:
    """ẋ = −(π/2)x(t−1), with roots ±iπ/2."""
    return LinearRFDE(1, 1.0, (DelayAtom(1.0, [[-PI / 2]]),))


def test_double_zero_unfolding():
    print("🧪 Testing synthesis at the double zero...")
    rfde = scalar_double_zero()
    bases = compute_bases(rfde, [0.0])
    family = synthesize(rfde, bases.spec, bases=bases)

    assert family.delays == (0.0, -1.0)
    assert family.delta == 2
    np.testing.assert_allclose(family.coefficients[0][0], [[0.5]], atol=1e-12)
    np.testing.assert_allclose(family.coefficients[0][1], [[-0.5]], atol=1e-12)
    np.testing.assert_allclose(family.coefficients[1][0], [[0.5]], atol=1e-12)
    np.testing.assert_allclose(family.coefficients[1][1], [[0.0]], atol=1e-12)
    assert family.report.miniversal
    assert defining_residual(family) < 1e-12
    assert family.labels == ["j=1,xi=1,lam=1,m=1", "j=1,xi=1,lam=1,m=2"]
    print("✅ L₁ = (x(t) − x(t−1))/2, L₂ = x(t)/2")


def test_scalar_simplification():
    print("🧪 Testing the β-form at the double zero...")
    rfde = scalar_double_zero()
    family = synthesize(rfde, compute_bases(rfde, [0.0]).spec)
    simplified, K = simplify_scalar(family)
    np.testing.assert_allclose(K, [[0.5, 0.5], [-0.5, 0.0]], atol=1e-12)
    np.testing.assert_allclose(simplified.coefficients[0][0], [[1.0]])
    np.testing.assert_allclose(simplified.coefficients[0][1], [[0.0]])
    np.testing.assert_allclose(simplified.coefficients[1][1], [[1.0]])

    bases = compute_bases(pupil_reflex(), PUPIL_LAMBDAS)
    with pytest.raises(ValueError):
        simplify_scalar(synthesize(pupil_reflex(), bases.spec, bases=bases))
    print("✅ β = Kα with K = [[1/2, 1/2], [−1/2, 0]]")


def test_pupil_reflex_coefficients():
    print("🧪 Testing coefficients at the 1:2 double Hopf point...")
    rfde = pupil_reflex()
    bases = compute_bases(rfde, PUPIL_LAMBDAS)
    family = synthesize(rfde, bases.spec, bases=bases, delays=[0.0, -PI])
    e_map = build_E_map(bases.spec, bases.psi0)

    expected_rows = {0: ([0.25, -0.25j], -1.0), 1: ([0.25, -0.125j], 1.0)}
    for m, (row, sign) in expected_rows.items():
        R = e_map.r_matrices[m]
        v = R[:, m]
        A0, A1 = family.coefficients[m]
        np.testing.assert_allclose(A0, np.outer(v, row), atol=1e-10)
        np.testing.assert_allclose(A1, sign * np.outer(v, row), atol=1e-10)
    assert family.report.miniversal
    print("✅ A₀ and A₁ match the closed form")


def test_pupil_reflex_delay_selection():
    print("🧪 Testing automatic delay selection...")
    bases = compute_bases(pupil_reflex(), PUPIL_LAMBDAS)
    delays = select_delays(bases, PI)
    assert len(delays) == 2
    assert delays[0] == 0.0
    assert all(-PI <= theta < 0 for theta in delays[1:])
    stacked = np.vstack([bases.phi_at(theta) for theta in delays])
    assert np.linalg.matrix_rank(stacked) == 4
    print("✅ Two delay points give rank 4")


def test_ode_case():
    print("🧪 Testing a reduction that needs no delayed terms...")
    rfde = LinearRFDE(2, 1.0, (DelayAtom(0.0, [[0.0, 1.0], [0.0, 0.0]]),))
    bases = compute_bases(rfde, [0.0])
    assert bases.spec.block_sizes == ((2,),)
    family = synthesize(rfde, bases.spec, bases=bases)
    assert family.delays == (0.0,)
    assert family.report.miniversal
    print("✅ Φ(0) of full rank gives delays [0]")


def test_decomplexify_real_eigenvalue():
    print("🧪 Testing decomplexification with Λ ⊂ ℝ...")
    rfde = scalar_double_zero()
    family = synthesize(rfde, compute_bases(rfde, [0.0]).spec)
    real = decomplexify(family, family.bases.spec)
    assert real.delta_real == 2 and real.delta_pairs == 0
    assert real.param_names == ("alpha_1", "alpha_2")
    assert all(np.isrealobj(A) for matrices in real.real_operators for A in matrices)
    assert real.report.miniversal
    print("✅ Real operators kept as they are")


def test_decomplexify_pupil_reflex():
    print("🧪 Testing decomplexification at the 1:2 double Hopf point...")
    rfde = pupil_reflex()
    bases = compute_bases(rfde, PUPIL_LAMBDAS)
    family = synthesize(rfde, bases.spec, bases=bases)
    real = decomplexify(family, bases.spec)
    assert real.delta == 4
    assert real.delta_real == 0 and real.delta_pairs == 2
    assert real.param_names == ("beta_1", "beta_2", "beta_3", "beta_4")
    assert real.partition["upper"] == [1j, 2j]
    np.testing.assert_allclose(real.real_operators[0][0], family.coefficients[0][0].real)
    np.testing.assert_allclose(real.real_operators[1][0], family.coefficients[1][0].real)
    np.testing.assert_allclose(real.real_operators[2][0], family.coefficients[0][0].imag)
    np.testing.assert_allclose(real.real_operators[3][0], family.coefficients[1][0].imag)
    assert real.report.miniversal
    assert real.to_parametrized_family().real_flag

    # on the delays (0, −π) the operators act on x(t) − x(t−π) and x(t) + x(t−π)
    at_pi = decomplexify(synthesize(rfde, bases.spec, bases=bases, delays=[0.0, -PI]), bases.spec)
    # real parts first, then imaginary parts, both in the order (i, 2i)
    for k, sign in ((0, -1.0), (1, 1.0), (2, -1.0), (3, 1.0)):
        A0, A1 = at_pi.real_operators[k]
        np.testing.assert_allclose(A1, sign * A0, atol=1e-10)
    print("✅ (Re, Im) pairs unfold Λ versally")


def test_decomplexify_single_pair():
    print("🧪 Testing decomplexification of one conjugate pair...")
    rfde = quarter_period_delay()
    bases = compute_bases(rfde, [1j * PI / 2, -1j * PI / 2])
    family = synthesize(rfde, bases.spec, bases=bases)
    assert len(family.delays) == 2
    real = decomplexify(family, bases.spec)
    assert real.delta == 2
    assert real.param_names == ("beta_1", "beta_2")
    assert real.report.miniversal
    print("✅ Two real operators for ±iπ/2")


def test_decomplexify_errors():
    print("🧪 Testing decomplexification errors...")
    rfde = pupil_reflex()
    bases = compute_bases(rfde, [1j, 2j])
    family = synthesize(rfde, bases.spec, bases=bases)
    with pytest.raises(RealnessError):
        decomplexify(family, bases.spec)

    complex_rfde = LinearRFDE(1, 1.0, (DelayAtom(0.0, [[1j]]),))
    complex_bases = compute_bases(complex_rfde, [1j])
    complex_family = synthesize(complex_rfde, complex_bases.spec, bases=complex_bases)
    with pytest.raises(RealnessError):
        decomplexify(complex_family, complex_bases.spec)

    scalar = scalar_double_zero()
    base_family = synthesize(scalar, compute_bases(scalar, [0.0]).spec)
    tainted = UnfoldingFamily(
        base=base_family.base,
        delays=base_family.delays,
        coefficients=tuple(tuple(A + 1e-3j for A in matrices) for matrices in base_family.coefficients),
        indices=base_family.indices,
    )
    with pytest.raises(RealnessError):
        decomplexify(tainted, base_family.bases.spec)
    print("✅ Complex bases, open Λ and imaginary residue rejected")


def test_solve_coefficients():
    print("🧪 Testing coefficient solves...")
    phi = [np.array([[1.0, 0.0]]), np.array([[1.0, -1.0]])]
    zero = solve_coefficients(np.zeros((1, 2)), phi)
    assert all(np.allclose(A, 0.0) for A in zero)

    with pytest.raises(CoefficientSolveError):
        solve_coefficients(np.array([[0.0, 1.0]]), [np.array([[1.0, 0.0]])])
    with pytest.raises(CoefficientSolveError):
        solve_coefficients(np.array([[0.0, 1.0]]), [])
    with pytest.raises(CoefficientSolveError):
        solve_coefficients(np.array([[0.0, 1.0]]), [np.eye(2)])
    print("✅ Zero, rank-deficient and malformed systems handled")


def test_basis_independence():
    print("🧪 Testing that coefficients do not depend on the basis...")
    cases = (
        (scalar_double_zero(), [0.0], np.array([[2.0, 0.5], [0.0, 2.0]])),
        (pupil_reflex(), PUPIL_LAMBDAS, np.diag([1 + 0.5j, 2.0, -0.7, 1.3j])),
    )
    for rfde, lambdas, U in cases:
        bases = compute_bases(rfde, lambdas)
        family = synthesize(rfde, bases.spec, bases=bases)
        moved = basis_change(bases, U)
        r_matrices = [R @ U for R in build_E_map(bases.spec, bases.psi0).r_matrices]
        again = synthesize(rfde, bases.spec, bases=moved, delays=family.delays, r_matrices=r_matrices)
        for first, second in zip(family.coefficients, again.coefficients):
            for A, A2 in zip(first, second):
                np.testing.assert_allclose(A, A2, atol=1e-8)
    print("✅ Same operators from transported bases")


def main():
    """Run all tests."""
    print("🚀 Starting synthesis tests")
    print("=" * 60)
    tests = [
        test_double_zero_unfolding,
        test_scalar_simplification,
        test_pupil_reflex_coefficients,
        test_pupil_reflex_delay_selection,
        test_ode_case,
        test_decomplexify_real_eigenvalue,
        test_decomplexify_pupil_reflex,
        test_decomplexify_single_pair,
        test_decomplexify_errors,
        test_solve_coefficients,
        test_basis_independence,
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
