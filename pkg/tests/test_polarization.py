from fractions import Fraction
from math import factorial, pi

import mpmath as mp
import numpy as np
import pytest

from kahlerkit.polarization import (
    PolarizationError,
    bergman_diastasis,
    check_condition_C,
    check_condition_D,
    condition_D_report,
    fs_volume,
    gram_matrix,
    kodaira_map,
    monomial_basis,
    monomial_inner,
    product_basis,
    quadrature_inner,
)
from kahlerkit.series import BiSeries


def fs(n, order):
    return BiSeries.norm_squared(n, order).log1p()


@pytest.mark.parametrize("k,j", [(1, 0), (2, 1), (3, 2), (4, 4)])
def test_monomial_inner_against_radial_integral(k, j):
    # CP^1: <Z0^(k-j) Z1^j, same> = 2 pi int r^(2j+1) / (1 + r^2)^(k+2) dr
    val = 2 * mp.pi * mp.quad(lambda r: r ** (2 * j + 1) / (1 + r**2) ** (k + 2), [0, 1, mp.inf])
    exact = monomial_inner(1, k, (k - j, j), (k - j, j)) * fs_volume(1)
    assert abs(float(val) - float(exact)) < 1e-12


def test_monomial_inner_formula_and_orthogonality():
    assert monomial_inner(2, 2, (1, 1, 0), (1, 1, 0)) == Fraction(factorial(2), factorial(4))
    assert monomial_inner(2, 2, (2, 0, 0), (1, 1, 0)) == 0
    with pytest.raises(PolarizationError):
        monomial_inner(2, 2, (1, 0, 0), (1, 0, 0))


def test_quadrature_matches_closed_form():
    for n, k, j in [(1, 3, (1, 2)), (2, 2, (0, 1, 1)), (2, 3, (1, 1, 1))]:
        q = quadrature_inner(n, k, j, j)
        assert abs(q - float(monomial_inner(n, k, j, j)) * fs_volume(n)) < 1e-12
    assert abs(quadrature_inner(2, 2, (2, 0, 0), (1, 1, 0))) < 1e-13


@pytest.mark.parametrize("n,k", [(1, 1), (1, 4), (2, 1), (2, 4)])
def test_gram_is_identity(n, k):
    basis = monomial_basis(n, k)
    basis.validate()
    assert np.max(np.abs(gram_matrix(basis, "quadrature") - np.eye(basis.d_k + 1))) < 1e-6
    assert np.allclose(gram_matrix(basis), np.eye(basis.d_k + 1), atol=1e-14)


def test_product_gram_identity():
    basis = product_basis((1, 1), 2)
    assert basis.d_k + 1 == 9
    assert np.max(np.abs(gram_matrix(basis, "quadrature") - np.eye(9))) < 1e-6


@pytest.mark.parametrize("n,k", [(1, 1), (1, 3), (2, 2), (2, 4)])
def test_bergman_diastasis_is_k_times_fubini_study(n, k):
    d = bergman_diastasis(kodaira_map(monomial_basis(n, k)), 6)
    assert d == fs(n, 6).scale(k)


def test_bergman_product():
    d = bergman_diastasis(kodaira_map(product_basis((1, 1), 2)), 6)
    target = BiSeries.norm_squared(2, 6, indices=[0]).log1p() + BiSeries.norm_squared(2, 6, indices=[1]).log1p()
    assert d == target.scale(2)


def test_conditions_C_and_D():
    for n in (1, 2):
        for k in (1, 2, 3, 4):
            assert check_condition_C(monomial_basis(n, k))
    assert all(check_condition_D(monomial_basis(2, 1), 4).values())
    assert check_condition_C(monomial_basis(1, 2), basepoint=[0, 1]) is False


def test_condition_D_detects_non_orthogonal_basis():
    b = monomial_basis(1, 1)
    # s1 = Z1 + Z0 breaks orthogonality against s0
    skew = b.with_sections([{(1, 0): Fraction(1)}, {(0, 1): Fraction(1), (1, 0): Fraction(1)}], b.scalars)
    rep = condition_D_report(skew, 2)
    assert rep["per_k"][1] is False
    assert rep["first_violation"][1] is not None


def test_basis_ordering_and_volume():
    b = monomial_basis(2, 2)
    assert b.exponents()[0] == (2, 0, 0)
    assert b.d_k == 5
    assert fs_volume(2) == pi**2 / 2


def test_kodaira_chart_validation():
    with pytest.raises(PolarizationError):
        kodaira_map(monomial_basis(1, 1), chart=5)
