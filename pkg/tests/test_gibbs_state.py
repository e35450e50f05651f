from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from unarycm.gibbs_state import (
    DivergenceError,
    GeneralGibbsDensity,
    GibbsState,
    char_function,
    general_hamiltonian_moment,
    generating_function,
    generating_function_truncated,
    moment_qp,
    raw_moment,
    symbolic_moment,
    taylor_closed_form,
    taylor_symbolic,
)
from unarycm.phase_space import PhasePolynomial
from unarycm.weyl_algebra import AlgebraElement, CanonicalGenerators, FVector, adjoint, multiply


def gaussian_moment(k: int, kT: float) -> float:
    """Independent oracle: E[X^k] for X ~ N(0, kT) by Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(40)
    return float(np.sum(w * (np.sqrt(kT) * x) ** k) / np.sqrt(2 * np.pi))


def test_moment_formula_examples():
    assert moment_qp(0, 0) == 1
    assert moment_qp(1, 0) == 1
    assert moment_qp(2, 0) == 3
    assert moment_qp(2, 1, Fraction(1, 2)) == Fraction(3, 8)
    assert moment_qp(3, 2, 2) == 15 * 3 * 2**5
    with pytest.raises(ValueError):
        moment_qp(-1, 0)


@pytest.mark.parametrize("kT", [1, 0.5, 2.7])
def test_raw_moments_match_quadrature(kT):
    for m in range(7):
        for n in range(7 - m):
            oracle = gaussian_moment(m, kT) * gaussian_moment(n, kT)
            assert float(raw_moment(m, n, kT)) == pytest.approx(oracle, rel=1e-12, abs=1e-12)


def test_symbolic_moments_exact_at_unit_temperature():
    for m in range(9):
        for n in range(9 - m):
            s = symbolic_moment(m, n, 1)
            assert s == raw_moment(m, n, 1)


def test_symbolic_moment_float_temperature():
    assert complex(symbolic_moment(4, 2, 0.7)).real == pytest.approx(3 * 0.7**3, rel=1e-12)


def test_state_normalized_and_annihilates_words():
    rho = GibbsState(1)
    assert rho(AlgebraElement.one()) == 1
    for w in [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0), (0, 0, 2, 1)]:
        assert rho(AlgebraElement({w: 1})) == 0
    with pytest.raises(ValueError):
        GibbsState(0)


words = st.tuples(*(st.integers(0, 2) for _ in range(4)))
elements = st.dictionaries(words, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=1, max_size=4).map(AlgebraElement)


@given(elements)
def test_state_positive(A):
    val = complex(GibbsState(1).eval(multiply(adjoint(A), A)))
    assert val.real >= -1e-12 and abs(val.imag) <= 1e-9


def test_gns_inner_examples():
    g = CanonicalGenerators(2)
    rho = GibbsState(2)
    assert complex(rho.inner(g.q, g.q)) == pytest.approx(2)
    assert complex(rho.inner(g.q, g.p)) == 0


def test_char_function_matches_quadrature():
    kT, lam, mu = 1.3, 0.4, -0.9
    x, w = np.polynomial.hermite_e.hermegauss(60)
    x = np.sqrt(kT) * x
    one_d = lambda t: np.sum(w * np.exp(1j * t * x)) / np.sqrt(2 * np.pi)  # noqa: E731
    assert char_function(lam, mu, kT) == pytest.approx(one_d(lam) * one_d(mu), abs=1e-12)


fvecs = st.lists(st.floats(-1, 1), min_size=4, max_size=4).map(lambda v: FVector(*v))


@given(st.lists(fvecs, min_size=1, max_size=3))
def test_taylor_coefficients_agree(fs):
    a = taylor_symbolic(fs, 1, order=4)
    b = taylor_closed_form(fs, 1, order=4)
    assert a.keys() == b.keys()
    assert max(abs(a[k] - b[k]) for k in a) <= 1e-12


def test_generating_function_closed_form_vs_truncated_product():
    f, h = FVector(0.3, -0.2, 0.5, 0.1), FVector(-0.4, 0.6, 0.2, -0.3)
    pairs = [(0.2, f), (0.15, h)]
    exact = generating_function(pairs, 1)
    approx = generating_function_truncated(pairs, 1, order=8)
    assert abs(exact - approx) <= 1e-9


def test_generating_function_single_pair_is_gaussian():
    # one factor with f3 = f4 = 0 reduces to the characteristic function
    assert generating_function([(1.0, FVector(0.5, -0.3))], 1.7) == pytest.approx(char_function(0.5, -0.3, 1.7))
    assert generating_function([], 1) == 1


def test_general_density_harmonic_matches_closed_form():
    H = PhasePolynomial.parse("1/2 q^2 + 1/2 p^2")
    gd = GeneralGibbsDensity(H, kT=1.0)
    assert general_hamiltonian_moment(gd, 0, 0) == pytest.approx(1, abs=1e-12)
    assert general_hamiltonian_moment(gd, 2, 0) == pytest.approx(1, abs=1e-8)
    assert general_hamiltonian_moment(gd, 4, 2) == pytest.approx(3, abs=1e-8)
    assert general_hamiltonian_moment(gd, 1, 0) == pytest.approx(0, abs=1e-12)
    assert gd.normalization() == pytest.approx(2 * np.pi, rel=1e-8)


def test_general_density_quartic_vs_scipy_quad():
    kT = 0.8
    H = PhasePolynomial.parse("q^4 + 1/2 p^2")
    gd = GeneralGibbsDensity(H, kT=kT)
    w = lambda x: np.exp(-(x**4) / kT)  # noqa: E731
    num = integrate.quad(lambda x: x**2 * w(x), -np.inf, np.inf)[0]
    den = integrate.quad(w, -np.inf, np.inf)[0]
    assert general_hamiltonian_moment(gd, 2, 0) == pytest.approx(num / den, rel=1e-8)
    assert general_hamiltonian_moment(gd, 0, 2) == pytest.approx(kT, rel=1e-8)


@pytest.mark.parametrize("text", ["1/2 q^2 - 1/2 p^2", "q^3 + p^2", "q p"])
def test_general_density_rejects_unconfined(text):
    with pytest.raises(DivergenceError):
        GeneralGibbsDensity(PhasePolynomial.parse(text)).weights()


def test_general_density_rejects_complex_hamiltonian():
    with pytest.raises(ValueError):
        GeneralGibbsDensity(PhasePolynomial.parse("j q^2 + p^2"))
