import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unarycm.bell import A_MAT, AP_MAT, B_MAT
from unarycm.measurement import (
    AmbiguityError,
    DensityMatrix,
    InstrumentSetup,
    Observable,
    discretize,
    instrument_joint,
    jm_check,
    luders_observable,
    luders_of_PiA,
    luders_state,
    matrix_to_json,
    parse_matrix,
    random_density,
    random_hermitian,
    random_unitary,
    repeat_correlation,
    spectral,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 8)


def test_observable_and_density_validation():
    with pytest.raises(ValueError):
        Observable(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    rho = DensityMatrix.pure([1, 1j])
    assert rho.expect(np.diag([1, 0])) == pytest.approx(0.5)


def test_spectral_degenerate():
    sp = spectral(np.diag([1.0, 1.0, 0.0]))
    assert len(sp) == 2
    assert sorted(int(round(np.trace(P).real)) for P in sp.projectors) == [1, 2]


def test_spectral_extremal_a():
    sp = spectral(A_MAT)
    np.testing.assert_allclose(sp.eigenvalues, [-1, 1])
    assert [int(round(np.trace(P).real)) for P in sp.projectors] == [2, 2]


def test_spectral_of_discretized_matches_heaviside(rng):
    A = random_hermitian(rng, 5)
    c = float(np.median(np.linalg.eigvalsh(A))) + 1e-3
    D = discretize(A, c)
    sp = spectral(D)
    w, V = np.linalg.eigh(A)
    upper = V[:, w > c]
    np.testing.assert_allclose(sp.projectors[-1], upper @ upper.conj().T, atol=1e-10)


@given(seeds, dims, st.booleans())
def test_spectral_invariants(seed, d, degenerate):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, d, degenerate)
    sp = spectral(A)
    r = sp.residuals()
    assert r["orthogonality"] <= 1e-10 and r["completeness"] <= 1e-10
    assert np.abs(sp.reconstruct() - A).max() <= 1e-9 * max(1, np.abs(A).max())


def test_luders_state_examples():
    A = np.diag([1.0, 2.0])
    mixed = np.diag([0.5, 0.5])
    np.testing.assert_allclose(luders_state(mixed, A).matrix, mixed)
    sup = 0.5 * np.array([[1, 1], [1, 1]])
    np.testing.assert_allclose(luders_state(sup, A).matrix, mixed, atol=1e-15)
    rng = np.random.default_rng(1)
    rho = random_density(rng, 4)
    np.testing.assert_allclose(luders_state(rho, np.eye(4)).matrix, rho, atol=1e-14)


@given(seeds, dims, st.booleans())
def test_luders_state_properties(seed, d, degenerate):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, d, degenerate)
    rho = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
    sp = spectral(A)
    rA = luders_state(rho, sp).matrix
    assert abs(np.trace(rA) - 1) <= 1e-12
    assert np.linalg.eigvalsh(rA).min() >= -1e-10
    assert np.abs(rA @ A - A @ rA).max() <= 1e-10 * max(1, np.abs(A).max())
    np.testing.assert_allclose(luders_state(rA, sp).matrix, rA, atol=1e-12)


def test_luders_observable_examples():
    A = np.diag([1.0, 1.0, 2.0])
    X = np.diag([3.0, -1.0, 0.5])
    np.testing.assert_allclose(luders_observable(X, A).matrix, X)
    XA = luders_observable(AP_MAT, A_MAT).matrix
    # a' flips the a = +-1 eigenvalue, so every entry lies off-block
    np.testing.assert_allclose(XA, np.zeros((4, 4)), atol=1e-15)


@given(seeds, dims, st.booleans())
def test_luders_of_measurement_identity(seed, d, degenerate):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, d, degenerate)
    X = random_hermitian(rng, d)
    rho = random_density(rng, d)
    sp = spectral(A)
    XA = luders_observable(X, sp).matrix
    lhs = np.trace(A @ X @ luders_state(rho, sp).matrix)
    rhs = np.trace(A @ XA @ rho)
    assert abs(lhs - rhs) <= 1e-11
    assert np.abs(A @ XA - XA @ A).max() <= 1e-11 * max(1, np.abs(A).max() * np.abs(X).max())
    np.testing.assert_allclose(luders_observable(XA, sp).matrix, XA, atol=1e-11)


def test_jm_check_examples():
    r = jm_check([A_MAT, B_MAT])
    assert r.passed and r.worst == 0
    r = jm_check([A_MAT, AP_MAT])
    assert not r.passed
    assert r.worst == pytest.approx(2.0)
    assert jm_check([A_MAT]).passed


def test_discretize_examples():
    A = np.diag([0.2, 0.8])
    np.testing.assert_allclose(discretize(A, 0.5).matrix, np.diag([0, 1]))
    np.testing.assert_allclose(discretize(A, -1).matrix, np.eye(2))
    np.testing.assert_allclose(discretize(A, 2).matrix, np.zeros((2, 2)))
    with pytest.raises(AmbiguityError):
        discretize(A, 0.8)


@given(seeds, dims, st.booleans())
def test_repeat_correlation_diagonal(seed, d, degenerate):
    rng = np.random.default_rng(seed)
    rep = repeat_correlation(random_hermitian(rng, d, degenerate), random_density(rng, d))
    assert rep.offdiag_mass <= 1e-12
    assert rep.marginal_residual <= 1e-12


def test_repeat_correlation_degenerate_clusters():
    rep = repeat_correlation(np.diag([1.0, 1.0, 3.0]), np.full((3, 3), 1 / 3))
    assert rep.joint.shape == (2, 2)
    np.testing.assert_allclose(np.diag(rep.joint), [2 / 3, 1 / 3])


def test_luders_of_PiA():
    P = (np.eye(4) + A_MAT) / 2
    X = np.diag([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(luders_of_PiA(X, P).matrix, X)
    Y = luders_of_PiA(AP_MAT, P).matrix
    np.testing.assert_allclose(Y @ P, P @ Y, atol=1e-12)
    # a' only couples the two eigenspaces of a, so the blocked result vanishes
    np.testing.assert_allclose(Y, np.zeros((4, 4)), atol=1e-15)
    with pytest.raises(ValueError):
        luders_of_PiA(X, np.diag([0.5, 1, 0, 0]))


def test_instrument_examples():
    I2 = np.eye(2)
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    setup = InstrumentSetup(I2, H)
    r = instrument_joint(setup, np.array([1, 0]))
    np.testing.assert_allclose(r.p_A, [1, 0], atol=1e-15)
    psi = np.array([1, 1]) / np.sqrt(2)
    r = instrument_joint(setup, psi)
    np.testing.assert_allclose(r.p_B_unmeasured, [1, 0], atol=1e-12)
    np.testing.assert_allclose(r.p_B_measured, [0.5, 0.5], atol=1e-12)
    assert r.route_residual <= 1e-12 and r.normalization_residual <= 1e-12
    assert r.stochastic_reduction == "unsupported"


def test_instrument_commuting_case(rng):
    U = random_unitary(rng, 3)
    setup = InstrumentSetup(U, U[:, [2, 0, 1]])
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    r = instrument_joint(setup, psi / np.linalg.norm(psi))
    np.testing.assert_allclose(r.p_B_measured, r.p_B_unmeasured, atol=1e-12)


@given(seeds, st.integers(2, 5), st.booleans())
def test_instrument_routes_agree(seed, d, degenerate):
    rng = np.random.default_rng(seed)
    UA, UB = random_unitary(rng, d), random_unitary(rng, d)
    labels = tuple(int(x) for x in rng.integers(0, 2, size=d)) if degenerate else None
    setup = InstrumentSetup(UA, UB, a_labels=labels)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    r = instrument_joint(setup, psi)
    assert r.normalization_residual <= 1e-12
    assert r.route_residual <= 1e-12
    # bullet reading: sum_i <b_j|P_i|psi><psi|P_i|b_j>
    direct = [sum(abs(UB[:, j].conj() @ P @ psi) ** 2 for P in setup.a_projectors) for j in range(d)]
    np.testing.assert_allclose(r.p_B_measured, direct, atol=1e-12)


def test_instrument_validation():
    with pytest.raises(ValueError):
        InstrumentSetup(np.eye(2), np.ones((2, 2)))
    with pytest.raises(ValueError):
        instrument_joint(InstrumentSetup(np.eye(2), np.eye(2)), [1, 1])


def test_matrix_json_roundtrip(rng):
    m = random_hermitian(rng, 3)
    np.testing.assert_array_equal(parse_matrix(matrix_to_json(m)), m)
    np.testing.assert_array_equal(parse_matrix([[1, [0, 2]], [[0, -2], 3]]), [[1, 2j], [-2j, 3]])
    with pytest.raises(ValueError):
        parse_matrix([[[1, 2, 3]]])
