import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unarycm.bell import (
    A_DIAG,
    C1,
    C2_REFERENCE,
    ChshOperators,
    CountTable,
    InsufficientDataError,
    extremal_model,
    extremal_model_report,
    cat_discriminate,
    cat_state,
    correlations_from_counts,
    landau_C,
    max_abs_expectation,
    mixture_state,
    random_chsh_ops,
    superposition_state,
)
from unarycm.measurement import random_density

SQ2 = np.sqrt(2)


def test_bundled_table_golden():
    r = correlations_from_counts(CountTable.bundled())
    assert r.E00 == pytest.approx(-0.694, abs=5e-4)
    assert r.E10 == pytest.approx(0.708, abs=5e-4)
    assert r.E01 == pytest.approx(-0.614, abs=5e-4)
    assert r.E11 == pytest.approx(-0.698, abs=5e-4)
    assert r.S == pytest.approx(2.714, abs=5e-4)
    # frozen from the integer counts
    assert r.E00 == pytest.approx(-0.693960, abs=1e-6)
    assert r.se_S == pytest.approx(0.02398, abs=1e-5)


def test_trivial_tables():
    perfect = np.zeros((2, 2, 2, 2), dtype=int)
    perfect[0, 0, :, 0] = perfect[1, 1, :, 1] = 50
    r = correlations_from_counts(CountTable(perfect))
    assert (r.E00, r.E10, r.E01, r.E11) == (1, 1, 1, 1)
    assert r.S == 2
    r = correlations_from_counts(CountTable(np.full((2, 2, 2, 2), 7)))
    assert r.S == 0 and r.E00 == 0


def test_empty_block_and_bad_tables():
    c = np.ones((2, 2, 2, 2), dtype=int)
    c[:, :, 1, :][1] = 0
    with pytest.raises(InsufficientDataError):
        correlations_from_counts(CountTable(c))
    with pytest.raises(ValueError):
        CountTable(-np.ones((2, 2, 2, 2)))
    with pytest.raises(ValueError):
        CountTable(np.ones((4, 4)))
    with pytest.raises(ValueError):
        correlations_from_counts(CountTable.bundled(), signs=(1, 1, 1))


def test_csv_json_roundtrip(tmp_path):
    t = CountTable.bundled()
    p = tmp_path / "t.csv"
    p.write_text(t.to_csv())
    assert np.array_equal(CountTable.read_csv(p).counts, t.counts)
    unlabelled = "\n".join(",".join(line.split(",")[1:]) for line in t.to_csv().splitlines())
    assert np.array_equal(CountTable.read_csv(unlabelled).counts, t.counts)
    j = tmp_path / "t.json"
    j.write_text(json.dumps({"counts": t.rows().tolist()}))
    assert np.array_equal(CountTable.read_json(j).counts, t.counts)
    with pytest.raises(ValueError):
        CountTable.read_csv("a,b,c,d\n1,2,3,4\n")


@given(st.integers(0, 1), st.integers(0, 1), st.integers(2, 50))
def test_block_scaling_invariance(A, B, k):
    t = CountTable.bundled()
    r0 = correlations_from_counts(t)
    r1 = correlations_from_counts(t.scaled_block(A, B, k))
    assert r1.S == pytest.approx(r0.S, abs=1e-12)


def test_extremal_model():
    ops, psi, rho, rho_plus = extremal_model()
    C = ops.C()
    assert np.trace(C @ rho).real == pytest.approx(-2 * SQ2, abs=1e-12)
    np.testing.assert_allclose(rho, np.outer(psi, psi), atol=1e-12)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 1
    np.testing.assert_allclose(C @ C, C2_REFERENCE, atol=1e-12)
    assert np.trace(C) == 0 and np.trace(C @ C) == pytest.approx(16)
    np.testing.assert_allclose(C @ C @ C, 8 * C, atol=1e-12)
    ex = ops.expectations(rho)
    S = abs(ex["ab"] + ex["abp"] + ex["apbp"] - ex["apb"])
    assert S == pytest.approx(2 * SQ2, abs=1e-12)


def test_extremal_report_all_pass():
    rep = extremal_model_report()
    assert len(rep) >= 20
    assert all(v["pass"] for v in rep.values()), [k for k, v in rep.items() if not v["pass"]]


def test_commuting_c_squared_is_four(rng):
    ops = random_chsh_ops(rng, 3, 2, commuting=True)
    L = landau_C(ops)
    assert L.commuting
    np.testing.assert_allclose(L.C2, 4 * np.eye(ops.dim), atol=1e-10)


def test_chsh_validation():
    I = np.eye(2)
    Z = np.diag([1.0, -1.0])
    X = np.array([[0.0, 1], [1, 0]])
    with pytest.raises(ValueError):
        ChshOperators(Z, X, X, Z)  # Alice and Bob do not commute
    with pytest.raises(ValueError):
        ChshOperators(2 * I, I, I, I)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 4), st.booleans())
def test_bounds(seed, dA, dB, commuting):
    rng = np.random.default_rng(seed)
    ops = random_chsh_ops(rng, dA, dB, commuting=commuting)
    L = landau_C(ops)
    assert L.residual <= 1e-10
    assert L.norm_C2 <= 8 + 1e-10
    rho = random_density(rng, ops.dim, rank=1)
    val = abs(np.trace(ops.C() @ rho).real)
    bound = 2 if commuting else 2 * SQ2
    assert val <= bound + 1e-10
    assert max_abs_expectation(ops.C()) <= bound + 1e-10


def test_cat_examples():
    assert cat_discriminate(mixture_state(0.3)).beta == 0
    assert cat_discriminate(mixture_state(0.3)).kind == "mixed"
    r = cat_discriminate(superposition_state(0.5))
    assert abs(r.beta) == pytest.approx(0.5) and r.kind == "pure"
    a = 0.2
    assert cat_discriminate(superposition_state(a)).c1 == pytest.approx(2 * np.sqrt(a * (1 - a)))
    r = cat_discriminate(cat_state(0.5, 0.1 - 0.2j))
    assert r.beta == pytest.approx(0.1 - 0.2j) and r.kind == "intermediate"
    with pytest.raises(ValueError):
        cat_state(0.5, 0.6)


@pytest.mark.parametrize("alpha", np.round(np.arange(0, 1.01, 0.1), 10))
def test_diagonal_measurement_cannot_tell_mixture_from_superposition(alpha):
    m = np.trace(A_DIAG @ mixture_state(alpha)).real
    s = np.trace(A_DIAG @ superposition_state(alpha)).real
    assert m == s == alpha
    assert np.trace(C1 @ mixture_state(alpha)).real == 0
