import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from energysplit.linalg import SymMatrix, jacobi_eigh, matvec, sym_eig_min

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def closed_form_2x2(a, b, c):
    """Smallest eigenvalue of [[a, b], [b, c]] from trace and determinant."""
    tr, det = a + c, a * c - b * b
    return tr / 2 - np.sqrt(max(tr * tr / 4 - det, 0.0))


def random_sym(rng, d):
    a = rng.normal(size=(d, d))
    return SymMatrix.symmetrize(a)


def test_diagonal():
    e = sym_eig_min(SymMatrix(np.diag([2.0, -3.0])))
    assert e.value == -3.0
    np.testing.assert_array_equal(e.vector, [0.0, 1.0])


def test_identity_any_unit_vector():
    e = sym_eig_min(SymMatrix(np.eye(4)))
    assert e.value == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.norm(e.vector) == pytest.approx(1.0, abs=1e-12)


def test_two_by_two_closed_form():
    e = sym_eig_min(SymMatrix([[2.0, 1.0], [1.0, 2.0]]))
    assert e.value == pytest.approx(closed_form_2x2(2, 1, 2), abs=1e-12)
    np.testing.assert_allclose(e.vector, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-12)


@given(finite, finite, finite)
def test_2x2_matches_closed_form(a, b, c):
    e = sym_eig_min(SymMatrix([[a, b], [b, c]]))
    assert abs(e.value - closed_form_2x2(a, b, c)) <= 1e-10 * max(1.0, abs(a), abs(b), abs(c))


def test_rayleigh_lower_bound(rng):
    for _ in range(120):
        d = int(rng.integers(1, 17))
        m = random_sym(rng, d)
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        assert sym_eig_min(m).value <= v @ m.entries @ v + 1e-12


def test_residual_and_norm(rng):
    for d in (1, 2, 3, 8, 16, 33):
        m = random_sym(rng, d)
        e = sym_eig_min(m, tol=1e-10)
        assert abs(np.linalg.norm(e.vector) - 1) <= 1e-10
        assert np.linalg.norm(m.entries @ e.vector - e.value * e.vector) <= 1e-10 * np.linalg.norm(m.entries)


def test_full_decomposition_is_orthonormal(rng):
    m = random_sym(rng, 12)
    w, v = jacobi_eigh(m)
    np.testing.assert_allclose(v.T @ v, np.eye(12), atol=1e-12)
    np.testing.assert_allclose(v @ np.diag(w) @ v.T, m.entries, atol=1e-10)


def test_permutation_invariance(rng):
    for _ in range(20):
        d = int(rng.integers(2, 10))
        m = random_sym(rng, d)
        perm = rng.permutation(d)
        permuted = SymMatrix(m.entries[np.ix_(perm, perm)])
        assert sym_eig_min(permuted).value == pytest.approx(sym_eig_min(m).value, abs=1e-10)


def test_sign_convention():
    e = sym_eig_min(SymMatrix([[1.0, -2.0], [-2.0, 1.0]]))
    assert e.vector[0] > 0


def test_degenerate_minimum_checked_by_residual():
    m = SymMatrix(np.diag([-1.0, -1.0, 3.0]))
    e = sym_eig_min(m)
    assert e.value == -1.0
    assert np.linalg.norm(m.entries @ e.vector + e.vector) < 1e-12


def test_zero_matrix():
    e = sym_eig_min(SymMatrix(np.zeros((3, 3))))
    assert e.value == 0.0


def test_non_finite_entry_named():
    a = np.eye(3)
    a[1, 2] = a[2, 1] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        sym_eig_min(SymMatrix(a))


def test_asymmetric_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])


def test_symmetrize_is_bit_exact(rng):
    m = SymMatrix.symmetrize(rng.normal(size=(9, 9)))
    assert np.array_equal(m.entries, m.entries.T)


def test_matvec_examples():
    m = SymMatrix([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_array_equal(matvec(m, [1.0, 0.0]), [2.0, 1.0])
    np.testing.assert_array_equal(matvec(m, [0.0, 0.0]), [0.0, 0.0])
    v = np.array([0.3, -4.0, 2.5])
    np.testing.assert_array_equal(matvec(SymMatrix(np.eye(3)), v), v)


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(SymMatrix(np.eye(2)), [1.0, 2.0, 3.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2**31))
def test_agrees_with_lapack(d, seed):
    m = random_sym(np.random.default_rng(seed), d)
    assert sym_eig_min(m).value == pytest.approx(np.linalg.eigvalsh(m.entries)[0], abs=1e-9)
