import numpy as np
import pytest

from verifiers.errors import InputError, SingularModelError
from verifiers.linalg_core import (
    SymmetricMatrix,
    as_model,
    cholesky_factor,
    eig_extremes,
    jacobi_eigh,
    max_entry_norm,
    norms,
    op_norm,
    solve_spd,
    submatrix,
    vector_norms,
)

from .conftest import random_spd, random_symmetric


def test_only_upper_triangle_is_read():
    a = SymmetricMatrix([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    assert a.entry(1, 0) == a.entry(0, 1) == 2.0


def test_asymmetric_input_rejected():
    with pytest.raises(InputError):
        SymmetricMatrix([[1.0, 2.0], [0.0, 1.0]])


def test_non_finite_rejected():
    with pytest.raises(InputError):
        SymmetricMatrix([[np.nan]])


def test_submatrix_of_identity():
    assert submatrix(SymmetricMatrix.identity(3), (0, 2)) == SymmetricMatrix.identity(2)


def test_submatrix_reads_off_entry():
    a = np.eye(3)
    a[1, 2] = a[2, 1] = 5.0
    assert submatrix(SymmetricMatrix(a), (1, 2)).entry(0, 1) == 5.0


def test_submatrix_matches_gather(rng):
    a = random_symmetric(rng, 6)
    model = (1, 3, 4)
    sub = submatrix(a, model)
    for i, j in enumerate(model):
        for r, l in enumerate(model):
            assert sub.entry(i, r) == a.entry(j, l)


@pytest.mark.parametrize("model", [(), (2, 1), (0, 0), (0, 3)])
def test_invalid_models(model):
    with pytest.raises(InputError):
        as_model(model, 3)


def test_solve_identity(rng):
    b = rng.standard_normal(4)
    np.testing.assert_allclose(solve_spd(SymmetricMatrix.identity(4), b), b)


def test_solve_diagonal():
    x = solve_spd(SymmetricMatrix([[2.0, 0.0], [0.0, 4.0]]), [2.0, 8.0])
    np.testing.assert_allclose(x, [1.0, 2.0])


def test_solve_residual(rng):
    a = random_spd(rng, 5)
    b = rng.standard_normal(5)
    x = solve_spd(a, b)
    assert np.linalg.norm(a.values @ x - b) <= 1e-10 * (1.0 + np.linalg.norm(b))


def test_singular_matrix_raises_with_model():
    ones = SymmetricMatrix(np.ones((2, 2)))
    with pytest.raises(SingularModelError) as info:
        cholesky_factor(ones, model=(0, 1))
    assert info.value.model == (0, 1)


def test_indefinite_matrix_raises():
    with pytest.raises(SingularModelError):
        solve_spd(SymmetricMatrix([[1.0, 0.0], [0.0, -1.0]]), [1.0, 1.0])


def test_eig_extremes_diagonal():
    lo, hi = eig_extremes(SymmetricMatrix(np.diag([1.0, -2.0, 3.0])))
    assert lo == pytest.approx(-2.0)
    assert hi == pytest.approx(3.0)


def test_eig_extremes_swap():
    lo, hi = eig_extremes(SymmetricMatrix([[0.0, 1.0], [1.0, 0.0]]))
    assert (lo, hi) == pytest.approx((-1.0, 1.0))


def test_jacobi_trace_and_determinant(rng):
    a = random_symmetric(rng, 6)
    decomposition = jacobi_eigh(a)
    values = decomposition.eigenvalues
    assert np.all(np.diff(values) >= 0)
    assert np.sum(values) == pytest.approx(np.trace(a.values), abs=1e-9)
    assert np.prod(values) == pytest.approx(np.linalg.det(a.values), rel=1e-8, abs=1e-9)
    v = decomposition.eigenvectors
    np.testing.assert_allclose(a.values @ v, v * values, atol=1e-8)


def test_two_by_two_closed_form_matches_jacobi(rng):
    a = random_symmetric(rng, 2)
    values = jacobi_eigh(a).eigenvalues
    assert eig_extremes(a) == pytest.approx((values[0], values[1]), abs=1e-10)


def test_op_norm():
    assert op_norm(SymmetricMatrix(np.diag([1.0, -4.0, 2.0]))) == pytest.approx(4.0)


def test_vector_norms_345():
    v = vector_norms([3.0, -4.0])
    assert (v.l1, v.l2, v.linf, v.l0) == (7.0, 5.0, 4.0, 2)


def test_vector_norms_zero():
    v = vector_norms(np.zeros(3))
    assert (v.l1, v.l2, v.linf, v.l0) == (0.0, 0.0, 0.0, 0)


def test_l1_l2_inequality(rng):
    v = vector_norms(rng.standard_normal(20))
    assert v.l1 <= np.sqrt(20) * v.l2


def test_matrix_norm_summary():
    a = SymmetricMatrix([[1.0, -3.0], [-3.0, 2.0]])
    assert max_entry_norm(a) == 3.0
    assert norms(a) == {"max_entry": 3.0}
    assert norms([1.0, -1.0])["l1"] == 2.0
