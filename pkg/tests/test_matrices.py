import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from kmsquot.errors import BudgetExceeded, DimensionMismatch, FormatError, SingularMatrix
from kmsquot.fields import GF, FieldDescriptor
from kmsquot.matrices import (
    MatFq,
    SymplecticForm,
    algebra_envelope,
    algebra_envelope_dim,
    assemble,
    block_diag,
    commutator,
    embed,
    extract_blocks,
    is_symplectic,
    is_symplectic_batch,
    matrix_from_text,
    matrix_to_text,
    pack_key,
    pack_keys,
    unpack_key,
    unpack_keys,
)

F5, F7 = GF(5), GF(7)
F9 = FieldDescriptor.create(3, 2, 5).field


def square(F, n_max=5):
    return st.integers(1, n_max).flatmap(
        lambda n: st.lists(st.integers(0, F.q - 1), min_size=n * n, max_size=n * n)
        .map(lambda v: MatFq(np.array(v).reshape(n, n), F)))


@given(square(F7))
def test_det_and_inverse_match_sympy(M):
    S = sympy.Matrix(M.a.tolist())
    assert M.det() == int(S.det()) % 7
    if M.det():
        assert M.inv().a.tolist() == (S.inv_mod(7) % 7).tolist()
        assert (M @ M.inv()).is_identity()
    else:
        with pytest.raises(SingularMatrix):
            M.inv()


@given(square(F9, 4))
def test_inverse_over_extension_base(M):
    if M.is_invertible():
        assert (M.inv() @ M).is_identity()
        assert M.inv().det() == F9.inv(M.det())


@given(square(F5, 4), square(F5, 4))
def test_det_is_multiplicative(A, B):
    if A.n == B.n:
        assert (A @ B).det() == F5.mul(A.det(), B.det())


def test_commutator_folds_left():
    g = MatFq([[1, 1], [0, 1]], F5)
    h = MatFq([[1, 0], [1, 1]], F5)
    u = MatFq([[2, 0], [0, 3]], F5)
    assert commutator(g, h, u) == commutator(commutator(g, h), u)
    assert commutator(g, h) == g.inv() @ h.inv() @ g @ h


def test_block_helpers():
    k = 2
    A = MatFq([[1, 2], [3, 4]], F7)
    X = embed(A, 2, 4)
    blocks = extract_blocks(X, k)
    assert blocks[1][3] == A
    assert all(blocks[i][j].is_zero() for i in range(4) for j in range(4) if (i, j) != (1, 3))
    assert assemble([[A, None], [None, A]], k, F7) == block_diag(A, A)
    with pytest.raises(DimensionMismatch):
        assemble([[A, MatFq.identity(3, F7)], [None, None]], k, F7)


@given(square(F7, 6))
def test_pack_unpack_round_trip(M):
    assert unpack_key(pack_key(M), M.n, F7) == M
    keys = pack_keys(F7, M.a[None])
    assert np.array_equal(unpack_keys(F7, keys, M.n)[0], M.a)


def test_pack_keys_bytes_branch_and_order():
    rng = np.random.default_rng(3)
    mats = rng.integers(0, 7, size=(50, 20, 20))
    keys = pack_keys(F7, mats)
    assert keys.dtype.kind == "S"
    assert np.array_equal(unpack_keys(F7, keys, 20), mats)
    assert len(np.unique(keys)) == len({m.tobytes() for m in mats})


def test_small_keys_agree_with_scalar_packing():
    rng = np.random.default_rng(0)
    mats = rng.integers(0, 5, size=(20, 4, 4))
    keys = pack_keys(F5, mats)
    assert keys.dtype == np.uint64
    assert [int(k) for k in keys] == [pack_key(MatFq(m, F5)) for m in mats]


def test_text_round_trip_and_errors():
    M = MatFq([[1, 2], [3, 4]], F9)
    assert matrix_from_text(matrix_to_text(M), F9) == M
    with pytest.raises(FormatError):
        matrix_from_text("2 5 1\n1 2\n", F5)
    with pytest.raises(FormatError):
        matrix_from_text("2 7 1\n1 2\n3 4\n", F5)


def test_symplectic_checks():
    form = SymplecticForm.standard(2, F5)
    I4 = MatFq.identity(4, F5)
    T = I4 + MatFq.unit(1, 3, 4, F5)
    assert is_symplectic(T, form)
    bad = I4 + MatFq.unit(1, 2, 4, F5)
    assert not is_symplectic(bad, form)
    assert list(is_symplectic_batch(F5, np.stack([T.a, bad.a]), form)) == [True, False]


def test_envelope_of_transvections_is_full():
    u = MatFq([[1, 1], [0, 1]], F5)
    l = MatFq([[1, 0], [1, 1]], F5)
    assert algebra_envelope_dim([u, l]) == 4


def test_envelope_of_upper_unipotents():
    u = MatFq([[1, 1, 0], [0, 1, 0], [0, 0, 1]], F5)
    v = MatFq([[1, 0, 0], [0, 1, 1], [0, 0, 1]], F5)
    # span{I, E12, E23, E13}
    assert algebra_envelope_dim([u, v]) == 4


def test_envelope_budget():
    u = MatFq([[1, 1, 0], [0, 1, 1], [0, 0, 1]], F5)
    with pytest.raises(BudgetExceeded) as exc:
        algebra_envelope_dim([u], max_len=1)
    assert exc.value.dim == 2


@given(st.integers(0, 10_000))
def test_envelope_monotone_in_budget(seed):
    rng = np.random.default_rng(seed)
    gens = [MatFq(rng.integers(0, 5, (3, 3)), F5) for _ in range(2)]
    dims = [algebra_envelope(gens, L).dim for L in range(5)]
    assert dims == sorted(dims)
    res = algebra_envelope(gens, 12)
    # stabilization: the history stops growing exactly once
    h = res.history
    if res.closed:
        assert h[-1] == h[-2] or len(h) == 13
