import pytest

from kmsquot.errors import NotSinger
from kmsquot.fields import FieldDescriptor, is_primitive, trace
from kmsquot.matrices import MatFq
from kmsquot.singer import (
    SelfDualBasis,
    centralizer_dim,
    companion_matrix,
    find_lambda_trace_nonzero,
    find_self_dual_normal_basis,
    is_permuted_block_diagonal,
    membership_in_poly_algebra,
    mult_map_matrix,
    singer_certificate,
    trace_form_matrix,
    verify_singer,
)

CASES = [(5, 1, 7), (7, 1, 5), (11, 1, 5), (13, 1, 5), (3, 2, 5)]


@pytest.fixture(scope="module", params=CASES, ids=lambda c: "p{}r{}k{}".format(*c))
def basis(request):
    return find_self_dual_normal_basis(FieldDescriptor.create(*request.param))


def test_basis_is_self_dual_and_normal(basis):
    assert basis.gram().is_identity()
    b = basis.elems
    # b_{i+1} = b_i^q
    assert all(b[i] ** basis.desc.q == b[i + 1] for i in range(len(b) - 1))


def test_basis_text_round_trip(basis):
    again = SelfDualBasis.from_text(basis.to_text())
    assert again.elems == basis.elems


def test_mult_map_is_symmetric_trace_form(basis):
    lam = find_lambda_trace_nonzero(basis)
    S = mult_map_matrix(lam, basis)
    assert S == trace_form_matrix(lam, basis)
    assert S.is_symmetric()
    assert is_primitive(lam)
    assert trace(lam * basis.elems[0] * basis.elems[0]) != 0


def test_mult_map_is_a_ring_homomorphism(basis):
    g = basis.desc.gen()
    x, y = g ** 3 + 1, g ** 11
    assert mult_map_matrix(x * y, basis) == mult_map_matrix(x, basis) @ mult_map_matrix(y, basis)
    assert mult_map_matrix(x + y, basis) == mult_map_matrix(x, basis) + mult_map_matrix(y, basis)


def test_singer_certificate(basis):
    S = mult_map_matrix(find_lambda_trace_nonzero(basis), basis)
    cert = verify_singer(S)
    assert cert.ok
    assert cert.centralizer_dim == basis.k
    assert not is_permuted_block_diagonal(S)


def test_non_primitive_multiplier_is_not_singer():
    desc = FieldDescriptor.create(7, 1, 5)
    basis = find_self_dual_normal_basis(desc)
    lam = find_lambda_trace_nonzero(basis)
    S2 = mult_map_matrix(lam ** 2, basis)  # 7^5 - 1 is even
    assert not singer_certificate(S2).ok
    with pytest.raises(NotSinger) as exc:
        verify_singer(S2)
    assert exc.value.certificate is not None


def test_companion_of_primitive_polynomial_is_singer():
    desc = FieldDescriptor.create(5, 1, 3)
    C = companion_matrix(desc.modulus_top, desc.field)
    assert verify_singer(C).ok


def test_scalar_and_identity_are_rejected():
    F = FieldDescriptor.create(5, 1, 3).field
    assert not singer_certificate(MatFq.identity(3, F)).ok
    assert centralizer_dim(MatFq.identity(3, F)) == 9


def test_poly_algebra_membership(basis):
    S = mult_map_matrix(find_lambda_trace_nonzero(basis), basis)
    F = S.F
    assert membership_in_poly_algebra(S @ S + S.scale(3 % F.p), S)
    assert membership_in_poly_algebra(S.inv(), S)
    E = MatFq.unit(1, 2, S.n, F)
    assert not membership_in_poly_algebra(E, S)


def test_block_diagonal_detection():
    F = FieldDescriptor.create(5, 1, 1).field
    M = MatFq([[1, 0, 2], [0, 3, 0], [4, 0, 1]], F)
    assert is_permuted_block_diagonal(M)
    assert not is_permuted_block_diagonal(MatFq([[1, 1, 0], [1, 1, 1], [0, 1, 1]], F))
