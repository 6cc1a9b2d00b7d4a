import itertools

import sympy
import pytest
from hypothesis import given, strategies as st

from kmsquot.errors import FieldMismatch, ZeroInversion
from kmsquot.fields import (
    GF,
    FieldDescriptor,
    factorize,
    find_primitive,
    frobenius,
    is_irreducible,
    is_primitive,
    is_primitive_poly,
    multiplicative_order,
    smallest_irreducible,
    trace,
)

x = sympy.symbols("x")
FIELDS = [FieldDescriptor.create(5, 1, 1).field, FieldDescriptor.create(7, 1, 1).field,
          FieldDescriptor.create(3, 2, 5).field]


def test_prime_field_inverse_and_pow():
    F = GF(7)
    assert [F.inv(a) for a in range(1, 7)] == [pow(a, -1, 7) for a in range(1, 7)]
    assert F.pow(3, 6) == 1
    with pytest.raises(ZeroDivisionError):
        F.inv(0)
    with pytest.raises(ZeroInversion):
        F.inv(0)


def test_gf9_multiplication_matches_polynomial_oracle():
    F = FieldDescriptor.create(3, 2, 5).field
    mod = sympy.Poly(list(reversed(F.modulus)), x, modulus=3)
    for a in range(9):
        for b in range(9):
            pa = sympy.Poly(list(reversed(F.digits(a))), x, modulus=3)
            pb = sympy.Poly(list(reversed(F.digits(b))), x, modulus=3)
            prod = (pa * pb).rem(mod)
            coeffs = [int(c) % 3 for c in reversed(prod.all_coeffs())]
            coeffs += [0] * (2 - len(coeffs))
            assert F.mul(a, b) == F.from_digits(coeffs)


@pytest.mark.parametrize("F", FIELDS, ids=lambda F: f"q{F.q}")
@given(data=st.data())
def test_field_axioms(F, data):
    el = st.integers(0, F.q - 1)
    a, b, c = data.draw(el), data.draw(el), data.draw(el)
    assert F.add(a, b) == F.add(b, a)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.add(a, F.neg(a)) == 0
    if a:
        assert F.mul(a, F.inv(a)) == 1


@pytest.mark.parametrize("p,d", [(5, 2), (5, 3), (7, 3), (3, 4), (11, 2)])
def test_irreducibility_against_sympy(p, d):
    F = GF(p)
    for head in itertools.islice(itertools.product(range(p), repeat=d), 60):
        f = tuple(head) + (1,)
        oracle = sympy.Poly(list(reversed(f)), x, modulus=p).is_irreducible
        assert is_irreducible(F, f) == oracle, f


@pytest.mark.parametrize("p,d", [(5, 2), (7, 3), (3, 5)])
def test_smallest_irreducible_is_first_in_scan_order(p, d):
    first = next(tuple(h) + (1,) for h in itertools.product(range(p), repeat=d)
                 if sympy.Poly([1] + list(reversed(h)), x, modulus=p).is_irreducible)
    assert smallest_irreducible(GF(p), d) == first


@pytest.mark.parametrize("p,r,k", [(5, 1, 7), (7, 1, 5), (11, 1, 5), (13, 1, 5), (3, 2, 5)])
def test_default_moduli_are_primitive(p, r, k):
    desc = FieldDescriptor.create(p, r, k)
    assert is_primitive_poly(desc.field, desc.modulus_top)
    assert is_primitive(desc.gen())


@pytest.mark.parametrize("p,r,k", [(7, 1, 5), (3, 2, 5), (5, 1, 3)])
def test_trace_equals_sum_of_conjugates(p, r, k):
    desc = FieldDescriptor.create(p, r, k)
    g = desc.gen()
    y = desc.one()
    for _ in range(25):
        conj, total = y, desc.zero()
        for _ in range(k):
            total = total + conj
            conj = frobenius(conj)
        assert total.coeffs[1:] == (0,) * (k - 1)
        assert trace(y) == total.coeffs[0]
        y = y * g + 1


def test_trace_is_linear_and_surjective():
    desc = FieldDescriptor.create(5, 1, 3)
    els = list(desc.elements())
    vals = {trace(e) for e in els}
    assert vals == set(range(5))
    a, b = els[17], els[88]
    assert trace(a + b) == desc.field.add(trace(a), trace(b))


def test_primitive_element_has_full_order():
    desc = FieldDescriptor.create(7, 1, 5)
    g = find_primitive(desc)
    assert multiplicative_order(g) == 7 ** 5 - 1


def test_descriptor_text_round_trip():
    desc = FieldDescriptor.create(3, 2, 5)
    assert FieldDescriptor.from_text(desc.to_text()) == desc


def test_mixing_towers_raises():
    a = FieldDescriptor.create(5, 1, 3).gen()
    b = FieldDescriptor.create(5, 1, 2).gen()
    with pytest.raises(FieldMismatch):
        a + b


def test_factorize_matches_sympy():
    for n in (5 ** 7 - 1, 11 ** 5 - 1, 3 ** 10 - 1, 2 ** 61 - 2):
        assert factorize(n) == sympy.factorint(n)


def test_inverse_in_extension():
    desc = FieldDescriptor.create(11, 1, 5)
    g = desc.gen()
    for e in (1, 2, 77, 1000):
        y = g ** e
        assert (y * y.inverse()).is_one()
