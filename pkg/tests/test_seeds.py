import pytest

from conftest import GOLDEN, seed_for
from kmsquot.errors import ConfigError, FormatError
from kmsquot.fields import FieldDescriptor
from kmsquot.matrices import MatFq, SymplecticForm, is_symplectic
from kmsquot.seeds import (
    GeneratorTriple,
    build_seed,
    seed_from_text,
    seed_to_text,
    smallest_admissible_x,
    validate_parameters,
    verify_conditions,
)

GRID = [(5, 7), (7, 5), (11, 5)]


@pytest.mark.parametrize("p,r,k,variant,hypothesis", [
    (3, 2, 2, "sl", "k > 3"),
    (5, 1, 5, "sl", "distinct primes"),
    (4, 1, 5, "sl", "p prime"),
    (2, 3, 5, "sl", "p > 2"),
    (3, 1, 5, "sl", "q > 3"),
    (5, 1, 9, "sp", "k prime"),
    (5, 1, 1, "sl", "k > 3"),
    (5, 1, 7, "gl", "variant"),
])
def test_invalid_parameters_name_the_hypothesis(p, r, k, variant, hypothesis):
    with pytest.raises(ConfigError) as exc:
        validate_parameters(p, r, k, variant)
    assert exc.value.hypothesis == hypothesis


def test_valid_parameters_pass():
    validate_parameters(5, 1, 7, "sl")
    validate_parameters(3, 2, 5, "sp")
    validate_parameters(5, 1, 1, "sp")


@pytest.mark.parametrize("p,k", GRID)
@pytest.mark.parametrize("variant", ["sl", "sp"])
def test_seed_conditions_all_pass(p, k, variant):
    rep = verify_conditions(seed_for(p, k, variant))
    assert rep.ok, rep.to_text()
    assert not [r for r in rep.results if r.status == "fail"]


@pytest.mark.parametrize("p,k", GRID)
@pytest.mark.parametrize("variant", ["sl", "sp"])
def test_seed_matches_golden_file(p, k, variant):
    path = GOLDEN / f"p{p}r1k{k}-{variant}.seed"
    assert seed_to_text(seed_for(p, k, variant)) == path.read_text()
    again = seed_from_text(path.read_text())
    assert (again.M_a, again.M_b, again.M_c) == (seed_for(p, k, variant).M_a,
                                                 seed_for(p, k, variant).M_b,
                                                 seed_for(p, k, variant).M_c)


def test_extension_base_seed():
    seed = seed_for(3, 5, "sl", r=2)
    assert verify_conditions(seed).ok
    assert seed_from_text(seed_to_text(seed)).M_c == seed.M_c


def test_sl_seed_shape():
    seed = seed_for(7, 5, "sl")
    F = seed.F
    x = smallest_admissible_x(F)
    assert x == 2
    X = seed.M_a @ seed.M_b @ seed.M_a.inv() @ seed.M_b.inv()
    assert X == MatFq.diag([x, F.inv(x), 1, 1, 1], F)
    assert seed.S == seed.N @ seed.M_c


def test_sp_seed_shape():
    seed = seed_for(7, 5, "sp")
    F = seed.F
    assert seed.N == MatFq.identity(5, F).scale(F.neg(2))
    for M in (seed.M_a, seed.M_b, seed.M_c):
        assert M.is_symmetric()
    gen = GeneratorTriple(seed)
    om = gen.omega()
    assert isinstance(om, SymplecticForm)
    for lam in range(F.q):
        for ch in "abc":
            assert is_symplectic(gen.V(ch, lam), om)


def test_generator_blocks():
    seed = seed_for(5, 7, "sl")
    gen = GeneratorTriple(seed)
    k = seed.k
    Va = gen.V_a(3)
    assert Va.block(1, 4, k) == seed.M_a.scale(3)
    assert Va.block(2, 3, k) == seed.M_a.scale(3)
    Vb = gen.V_b(2)
    assert Vb.block(2, 1, k) == seed.M_b.scale(2)
    assert Vb.block(3, 4, k) == -seed.M_b.scale(2)
    assert gen.V_c(4).block(4, 2, k) == seed.M_c.scale(4)
    assert gen.V_a(0).is_identity()


@pytest.mark.parametrize("text,fragment", [
    ("garbage\n", "not a seed file"),
    ("kmsquot-seed v1\ndescriptor 7^1^5:0,1:2,0,0,0,2,1\n", "truncated"),
])
def test_corrupted_seed_files(text, fragment):
    with pytest.raises(FormatError, match=fragment):
        seed_from_text(text)


def test_tampered_matrix_block_is_rejected():
    text = (GOLDEN / "p7r1k5-sl.seed").read_text()
    lines = text.splitlines()
    idx = lines.index("M_b")
    lines[idx + 2] = "1 2 3"
    with pytest.raises(FormatError):
        seed_from_text("\n".join(lines) + "\n")


def test_tampered_seed_fails_conditions():
    seed = seed_for(7, 5, "sl")
    bad = seed.replace(M_c=MatFq.identity(5, seed.F))
    rep = verify_conditions(bad)
    assert not rep.ok
    assert rep.status("singer") == "fail"
