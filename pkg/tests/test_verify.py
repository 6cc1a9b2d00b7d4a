import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import gen_for, seed_for
from kmsquot.matrices import MatFq, SymplecticForm, commutator, is_symplectic
from kmsquot.verify import (
    RELATORS,
    RootElements,
    WordOracle,
    check_chevalley_commutators,
    check_intersection_property,
    check_local_injectivity,
    check_presentation_relators,
    closed_form,
    closed_form_stack,
    enumerate_local_images,
    evaluate_relator,
    group_order,
    negative_controls,
    replay_proof_identities,
    run_verification,
)

SEEDS = [(5, 7, "sl"), (7, 5, "sp"), (13, 5, "sl"), (13, 5, "sp")]


def params(q, d):
    return st.tuples(*[st.integers(0, q - 1)] * d)


@pytest.mark.parametrize("case", SEEDS, ids=lambda c: "p{}k{}-{}".format(*c))
@pytest.mark.parametrize("label,d", [("ab", 3), ("ac", 4), ("bc", 4)])
@given(data=st.data())
def test_closed_form_equals_generator_word(case, label, d, data):
    gen = gen_for(*case)
    t = data.draw(params(gen.F.q, d))
    assert closed_form(gen.seed, label, t) == WordOracle(gen).local(label, t)


@pytest.mark.parametrize("case", SEEDS, ids=lambda c: "p{}k{}-{}".format(*c))
@given(data=st.data())
def test_chevalley_relations_random(case, data):
    gen = gen_for(*case)
    F = gen.F
    s, t = data.draw(params(F.q, 2))
    x = RootElements(gen.seed)
    mul, neg = F.mul, F.neg
    assert commutator(gen.V_a(s), gen.V_b(t)) == x.ab(mul(s, t))
    assert commutator(gen.V_c(s), gen.V_a(t)) == x.ac(neg(mul(s, t))) @ x.a2c(neg(mul(s, mul(t, t))))
    assert commutator(gen.V_c(s), gen.V_b(t)) == x.bc(mul(s, t)) @ x.b2c(mul(s, mul(t, t)))
    assert commutator(gen.V_a(s), x.ac(t)) == x.a2c(mul(F.neg(2), mul(s, t)))
    assert commutator(gen.V_b(s), x.bc(t)) == x.b2c(mul(F.neg(2), mul(s, t)))


@pytest.mark.parametrize("p,k", [(7, 5), (13, 5)])
@given(data=st.data())
def test_local_images_are_symplectic(p, k, data):
    gen = gen_for(p, k, "sp")
    form = SymplecticForm.standard(2 * k, gen.F)
    label, d = data.draw(st.sampled_from([("ab", 3), ("ac", 4), ("bc", 4)]))
    assert is_symplectic(closed_form(gen.seed, label, data.draw(params(gen.F.q, d))), form)


@given(data=st.data())
def test_closed_form_is_a_homomorphism_on_u_ab(data):
    gen = gen_for(7, 5, "sl")
    F = gen.F
    l = data.draw(params(7, 3))
    m = data.draw(params(7, 3))
    # x_ab(l) x_ab(m) lies in the image and its coordinates add in the first two slots
    prod = closed_form(gen.seed, "ab", l) @ closed_form(gen.seed, "ab", m)
    keys = {closed_form(gen.seed, "ab", (F.add(l[0], m[0]), F.add(l[1], m[1]), t)) for t in range(7)}
    assert prod in keys


def test_stack_matches_scalar_closed_form():
    seed = seed_for(5, 7, "sp")
    P = np.array([[1, 2, 3, 4], [0, 0, 1, 0], [4, 4, 4, 4]])
    stack = closed_form_stack(seed, "bc", P)
    for row, M in zip(P, stack):
        assert np.array_equal(M, closed_form(seed, "bc", tuple(row)).a)


@pytest.mark.parametrize("case", [(5, 7, "sl"), (7, 5, "sp"), (11, 5, "sl")])
def test_relators_hold(case):
    recs = check_presentation_relators(gen_for(*case))
    assert {r.status for r in recs} == {"pass"}
    assert sum(r.id.startswith("relator.") for r in recs) == 11


def test_relators_extension_base_uses_basis():
    recs = check_presentation_relators(gen_for(3, 5, "sl", 2))
    assert all(r.status == "pass" for r in recs)
    assert any(r.id.startswith("relator.basis.") for r in recs)


def test_relator_detects_tampering():
    gen = gen_for(7, 5, "sl")
    mats = {"a": gen.Va1, "b": gen.Vb1, "c": gen.Vc1 @ gen.Va1}
    bad = [name for name, w in RELATORS if not evaluate_relator(w, mats, 7).is_identity()]
    assert bad


@pytest.mark.parametrize("case", [(5, 7, "sl"), (7, 5, "sp")])
def test_local_structure(case):
    gen = gen_for(*case)
    images = enumerate_local_images(gen)
    q = gen.F.q
    assert images["ab"].size == q ** 3
    assert images["ac"].size == images["bc"].size == q ** 4
    recs = check_local_injectivity(gen, images) + check_intersection_property(gen, images)
    statuses = {r.id: r.status for r in recs}
    assert statuses.pop("local.ab.literal_display") == "erratum"
    assert set(statuses.values()) == {"pass"}
    if case[2] == "sp":
        assert all(images[l].symplectic for l in images)


def test_chevalley_report_has_only_literal_errata():
    recs = check_chevalley_commutators(gen_for(5, 7, "sp"))
    for r in recs:
        assert r.status == ("erratum" if ".literal." in r.id else "pass"), r.id


@pytest.mark.parametrize("case", [(5, 7, "sl"), (7, 5, "sp"), (11, 5, "sl")])
def test_proof_identities(case):
    recs = replay_proof_identities(seed_for(*case), rng=np.random.default_rng(1))
    for r in recs:
        if r.id.endswith(".literal"):
            assert r.status == "erratum", r.id
        else:
            assert r.status in ("pass", "n/a"), (r.id, r.detail)


@pytest.mark.parametrize("case", [(5, 7, "sl"), (7, 5, "sl"), (7, 5, "sp"), (11, 5, "sp")])
def test_negative_controls_flag_exactly_their_clause(case):
    controls = negative_controls(seed_for(*case))
    assert len(controls) >= 2
    for c in controls:
        assert c.ok, (c.name, c.failed_main, c.expected_main)


def test_identity_replay_catches_a_wrong_seed():
    seed = seed_for(7, 5, "sl")
    F = seed.F
    bad = seed.replace(M_b=MatFq.diag([1, 2, 3, 4, 5], F))
    recs = replay_proof_identities(bad, rng=np.random.default_rng(0), n_random=5)
    assert any(r.status == "fail" for r in recs)


def test_group_orders():
    assert group_order("sp", 4, 5) == 9_360_000
    assert group_order("sl", 2, 5) == 120
    assert group_order("sp", 2, 7) == group_order("sl", 2, 7)


def test_report_is_deterministic_and_renders_witnesses():
    seed = seed_for(7, 5, "sp")
    a, wa = run_verification(seed, rng_seed=4, n_random=5).render()
    b, wb = run_verification(seed, rng_seed=4, n_random=5).render()
    assert a == b and wa == wb
    assert wa, "errata carry witnesses"
    for path, body in wa.items():
        assert path in a
        assert body.startswith("# witness for")
    assert "\tfail\t" in a  # envelope at the default budget
