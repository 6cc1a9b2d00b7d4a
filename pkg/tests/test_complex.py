import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from conftest import gen_for
from kmsquot.complex import (
    LinkGraph,
    bfs_closure,
    coset_complex,
    hdx_bound,
    hdx_report,
    local_link,
    second_eigenvalue,
    skeleton_spectrum,
    spectrum_dense,
    spectrum_iterative,
    vertex_link,
)
from kmsquot.errors import CapExceeded, NotClosed, UnknownVertex
from kmsquot.fields import GF
from kmsquot.matrices import MatFq

F3, F5 = GF(3), GF(5)


def brute_closure(gens):
    seen = {MatFq.identity(gens[0].n, gens[0].F).key()}
    todo = [MatFq.identity(gens[0].n, gens[0].F)]
    while todo:
        g = todo.pop()
        for h in gens:
            x = g @ h
            if x.key() not in seen:
                seen.add(x.key())
                todo.append(x)
    return seen


def invertible(F, n):
    return st.lists(st.integers(0, F.q - 1), min_size=n * n, max_size=n * n).map(
        lambda v: MatFq(np.array(v).reshape(n, n), F)).filter(lambda M: M.is_invertible())


def test_trivial_and_sl2():
    I = MatFq.identity(2, F5)
    assert bfs_closure([I]).size == 1
    u = MatFq([[1, 1], [0, 1]], F5)
    l = MatFq([[1, 0], [1, 1]], F5)
    G = bfs_closure([u, l])
    assert G.closed and G.size == 120
    assert G.contains(u @ l) and not G.contains(MatFq([[2, 0], [0, 1]], F5))


@given(st.lists(invertible(F3, 2), min_size=1, max_size=3))
def test_bfs_matches_brute_force(gens):
    G = bfs_closure(gens)
    assert G.size == len(brute_closure(gens))
    assert all(G.contains(g) for g in gens)
    # independent of generator order
    assert np.array_equal(bfs_closure(gens[::-1]).keys, G.keys)


def test_cap_exceeded_carries_partial():
    u = MatFq([[1, 1], [0, 1]], F5)
    l = MatFq([[1, 0], [1, 1]], F5)
    with pytest.raises(CapExceeded) as exc:
        bfs_closure([u, l], cap=50)
    part = exc.value.enumeration
    assert not part.closed and part.size <= 50
    with pytest.raises(NotClosed):
        coset_complex(part, {"a": [u], "b": [l], "c": [u]})


def test_toy_complex_with_full_subgroups():
    u = MatFq([[1, 1], [0, 1]], F5)
    l = MatFq([[1, 0], [1, 1]], F5)
    G = bfs_closure([u, l])
    cx = coset_complex(G, {"a": [u, l], "b": [u, l], "c": [u, l]})
    assert cx.n_vertices == 3 and cx.triangles.shape == (1, 3)
    link = vertex_link(cx, 0)
    assert link.sides == (1, 1) and link.n_edges == 1
    with pytest.raises(UnknownVertex):
        cx.vertex(3)


@pytest.fixture(scope="module")
def sl2_complex():
    # SL2(5) with three proper subgroups: upper, lower and diagonal-times-upper
    u = MatFq([[1, 1], [0, 1]], F5)
    l = MatFq([[1, 0], [1, 1]], F5)
    d = MatFq([[2, 0], [0, 3]], F5)
    G = bfs_closure([u, l])
    return G, coset_complex(G, {"a": [u], "b": [l], "c": [d, u]})


def test_complex_invariants(sl2_complex):
    G, cx = sl2_complex
    assert cx.subgroup_orders == {"a": 5, "b": 5, "c": 20}
    for t in "abc":
        assert cx.vertex_count(t) * cx.subgroup_orders[t] == G.size
        # labels agree with explicit cosets
        blocks = np.bincount(cx.labels[t])
        assert set(blocks) == {cx.subgroup_orders[t]}
    assert sum(cx.vertex_count(t) * cx.subgroup_orders[t] for t in "abc") == 3 * G.size
    assert cx.triangles.shape[0] * cx.triple_order == G.size
    assert len({tuple(r) for r in cx.triangles}) == cx.triangles.shape[0]
    # every triangle's vertices meet: the triple comes from a common element
    idx = np.random.default_rng(0).integers(0, G.size, 30)
    tri = {tuple(r) for r in cx.triangles.tolist()}
    for i in idx:
        assert tuple(int(cx.labels[t][i]) for t in "abc") in tri


def test_canonical_key_is_coset_minimum(sl2_complex):
    G, cx = sl2_complex
    u = MatFq([[1, 1], [0, 1]], F5)
    for v in range(cx.vertex_count("a")):
        members = np.flatnonzero(cx.labels["a"] == v)
        g = MatFq(G.matrices([members[0]])[0], F5)
        coset = {(g @ MatFq([[1, s], [0, 1]], F5)).key() for s in range(5)}
        assert len(coset) == 5
        assert set(G.keys[members].tolist()) == coset
        assert cx.canonical["a"][v] == min(coset)
    assert u.key() in set(G.keys.tolist())


def test_skeleton_edges_are_unique(sl2_complex):
    _, cx = sl2_complex
    E = cx.skeleton()
    assert np.all(E[:, 0] < E[:, 1])
    assert len({tuple(e) for e in E.tolist()}) == E.shape[0]
    lam, comps = skeleton_spectrum(E, cx.n_vertices)
    assert comps == 1 and lam < 1


def complete_bipartite(n, m):
    edges = np.array([(i, j) for i in range(n) for j in range(m)])
    return LinkGraph("x", (n, m), edges)


def test_known_spectra():
    assert abs(second_eigenvalue(complete_bipartite(4, 4))) < 1e-12
    assert abs(second_eigenvalue(complete_bipartite(3, 5), "iterative")) < 1e-9
    C4 = complete_bipartite(2, 2)  # the 4-cycle
    vals = np.linalg.eigvalsh(C4.adjacency().toarray() / 2)
    assert np.allclose(vals, [-1, 0, 0, 1])
    s = spectrum_dense(C4.adjacency())
    assert abs(s.lambda2) < 1e-12 and s.bipartite_gap < 1e-12


def test_cycle_spectrum_iterative():
    n = 10
    A = sp.csr_matrix((np.ones(2 * n), (np.r_[np.arange(n), (np.arange(n) + 1) % n],
                                        np.r_[(np.arange(n) + 1) % n, np.arange(n)])), shape=(n, n))
    s = spectrum_iterative(A, 1e-10)
    assert abs(s.lambda2 - math.cos(2 * math.pi / n)) < 1e-8
    assert abs(s.lambda_min + 1) < 1e-12


@given(st.integers(0, 10_000))
def test_dense_and_iterative_agree(seed):
    rng = np.random.default_rng(seed)
    n0, n1 = rng.integers(4, 12, 2)
    mask = rng.random((n0, n1)) < 0.5
    mask[np.arange(n0), np.arange(n0) % n1] = True
    mask[np.arange(n1) % n0, np.arange(n1)] = True
    g = LinkGraph("r", (int(n0), int(n1)), np.argwhere(mask))
    if not g.is_connected():
        return
    d = second_eigenvalue(g, "dense")
    it = second_eigenvalue(g, "iterative", tol=1e-11, max_iter=10 ** 6)
    assert abs(d - it) < 1e-6


def test_disconnected_graph_rejected():
    g = LinkGraph("x", (2, 2), np.array([[0, 0], [1, 1]]))
    with pytest.raises(ValueError):
        second_eigenvalue(g)


def test_bound_formula_and_vacuous_flag():
    assert hdx_bound(5) == pytest.approx((math.sqrt(10) + 2) / 3)
    assert hdx_bound(11) == pytest.approx(0.7433795, abs=1e-7)
    assert hdx_bound(13) == pytest.approx(0.6453654, abs=1e-7)
    assert hdx_report([complete_bipartite(3, 3)], 5).vacuous
    assert not hdx_report([complete_bipartite(3, 3)], 11).vacuous


@pytest.mark.parametrize("variant", ["sl", "sp"])
def test_local_links_at_q5(variant):
    gen = gen_for(5, 7, variant)
    q = 5
    for center, nodes in (("a", 2 * q ** 3), ("b", 2 * q ** 3), ("c", 2 * q ** 2)):
        link = local_link(gen, center)
        assert link.n_nodes == nodes
        assert link.n_edges == (q ** 4 if center != "c" else q ** 3)
        assert link.is_biregular() and link.is_connected()
        expected = math.sqrt(2 / q) if center != "c" else 1 / math.sqrt(q)
        assert second_eigenvalue(link) == pytest.approx(expected, abs=1e-9)


def test_report_text_and_csv():
    gen = gen_for(5, 7, "sl")
    rep = hdx_report([local_link(gen, t) for t in "abc"], 5)
    assert rep.ok and rep.solvers_agree and rep.vacuous
    assert rep.spectra_csv().splitlines()[0] == "link_id,nodes,edges,lambda2,bound,pass"
    assert "bound_vacuous yes" in rep.to_text()
