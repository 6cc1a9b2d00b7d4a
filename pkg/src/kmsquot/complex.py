"""Group closure, coset complexes, vertex links and their spectra."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .errors import CapExceeded, NotClosed, NotConverged, UnknownVertex
from .fields import GF
from .matrices import (
    MatFq,
    SymplecticForm,
    is_symplectic_batch,
    pack_keys,
    unpack_keys,
)

log = logging.getLogger(__name__)

DEFAULT_CAP = 20_000_000
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000
DENSE_MAX_NODES = 5000
CHUNK = 1 << 17
TYPES = ("a", "b", "c")


def _isin_sorted(needles: np.ndarray, hay: np.ndarray) -> np.ndarray:
    if hay.size == 0:
        return np.zeros(needles.shape, dtype=bool)
    idx = np.searchsorted(hay, needles)
    idx[idx == hay.size] = 0
    return hay[idx] == needles


def _key_hex(key) -> str:
    if isinstance(key, (bytes, np.bytes_)):
        return bytes(key).hex()
    return f"{int(key):x}"


# ---- group enumeration -------------------------------------------------------------

@dataclass
class GroupEnumeration:
    """Sorted packed keys of a finitely generated matrix group."""

    keys: np.ndarray
    generators: list
    cap: int
    closed: bool
    F: GF = field(repr=False, default=None)
    n: int = 0

    @property
    def size(self) -> int:
        return int(self.keys.size)

    def __len__(self):
        return self.size

    def index_of(self, keys: np.ndarray) -> np.ndarray:
        """Positions of keys in the sorted store; raises KeyError for strangers."""
        idx = np.searchsorted(self.keys, keys)
        idx[idx == self.keys.size] = 0
        if not np.all(self.keys[idx] == keys):
            raise KeyError("element outside the enumerated group")
        return idx

    def matrices(self, idx=None) -> np.ndarray:
        keys = self.keys if idx is None else self.keys[idx]
        return unpack_keys(self.F, keys, self.n)

    def contains(self, X: MatFq) -> bool:
        key = pack_keys(self.F, X.a[None])
        return bool(_isin_sorted(key, self.keys)[0])

    def right_mult_index(self, h: MatFq, chunk: int = CHUNK) -> np.ndarray:
        """For every element g (by index), the index of g*h."""
        out = np.empty(self.size, dtype=np.int64)
        for s in range(0, self.size, chunk):
            mats = unpack_keys(self.F, self.keys[s:s + chunk], self.n)
            out[s:s + chunk] = self.index_of(pack_keys(self.F, self.F.matmul(mats, h.a)))
        return out

    def all_symplectic(self, form: SymplecticForm, chunk: int = CHUNK) -> bool:
        for s in range(0, self.size, chunk):
            mats = unpack_keys(self.F, self.keys[s:s + chunk], self.n)
            if not is_symplectic_batch(self.F, mats, form).all():
                return False
        return True


def bfs_closure(generators: Sequence[MatFq], cap: int = DEFAULT_CAP,
                inverses: bool = True, chunk: int = CHUNK) -> GroupEnumeration:
    """Breadth-first closure of {I} under right multiplication by the generators.

    Inverse generators are included by default; for a finite group this only
    shortens the search. Raises CapExceeded carrying the partial enumeration.
    """
    if not generators:
        raise ValueError("need at least one generator")
    F, n = generators[0].F, generators[0].n
    gens = list(generators)
    if inverses:
        gens += [g.inv() for g in generators]
    G = np.unique(np.stack([g.a for g in gens]), axis=0)
    visited = pack_keys(F, np.eye(n, dtype=np.int64)[None])
    frontier = visited
    depth = 0
    while frontier.size:
        cands = []
        for s in range(0, frontier.size, chunk):
            mats = unpack_keys(F, frontier[s:s + chunk], n)
            prod = F.matmul(mats[:, None], G[None]).reshape(-1, n, n)
            cands.append(np.unique(pack_keys(F, prod)))
        new = np.unique(np.concatenate(cands))
        new = new[~_isin_sorted(new, visited)]
        depth += 1
        if visited.size + new.size > cap:
            merged = np.sort(np.concatenate([visited, new[:max(0, cap - visited.size)]]))
            raise CapExceeded(f"closure exceeds cap {cap} at depth {depth}",
                              GroupEnumeration(merged, list(generators), cap, False, F, n))
        visited = np.sort(np.concatenate([visited, new]))
        frontier = new
        log.debug("bfs depth %d: +%d -> %d", depth, new.size, visited.size)
    return GroupEnumeration(visited, list(generators), cap, True, F, n)


def subgroup_generators(gen, excluded: str) -> list[MatFq]:
    """Generators of H_T = <V_i(basis) : i != T>."""
    F = gen.F
    basis = [F.p ** j for j in range(F.r)]
    return [gen.V(ch, b) for ch in TYPES if ch != excluded for b in basis]


# ---- coset complex -----------------------------------------------------------------

@dataclass
class CosetComplexData:
    """Vertices G/H_a, G/H_b, G/H_c and triangles {gH_a, gH_b, gH_c}.

    ``labels[t][i]`` is the local vertex id of element i's coset of type t;
    ``canonical[t][v]`` is the minimum packed key in vertex v's coset.
    """

    group: GroupEnumeration
    labels: dict
    canonical: dict
    subgroup_orders: dict
    triangles: np.ndarray
    triple_order: int

    def vertex_count(self, t: str) -> int:
        return int(self.canonical[t].size)

    @property
    def offsets(self) -> dict:
        out, acc = {}, 0
        for t in TYPES:
            out[t] = acc
            acc += self.vertex_count(t)
        return out

    @property
    def n_vertices(self) -> int:
        return sum(self.vertex_count(t) for t in TYPES)

    def vertex(self, vid: int) -> tuple[str, int]:
        for t in TYPES:
            off = self.offsets[t]
            if off <= vid < off + self.vertex_count(t):
                return t, vid - off
        raise UnknownVertex(vid)

    def skeleton(self) -> np.ndarray:
        """Deduplicated undirected edges (global vertex ids, smaller first)."""
        off = self.offsets
        T = self.triangles + np.array([off[t] for t in TYPES])
        packed = np.concatenate([(T[:, 0] << 32) | T[:, 1], (T[:, 0] << 32) | T[:, 2],
                                 (T[:, 1] << 32) | T[:, 2]])
        u = np.unique(packed)
        return np.stack([u >> 32, u & 0xFFFFFFFF], axis=1)


def coset_complex(G: GroupEnumeration, subgroups: dict) -> CosetComplexData:
    """Build CC(G, {H_t}) for subgroups given as {type: generator list}.

    Left cosets gH are the connected components of g -> g h over the
    generators h of H; each coset is labeled by its minimum packed key.
    """
    if not G.closed:
        raise NotClosed("group enumeration is not closed")
    right = {}
    labels, canonical, orders = {}, {}, {}
    N = G.size
    for t in TYPES:
        cols, rows = [], []
        for h in subgroups[t]:
            kh = h.key()
            if kh not in right:
                right[kh] = G.right_mult_index(h)
            rows.append(np.arange(N))
            cols.append(right[kh])
        A = sp.csr_matrix((np.ones(N * len(cols), dtype=np.int8),
                           (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
        _, comp = connected_components(A, directed=True, connection="weak")
        # minimum index of each component is its minimum key, since keys are sorted
        first = np.full(comp.max() + 1, N, dtype=np.int64)
        np.minimum.at(first, comp, np.arange(N))
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        labels[t] = rank[comp]
        canonical[t] = G.keys[first[order]]
        sizes = np.bincount(labels[t])
        if not np.all(sizes == sizes[0]):
            raise RuntimeError(f"cosets of type {t} have unequal sizes")
        orders[t] = int(sizes[0])
        del A
    tri = np.stack([labels[t] for t in TYPES], axis=1)
    packed = (tri[:, 0] << 42) | (tri[:, 1] << 21) | tri[:, 2]
    if max(canonical[t].size for t in TYPES) >= 1 << 21:
        packed = None
    if packed is not None:
        u = np.unique(packed)
        triangles = np.stack([u >> 42, (u >> 21) & ((1 << 21) - 1), u & ((1 << 21) - 1)], axis=1)
    else:
        triangles = np.unique(tri, axis=0)
    triple = N // triangles.shape[0]
    return CosetComplexData(G, labels, canonical, orders, triangles, triple)


# ---- link graphs ---------------------------------------------------------------------

@dataclass
class LinkGraph:
    """Bipartite graph between the two remaining types around a center vertex."""

    center: str
    sides: tuple[int, int]
    edges: np.ndarray  # (m, 2): left id, right id
    lambda2: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.sides[0] + self.sides[1]

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> sp.csr_matrix:
        n0, n = self.sides[0], self.n_nodes
        u = self.edges[:, 0]
        v = self.edges[:, 1] + n0
        data = np.ones(2 * u.size)
        return sp.csr_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))

    def degrees(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.bincount(self.edges[:, 0], minlength=self.sides[0]),
                np.bincount(self.edges[:, 1], minlength=self.sides[1]))

    def is_biregular(self) -> bool:
        d0, d1 = self.degrees()
        return bool(d0.min() == d0.max() and d1.min() == d1.max())

    def is_connected(self) -> bool:
        return connected_components(self.adjacency(), directed=False)[0] == 1


def _dense_ids(labels: np.ndarray) -> tuple[np.ndarray, int]:
    uniq, inv = np.unique(labels, return_inverse=True)
    return inv.reshape(-1), uniq.size


def vertex_link(cx: CosetComplexData, vid: int) -> LinkGraph:
    """Link of a global vertex id: triangles through it, minus the vertex."""
    t, local = cx.vertex(vid)
    others = [s for s in TYPES if s != t]
    members = np.flatnonzero(cx.labels[t] == local)
    pairs = np.unique(np.stack([cx.labels[others[0]][members],
                                cx.labels[others[1]][members]], axis=1), axis=0)
    left, n0 = _dense_ids(pairs[:, 0])
    right, n1 = _dense_ids(pairs[:, 1])
    return LinkGraph(f"{t}:{local}", (n0, n1), np.stack([left, right], axis=1),
                     meta={"type": t, "others": "".join(others)})


def _coset_min_labels(F: GF, n: int, H: np.ndarray, K: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """For each h in H (stack), the minimum packed key of the coset h K."""
    out = []
    for s in range(0, H.shape[0], chunk):
        prod = F.matmul(H[s:s + chunk, None], K[None]).reshape(-1, n, n)
        keys = pack_keys(F, prod).reshape(-1, K.shape[0])
        # np.minimum has no loop for bytes keys; sorting does
        out.append(np.sort(keys, axis=1)[:, 0])
    return np.concatenate(out)


def local_link(gen, center: str, cap: int = DEFAULT_CAP) -> LinkGraph:
    """Link of the identity coset H_center, computed inside H_center alone.

    Triangles through H_T are {hH_T, hH_s, hH_u} for h in H_T; hH_s meets H_T
    in h(H_T cap H_s), so that coset is labeled by min key of h(H_T cap H_s).
    """
    F, n = gen.F, gen.n
    others = [s for s in TYPES if s != center]
    H = bfs_closure(subgroup_generators(gen, center), cap)
    subs = {s: bfs_closure(subgroup_generators(gen, s), cap) for s in others}
    Hm = H.matrices()
    lab, inter_sizes = [], []
    for s in others:
        K = np.intersect1d(H.keys, subs[s].keys)
        inter_sizes.append(int(K.size))
        lab.append(_coset_min_labels(F, n, Hm, unpack_keys(F, K, n)))
    left, n0 = _dense_ids(lab[0])
    right, n1 = _dense_ids(lab[1])
    edges = np.unique(np.stack([left, right], axis=1), axis=0)
    return LinkGraph(center, (n0, n1), edges,
                     meta={"type": center, "others": "".join(others), "H_order": H.size,
                           "intersections": inter_sizes})


# ---- spectra ---------------------------------------------------------------------------

def _normalized(A: sp.csr_matrix) -> tuple[sp.csr_matrix, np.ndarray]:
    d = np.asarray(A.sum(axis=1)).ravel()
    if np.any(d == 0):
        raise ValueError("graph has isolated vertices")
    s = 1.0 / np.sqrt(d)
    return sp.diags(s) @ A @ sp.diags(s), np.sqrt(d)


@dataclass
class Spectrum:
    lambda2: float
    lambda_min: float
    method: str
    iterations: int = 0

    @property
    def bipartite_gap(self) -> float:
        return abs(self.lambda_min + 1.0)


def spectrum_dense(A: sp.csr_matrix) -> Spectrum:
    if A.shape[0] > DENSE_MAX_NODES:
        raise ValueError(f"dense path limited to {DENSE_MAX_NODES} nodes")
    M, _ = _normalized(A)
    vals = np.linalg.eigvalsh(M.toarray())
    return Spectrum(float(vals[-2]), float(vals[0]), "dense")


def spectrum_iterative(A: sp.csr_matrix, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER, rng_seed: int = 0) -> Spectrum:
    """Power iteration on (I + M)/2 orthogonal to the top eigenvector sqrt(d)."""
    M, sd = _normalized(A)
    top = sd / np.linalg.norm(sd)
    rng = np.random.default_rng(rng_seed)
    v = rng.standard_normal(A.shape[0])
    v -= top * (top @ v)
    v /= np.linalg.norm(v)
    prev = prev_diff = None
    for it in range(1, max_iter + 1):
        w = 0.5 * (v + M @ v)
        w -= top * (top @ w)
        est = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            est = 0.0
            break
        v = w / nrm
        if prev is not None:
            # differences in lambda units; the geometric tail bounds the remaining error
            diff = 2 * abs(est - prev)
            ratio = min(diff / prev_diff, 0.9999) if prev_diff else 0.9999
            if diff < tol and diff * ratio / (1 - ratio) < tol:
                break
            prev_diff = diff
        prev = est
    else:
        raise NotConverged(f"power iteration did not settle within {max_iter} steps",
                           2 * est - 1)
    lam2 = 2 * est - 1
    # bipartiteness certificate: signed sqrt-degree vector
    side = _two_coloring(A)
    if side is None:
        lam_min = float("nan")
    else:
        u = top * np.where(side, -1.0, 1.0)
        lam_min = float(u @ (M @ u))
    return Spectrum(lam2, lam_min, "iterative", it)


def _two_coloring(A: sp.csr_matrix) -> Optional[np.ndarray]:
    n = A.shape[0]
    B = sp.bmat([[None, A], [A, None]]).tocsr()
    ncomp, comp = connected_components(B, directed=False)
    if np.any(comp[:n] == comp[n:]):
        return None
    # vertex i is on side 0 iff its copy sits in the component of vertex 0's copy
    return comp[:n] != comp[0]


def second_eigenvalue(graph, method: str = "dense", tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, rng_seed: int = 0) -> float:
    A = graph.adjacency() if isinstance(graph, LinkGraph) else sp.csr_matrix(graph)
    if connected_components(A, directed=False)[0] != 1:
        raise ValueError("graph is not connected")
    if method == "dense":
        return spectrum_dense(A).lambda2
    if method == "iterative":
        return spectrum_iterative(A, tol, max_iter, rng_seed).lambda2
    raise ValueError(f"unknown method {method!r}")


def hdx_bound(q: int) -> float:
    return (math.sqrt(2 * q) + 2) / (q - 2)


def skeleton_spectrum(edges: np.ndarray, n: int, tol: float = DEFAULT_TOL,
                      rng_seed: int = 0) -> tuple[float, int]:
    """Second-largest normalized eigenvalue of the 1-skeleton and its component count."""
    u, v = edges[:, 0], edges[:, 1]
    A = sp.csr_matrix((np.ones(2 * u.size), (np.concatenate([u, v]), np.concatenate([v, u]))),
                      shape=(n, n))
    ncomp = connected_components(A, directed=False)[0]
    M, sd = _normalized(A)
    if n <= DENSE_MAX_NODES:
        return float(np.linalg.eigvalsh(M.toarray())[-2]), ncomp
    v0 = np.random.default_rng(rng_seed).standard_normal(n)
    vals = eigsh(M, k=2, which="LA", tol=tol, v0=v0, return_eigenvectors=False)
    return float(np.sort(vals)[0]), ncomp


# ---- reports -------------------------------------------------------------------------

@dataclass
class LinkRow:
    link_id: str
    nodes: int
    edges: int
    lambda2: float
    lambda2_iterative: Optional[float]
    bipartite_gap: float
    bound: float
    passed: bool
    connected: bool
    biregular: bool


@dataclass
class HdxReport:
    q: int
    bound: float
    vacuous: bool
    rows: list
    skeleton_lambda2: Optional[float] = None
    skeleton_components: Optional[int] = None
    tol: float = DEFAULT_TOL

    @property
    def max_lambda2(self) -> float:
        return max(r.lambda2 for r in self.rows)

    @property
    def solvers_agree(self) -> bool:
        return all(r.lambda2_iterative is None or abs(r.lambda2 - r.lambda2_iterative) <= 10 * self.tol
                   for r in self.rows)

    @property
    def ok(self) -> bool:
        links = all(r.passed and r.connected for r in self.rows)
        skel = self.skeleton_lambda2 is None or (self.skeleton_lambda2 < 1 and self.skeleton_components == 1)
        return links and skel and self.solvers_agree

    def spectra_csv(self) -> str:
        lines = ["link_id,nodes,edges,lambda2,bound,pass"]
        for r in self.rows:
            lines.append(f"{r.link_id},{r.nodes},{r.edges},{r.lambda2:.12f},{r.bound:.12f},"
                         f"{'true' if r.passed else 'false'}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = [f"q {self.q}",
               f"bound {self.bound:.12f}",
               f"bound_vacuous {'yes' if self.vacuous else 'no'}",
               f"tolerance {self.tol:g}"]
        for r in self.rows:
            it = "-" if r.lambda2_iterative is None else f"{r.lambda2_iterative:.12f}"
            out.append(f"link {r.link_id} nodes={r.nodes} edges={r.edges} lambda2_dense={r.lambda2:.12f} "
                       f"lambda2_iterative={it} bipartite_gap={r.bipartite_gap:.3e} "
                       f"connected={r.connected} biregular={r.biregular} "
                       f"status={'pass' if r.passed else 'fail'}")
        out.append(f"max_lambda2 {self.max_lambda2:.12f}")
        out.append(f"solvers_agree {self.solvers_agree}")
        if self.skeleton_lambda2 is not None:
            out.append(f"skeleton lambda2={self.skeleton_lambda2:.12f} components={self.skeleton_components} "
                       f"status={'pass' if self.skeleton_lambda2 < 1 and self.skeleton_components == 1 else 'fail'}")
        out.append(f"overall {'pass' if self.ok else 'fail'}")
        return "\n".join(out) + "\n"


def link_row(link: LinkGraph, q: int, tol: float = DEFAULT_TOL, rng_seed: int = 0,
             iterative: bool = True) -> LinkRow:
    A = link.adjacency()
    connected = connected_components(A, directed=False)[0] == 1
    if link.n_nodes <= DENSE_MAX_NODES:
        dense = spectrum_dense(A)
        it = spectrum_iterative(A, tol, rng_seed=rng_seed).lambda2 if iterative else None
        lam, gap = dense.lambda2, dense.bipartite_gap
    else:
        s = spectrum_iterative(A, tol, rng_seed=rng_seed)
        lam, gap, it = s.lambda2, s.bipartite_gap, None
    link.lambda2 = lam
    bound = hdx_bound(q)
    return LinkRow(f"link-{link.center}", link.n_nodes, link.n_edges, lam, it, gap, bound,
                   lam <= bound + tol, bool(connected), link.is_biregular())


def hdx_report(links: Sequence[LinkGraph], q: int, tol: float = DEFAULT_TOL, rng_seed: int = 0,
               skeleton: Optional[tuple[float, int]] = None) -> HdxReport:
    bound = hdx_bound(q)
    rows = [link_row(l, q, tol, rng_seed) for l in links]
    rep = HdxReport(q, bound, bound >= 1, rows, tol=tol)
    if skeleton is not None:
        rep.skeleton_lambda2, rep.skeleton_components = skeleton
    return rep


# ---- exports ---------------------------------------------------------------------------

def write_vertices(cx: CosetComplexData, path) -> None:
    off = cx.offsets
    with open(path, "w") as fh:
        fh.write("id\ttype\tcanonical_key\n")
        for t in TYPES:
            for i, key in enumerate(cx.canonical[t]):
                fh.write(f"{off[t] + i}\t{t}\t{_key_hex(key)}\n")


def write_triangles(cx: CosetComplexData, path, chunk: int = 1 << 20) -> None:
    off = np.array([cx.offsets[t] for t in TYPES])
    with open(path, "w") as fh:
        fh.write("a\tb\tc\n")
        for s in range(0, cx.triangles.shape[0], chunk):
            T = cx.triangles[s:s + chunk] + off
            fh.write("\n".join(f"{x}\t{y}\t{z}" for x, y, z in T.tolist()))
            fh.write("\n")


__all__ = [
    "CosetComplexData",
    "GroupEnumeration",
    "HdxReport",
    "LinkGraph",
    "bfs_closure",
    "coset_complex",
    "hdx_bound",
    "hdx_report",
    "local_link",
    "second_eigenvalue",
    "skeleton_spectrum",
    "spectrum_dense",
    "spectrum_iterative",
    "subgroup_generators",
    "vertex_link",
]
