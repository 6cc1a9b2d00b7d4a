"""Singer elements, self-dual normal bases and multiplication maps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FormatError, NotSinger, SearchExhausted
from .fields import (
    ExtFieldElement,
    FieldDescriptor,
    find_primitive,
    frobenius,
    is_primitive,
    prime_divisors,
    trace,
)
from .matrices import MatFq, RowSpace, _as_field, inverse_array, nullspace

log = logging.getLogger(__name__)

CENTRALIZER_CHECK_MAX_K = 7


@dataclass(frozen=True)
class SelfDualBasis:
    """Basis b_1..b_k of F_{q^k} over F_q with Tr(b_i b_j) = delta_ij."""

    elems: tuple[ExtFieldElement, ...]
    normal: bool
    generator: Optional[ExtFieldElement] = None

    def __post_init__(self):
        desc = self.elems[0].desc
        if len(self.elems) != desc.k:
            raise ValueError(f"basis needs {desc.k} elements, got {len(self.elems)}")
        gram = self.gram()
        if not gram.is_identity():
            raise ValueError("Gram matrix of the basis is not the identity")
        # columns are the power-basis coordinates of b_j
        cols = np.array([e.coeffs for e in self.elems], dtype=np.int64).T
        object.__setattr__(self, "_coord_inv", inverse_array(desc.field, cols))

    @property
    def desc(self) -> FieldDescriptor:
        return self.elems[0].desc

    @property
    def k(self) -> int:
        return len(self.elems)

    @classmethod
    def from_generator(cls, b: ExtFieldElement) -> "SelfDualBasis":
        elems = [b]
        for _ in range(b.desc.k - 1):
            elems.append(frobenius(elems[-1]))
        return cls(tuple(elems), True, b)

    def gram(self) -> MatFq:
        F = self.desc.field
        k = len(self.elems)
        g = [[trace(self.elems[i] * self.elems[j]) for j in range(k)] for i in range(k)]
        return MatFq(g, F)

    def coordinates(self, x: ExtFieldElement) -> list[int]:
        """Coordinates of x in this basis, by solving against the power basis."""
        F = self.desc.field
        v = np.array(x.coeffs, dtype=np.int64)
        return [int(c) for c in F.matmul(self._coord_inv, v[:, None])[:, 0]]

    def to_text(self) -> str:
        gen = self.generator.to_text() if self.generator is not None else "none"
        return f"{self.desc.to_text()} {gen}"

    @classmethod
    def from_text(cls, text: str) -> "SelfDualBasis":
        try:
            desc_txt, gen_txt = text.split()
            desc = FieldDescriptor.from_text(desc_txt)
            b = desc.element([int(c) for c in gen_txt.split(",")])
        except ValueError as exc:
            raise FormatError(f"malformed basis record {text!r}") from exc
        return cls.from_generator(b)


def mult_map_matrix(x: ExtFieldElement, basis: SelfDualBasis) -> MatFq:
    """Matrix of y -> x*y in the basis; column j holds the coordinates of x*b_j."""
    cols = [basis.coordinates(x * b) for b in basis.elems]
    return MatFq(np.array(cols, dtype=np.int64).T, basis.desc.field)


def trace_form_matrix(x: ExtFieldElement, basis: SelfDualBasis) -> MatFq:
    """(Tr(x b_i b_j))_{i,j}; equals mult_map_matrix for self-dual bases."""
    e = basis.elems
    k = len(e)
    return MatFq([[trace(x * e[i] * e[j]) for j in range(k)] for i in range(k)],
                 basis.desc.field)


def find_self_dual_normal_basis(desc: FieldDescriptor) -> SelfDualBasis:
    """Scan powers of the primitive generator for a self-dual normal element."""
    if desc.k == 1:
        return SelfDualBasis((desc.one(),), True, desc.one())
    if desc.k % 2 == 0:
        raise SearchExhausted("self-dual normal bases are only searched for odd k")
    g = find_primitive(desc)
    k, q = desc.k, desc.q
    half = k // 2
    b = desc.one()
    for e in range(desc.order - 1):
        if trace(b * b) == 1:
            conj = b
            ok = True
            for _ in range(half):
                conj = conj ** q
                if trace(b * conj) != 0:
                    ok = False
                    break
            if ok:
                log.debug("self-dual normal element g^%d after %d candidates", e, e + 1)
                return SelfDualBasis.from_generator(b)
        b = b * g
    raise SearchExhausted("no self-dual normal element found")


def find_lambda_trace_nonzero(basis: SelfDualBasis) -> ExtFieldElement:
    """First primitive power g^e (gcd(e, q^k - 1) = 1) with Tr(g^e b_1^2) != 0."""
    desc = basis.desc
    g = find_primitive(desc)
    n = desc.order - 1
    b1sq = basis.elems[0] * basis.elems[0]
    lam = g
    for e in range(1, n + 1):
        if math.gcd(e, n) == 1:
            if trace(lam * b1sq) != 0:
                return lam
            log.info("skipping primitive g^%d: Tr(lambda b_1^2) = 0", e)
        lam = lam * g
    raise SearchExhausted("no primitive lambda with nonzero trace")


@dataclass
class SingerCertificate:
    S: MatFq
    order: int
    order_divisor_checks: list[tuple[int, bool]]
    full_power_is_identity: bool
    centralizer_dim: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.full_power_is_identity and all(ok for _, ok in self.order_divisor_checks) \
            and (self.centralizer_dim is None or self.centralizer_dim == self.S.n)


def singer_certificate(S: MatFq, centralizer: Optional[bool] = None) -> SingerCertificate:
    """Order checks for S without raising; see ``verify_singer``."""
    q, k = S.F.q, S.n
    n = q ** k - 1
    checks = []
    if S.det() == 0:
        return SingerCertificate(S, n, [(ell, False) for ell in prime_divisors(n)], False)
    for ell in prime_divisors(n):
        checks.append((ell, not (S ** (n // ell)).is_identity()))
    full = (S ** n).is_identity()
    if centralizer is None:
        centralizer = k <= CENTRALIZER_CHECK_MAX_K
    cdim = centralizer_dim(S) if centralizer else None
    return SingerCertificate(S, n, checks, full, cdim)


def verify_singer(S: MatFq, centralizer: Optional[bool] = None) -> SingerCertificate:
    cert = singer_certificate(S, centralizer)
    if not cert.ok:
        failing = [ell for ell, ok in cert.order_divisor_checks if not ok]
        raise NotSinger(f"not a Singer element (failing prime divisors {failing}, "
                        f"S^(q^k-1) = I: {cert.full_power_is_identity})", cert)
    return cert


def centralizer_dim(S: MatFq) -> int:
    """Dimension of {X : SX = XS}."""
    F, k = S.F, S.n
    cols = []
    for l in range(k):
        for m in range(k):
            E = MatFq.unit(l + 1, m + 1, k, F)
            cols.append((S @ E - E @ S).a.reshape(-1))
    A = np.array(cols, dtype=np.int64).T
    return nullspace(F, A).shape[0]


def membership_in_poly_algebra(T: MatFq, S: MatFq) -> bool:
    """True iff T lies in span{I, S, ..., S^{k-1}}."""
    k = S.n
    space = RowSpace(S.F, k * k)
    P = MatFq.identity(k, S.F)
    rows = []
    for _ in range(k):
        rows.append(P.a.reshape(-1))
        P = P @ S
    space.add(np.array(rows))
    return not space.reduce(T.a.reshape(1, -1)).any()


def is_permuted_block_diagonal(S: MatFq) -> bool:
    """True iff some coordinate permutation makes S block diagonal with >= 2 blocks."""
    k = S.n
    if k < 2:
        return False
    adj = (S.a != 0) | (S.a.T != 0)
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]).tolist():
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) < k


def companion_matrix(poly, F) -> MatFq:
    """Companion matrix of a monic polynomial given low-to-high over F_q."""
    F = _as_field(F)
    k = len(poly) - 1
    a = np.zeros((k, k), dtype=np.int64)
    for i in range(1, k):
        a[i, i - 1] = 1
    for i in range(k):
        a[i, k - 1] = F.neg(int(poly[i]))
    return MatFq(a, F)


__all__ = [
    "SelfDualBasis",
    "SingerCertificate",
    "centralizer_dim",
    "companion_matrix",
    "find_lambda_trace_nonzero",
    "find_self_dual_normal_basis",
    "is_permuted_block_diagonal",
    "is_primitive",
    "membership_in_poly_algebra",
    "mult_map_matrix",
    "singer_certificate",
    "trace_form_matrix",
    "verify_singer",
]
