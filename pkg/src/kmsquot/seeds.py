"""Seed triples (M_a, M_b, M_c), the block generators V_a, V_b, V_c and their conditions."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy

from .errors import ConditionFailed, ConfigError, FormatError, NoAdmissibleX
from .fields import ExtFieldElement, FieldDescriptor, GF, is_primitive, trace
from .matrices import (
    MatFq,
    SymplecticForm,
    assemble,
    block_diag,
    is_symplectic,
    matrix_from_text,
    matrix_to_text,
)
from .singer import (
    SelfDualBasis,
    find_lambda_trace_nonzero,
    find_self_dual_normal_basis,
    membership_in_poly_algebra,
    mult_map_matrix,
    singer_certificate,
)

log = logging.getLogger(__name__)

VARIANTS = ("sl", "sp")
SEED_FORMAT = "kmsquot-seed v1"


def validate_parameters(p: int, r: int, k: int, variant: str) -> None:
    """Reject parameters outside the supported range, naming the violated hypothesis."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}", "variant")
    if not sympy.isprime(p):
        raise ConfigError(f"p = {p} is not prime", "p prime")
    if p == 2:
        raise ConfigError("p = 2: characteristic must be odd", "p > 2")
    if r < 1:
        raise ConfigError(f"r = {r} must be >= 1", "r >= 1")
    q = p ** r
    if k == 1:
        if variant != "sp":
            raise ConfigError("k = 1 is only supported for the symplectic variant", "k > 3")
    else:
        if not sympy.isprime(k):
            raise ConfigError(f"k = {k} is not prime", "k prime")
        if k <= 3:
            raise ConfigError(f"k = {k} violates k > 3", "k > 3")
        if p == k:
            raise ConfigError(f"p = k = {p}: p and k must be distinct primes", "distinct primes")
    if q <= 3:
        raise ConfigError(f"q = {q} violates q > 3", "q > 3")
    if q ** k == 9:
        raise ConfigError("q^k = 9 is excluded", "q^k != 9")


@dataclass(frozen=True)
class Provenance:
    lam: Optional[ExtFieldElement]
    basis: Optional[SelfDualBasis]
    x: Optional[int] = None


@dataclass(frozen=True)
class SeedTriple:
    desc: FieldDescriptor
    M_a: MatFq
    M_b: MatFq
    M_c: MatFq
    variant: str
    provenance: Provenance

    @property
    def F(self) -> GF:
        return self.desc.field

    @property
    def k(self) -> int:
        return self.M_a.n

    @property
    def N(self) -> MatFq:
        """M_a M_b + M_b M_a."""
        return self.M_a @ self.M_b + self.M_b @ self.M_a

    @property
    def S(self) -> MatFq:
        return self.N @ self.M_c

    def replace(self, **changes) -> "SeedTriple":
        vals = dict(desc=self.desc, M_a=self.M_a, M_b=self.M_b, M_c=self.M_c,
                    variant=self.variant, provenance=self.provenance)
        vals.update(changes)
        return SeedTriple(**vals)


@dataclass(frozen=True)
class GeneratorTriple:
    """The one-parameter families V_a, V_b, V_c attached to a seed."""

    seed: SeedTriple

    @property
    def F(self) -> GF:
        return self.seed.F

    @property
    def k(self) -> int:
        return self.seed.k

    @property
    def n(self) -> int:
        return 4 * self.seed.k

    def V_a(self, lam: int) -> MatFq:
        A = self.seed.M_a.scale(lam)
        return self._unipotent({(1, 4): A, (2, 3): A})

    def V_b(self, lam: int) -> MatFq:
        B = self.seed.M_b.scale(lam)
        return self._unipotent({(2, 1): B, (3, 4): -B})

    def V_c(self, lam: int) -> MatFq:
        return self._unipotent({(4, 2): self.seed.M_c.scale(lam)})

    def V(self, which: str, lam: int) -> MatFq:
        return {"a": self.V_a, "b": self.V_b, "c": self.V_c}[which](lam)

    def _unipotent(self, blocks: dict) -> MatFq:
        k, F = self.k, self.F
        I = MatFq.identity(k, F)
        grid = [[I if i == j else None for j in range(4)] for i in range(4)]
        for (i, j), M in blocks.items():
            grid[i - 1][j - 1] = M
        return assemble(grid, k, F)

    @property
    def Va1(self) -> MatFq:
        return self.V_a(1)

    @property
    def Vb1(self) -> MatFq:
        return self.V_b(1)

    @property
    def Vc1(self) -> MatFq:
        return self.V_c(1)

    def primes(self) -> tuple[MatFq, MatFq, MatFq]:
        return self.Va1, self.Vb1, self.Vc1

    def omega(self) -> SymplecticForm:
        return SymplecticForm.standard(2 * self.k, self.F)


def generators(seed: SeedTriple, lam: Optional[int] = None):
    """GeneratorTriple for the seed, or its evaluation (V_a, V_b, V_c) at lam."""
    gen = GeneratorTriple(seed)
    if lam is None:
        return gen
    return gen.V_a(lam), gen.V_b(lam), gen.V_c(lam)


# ---- construction -------------------------------------------------------------

def smallest_admissible_x(F: GF) -> int:
    minus_one = F.neg(1)
    for c in range(2, F.q):
        if c != minus_one:
            return c
    raise NoAdmissibleX(f"F_{F.q} has no element outside {{0, 1, -1}}")


def _swap(k: int, F: GF) -> MatFq:
    a = np.eye(k, dtype=np.int64)
    a[[0, 1]] = a[[1, 0]]
    return MatFq(a, F)


def build_sl_seed(desc: FieldDescriptor) -> SeedTriple:
    validate_parameters(desc.p, desc.r, desc.k, "sl")
    F, k = desc.field, desc.k
    x = smallest_admissible_x(F)
    M_a = MatFq.diag([x] + [1] * (k - 1), F)
    M_b = _swap(k, F)
    basis = find_self_dual_normal_basis(desc)
    lam = find_lambda_trace_nonzero(basis)
    S = mult_map_matrix(lam, basis)
    N = M_a @ M_b + M_b @ M_a
    M_c = N.inv() @ S
    comm = M_a @ M_b @ M_a.inv() @ M_b.inv()
    if comm != MatFq.diag([x, F.inv(x)] + [1] * (k - 2), F):
        raise ConditionFailed("commutator of M_a and M_b is not diag(x, 1/x, 1, ...)",
                              "commutator_shape")
    return SeedTriple(desc, M_a, M_b, M_c, "sl", Provenance(lam, basis, x))


def build_sp_seed(desc: FieldDescriptor) -> SeedTriple:
    validate_parameters(desc.p, desc.r, desc.k, "sp")
    F, k = desc.field, desc.k
    m1 = F.neg(1)
    basis = find_self_dual_normal_basis(desc)
    lam = find_lambda_trace_nonzero(basis)
    S = mult_map_matrix(lam, basis)
    if k == 1:
        M_a = MatFq([[m1]], F)
        M_b = MatFq([[1]], F)
    else:
        M_a = MatFq.diag([m1, 1] + [m1] * (k - 2), F)
        M_b = block_diag(MatFq([[1, m1], [m1, m1]], F), MatFq.identity(k - 2, F))
    M_c = S.scale(F.neg(F.inv(2 % F.p)))
    seed = SeedTriple(desc, M_a, M_b, M_c, "sp", Provenance(lam, basis, None))
    report = verify_conditions(seed)
    for res in report.results:
        if res.group != "aux" and res.status == "fail":
            raise ConditionFailed(f"symplectic seed violates {res.clause}: {res.detail}",
                                  res.clause)
    return seed


def build_seed(desc: FieldDescriptor, variant: str) -> SeedTriple:
    if variant == "sl":
        return build_sl_seed(desc)
    if variant == "sp":
        return build_sp_seed(desc)
    raise ConfigError(f"unknown variant {variant!r}", "variant")


# ---- condition report -----------------------------------------------------------

@dataclass(frozen=True)
class ClauseResult:
    clause: str
    group: str
    status: str  # pass | fail | n/a
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


@dataclass
class ConditionReport:
    variant: str
    results: list[ClauseResult] = field(default_factory=list)

    def add(self, clause: str, group: str, ok: Optional[bool], detail: str = ""):
        status = "n/a" if ok is None else ("pass" if ok else "fail")
        self.results.append(ClauseResult(clause, group, status, detail))

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list[str]:
        return [r.clause for r in self.results if r.status == "fail"]

    def status(self, clause: str) -> str:
        for r in self.results:
            if r.clause == clause:
                return r.status
        raise KeyError(clause)

    def to_text(self) -> str:
        lines = [f"# conditions variant={self.variant}"]
        for r in self.results:
            lines.append(f"{r.clause}\t{r.group}\t{r.status}\t{r.detail}")
        return "\n".join(lines) + "\n"


def _provenance_checks(seed: SeedTriple, S: MatFq, rep: ConditionReport, group: str):
    prov = seed.provenance
    if prov.basis is None or prov.lam is None:
        for c in ("self_dual", "mult_map", "lambda_primitive", "trace"):
            rep.add(c, group, False, "provenance missing")
        return
    rep.add("self_dual", group, prov.basis.gram().is_identity())
    rep.add("mult_map", group, mult_map_matrix(prov.lam, prov.basis) == S,
            "S = (M_aM_b + M_bM_a) M_c against [mu_lambda] in the basis")
    rep.add("lambda_primitive", group, is_primitive(prov.lam), prov.lam.to_text())
    b1 = prov.basis.elems[0]
    tr = trace(prov.lam * b1 * b1)
    rep.add("trace", group, tr != 0, f"Tr(lambda b_1^2) = {tr}")


def _singer_check(S: MatFq, rep: ConditionReport, clause: str, group: str):
    cert = singer_certificate(S)
    failing = [ell for ell, ok in cert.order_divisor_checks if not ok]
    rep.add(clause, group, cert.ok,
            f"order q^k-1 = {cert.order}; failing divisors {failing}" if failing
            else f"order q^k-1 = {cert.order}")


def _safe_inv(M: MatFq) -> Optional[MatFq]:
    return M.inv() if M.is_invertible() else None


def verify_conditions(seed: SeedTriple) -> ConditionReport:
    """Structured pass/fail for every condition the construction relies on."""
    if seed.variant == "sl":
        return _verify_sl(seed)
    if seed.variant == "sp":
        return _verify_sp(seed)
    raise ConfigError(f"unknown variant {seed.variant!r}", "variant")


def _verify_sl(seed: SeedTriple) -> ConditionReport:
    rep = ConditionReport("sl")
    F, k = seed.F, seed.k
    Ma, Mb, Mc = seed.M_a, seed.M_b, seed.M_c
    inv_ok = all(M.is_invertible() for M in (Ma, Mb, Mc))
    rep.add("invertible", "aux", inv_ok)
    N = seed.N
    N_inv = _safe_inv(N)
    rep.add("N_invertible", "aux", N_inv is not None)
    S = N @ Mc

    # clause (i): S is a Singer element built from a primitive lambda with Tr(lambda b_1^2) != 0
    _singer_check(S, rep, "singer", "i")
    _provenance_checks(seed, S, rep, "i")

    # clause (ii): commutator shape with admissible x
    x = seed.provenance.x
    if inv_ok and x is not None and x != 0:
        X = Ma @ Mb @ Ma.inv() @ Mb.inv()
        target = MatFq.diag([x, F.inv(x)] + [1] * (k - 2), F)
        rep.add("commutator_shape", "ii", X == target, "M_aM_bM_a^-1M_b^-1 = diag(x, 1/x, I)")
    else:
        X = None
        rep.add("commutator_shape", "ii", False, "needs invertible M_a, M_b and x != 0")
    rep.add("x_admissible", "ii", x is not None and x not in (0, 1, F.neg(1)), f"x = {x}")

    # facts used along the way
    if X is None or (MatFq.identity(k, F) + X).det() == 0:
        for c in ("XS_ne_SX", "Z_nonsymmetric", "Z_plus_Zt_not_in_FqS",
                  "S_minus_2ZZt_singular_nonzero"):
            rep.add(c, "aux", False, "I + X not invertible")
        return rep
    IX_inv = (MatFq.identity(k, F) + X).inv()
    Z = IX_inv @ X @ S @ IX_inv
    rep.add("XS_ne_SX", "aux", X @ S != S @ X)
    rep.add("Z_nonsymmetric", "aux", not Z.is_symmetric())
    rep.add("Z_plus_Zt_not_in_FqS", "aux", not membership_in_poly_algebra(Z + Z.T, S))
    D = S - (Z + Z.T).scale_int(2)
    rep.add("S_minus_2ZZt_singular_nonzero", "aux", D.det() == 0 and not D.is_zero())
    return rep


def _verify_sp(seed: SeedTriple) -> ConditionReport:
    rep = ConditionReport("sp")
    F, k = seed.F, seed.k
    Ma, Mb, Mc = seed.M_a, seed.M_b, seed.M_c
    rep.add("symmetric", "hyp", Ma.is_symmetric() and Mb.is_symmetric() and Mc.is_symmetric())
    N = seed.N
    S = N @ Mc
    _singer_check(S, rep, "singer", "hyp")
    scalar = N.a[0, 0]
    is_scalar = N == MatFq.identity(k, F).scale(int(scalar)) and scalar != 0
    rep.add("scalar", "i", bool(is_scalar), f"M_aM_b + M_bM_a = {int(scalar)} I" if is_scalar
            else "M_aM_b + M_bM_a is not a non-zero scalar matrix")
    T = Ma @ Mb @ S @ Mb @ Ma
    if k == 1:
        rep.add("nonmembership", "ii", None, "F_q[S] is all of Mat_1 when k = 1")
    else:
        rep.add("nonmembership", "ii", not membership_in_poly_algebra(T, S),
                "M_aM_bSM_bM_a outside F_q[S]")
    rep.add("invertible", "aux", all(M.is_invertible() for M in (Ma, Mb, Mc)))
    _provenance_checks(seed, S, rep, "aux")
    R = Ma @ Mb @ Mc @ Mb @ Ma
    rep.add("S_commutation", "aux", None if k == 1 else (N @ Mc @ R != R @ Mc @ N),
            "(M_aM_b+M_bM_a) M_c R != R M_c (M_aM_b+M_bM_a), R = M_aM_bM_cM_bM_a")
    gen = GeneratorTriple(seed)
    om = gen.omega()
    rep.add("symplectic", "aux", all(is_symplectic(V, om) for V in gen.primes()),
            "V_a', V_b', V_c' preserve the standard form")
    return rep


# ---- serialization -------------------------------------------------------------

def seed_to_text(seed: SeedTriple) -> str:
    prov = seed.provenance
    lines = [
        SEED_FORMAT,
        f"descriptor {seed.desc.to_text()}",
        f"variant {seed.variant}",
        f"x {prov.x if prov.x is not None else 'none'}",
        f"lambda {prov.lam.to_text() if prov.lam is not None else 'none'}",
        f"basis {prov.basis.generator.to_text() if prov.basis is not None else 'none'}",
    ]
    out = "\n".join(lines) + "\n"
    for name in ("M_a", "M_b", "M_c"):
        out += f"{name}\n" + matrix_to_text(getattr(seed, name))
    return out


def seed_from_text(text: str) -> SeedTriple:
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != SEED_FORMAT:
        raise FormatError(f"not a seed file (expected header {SEED_FORMAT!r})")
    head = {}
    i = 1
    for key in ("descriptor", "variant", "x", "lambda", "basis"):
        if i >= len(lines):
            raise FormatError(f"seed file truncated before {key!r}")
        parts = lines[i].split(maxsplit=1)
        if len(parts) != 2 or parts[0] != key:
            raise FormatError(f"line {i + 1}: expected {key!r}, got {lines[i]!r}")
        head[key] = parts[1]
        i += 1
    try:
        desc = FieldDescriptor.from_text(head["descriptor"])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if head["variant"] not in VARIANTS:
        raise FormatError(f"unknown variant {head['variant']!r}")

    def parse_elem(txt):
        if txt == "none":
            return None
        try:
            return desc.element([int(c) for c in txt.split(",")])
        except ValueError as exc:
            raise FormatError(f"bad field element {txt!r}") from exc

    lam = parse_elem(head["lambda"])
    b = parse_elem(head["basis"])
    try:
        basis = SelfDualBasis.from_generator(b) if b is not None else None
    except ValueError as exc:
        raise FormatError(f"basis generator does not give a self-dual basis: {exc}") from exc
    try:
        x = None if head["x"] == "none" else int(head["x"])
    except ValueError as exc:
        raise FormatError(f"bad x value {head['x']!r}") from exc

    mats = {}
    F = desc.field
    for name in ("M_a", "M_b", "M_c"):
        if i >= len(lines) or lines[i] != name:
            raise FormatError(f"expected matrix block {name!r}")
        try:
            n = int(lines[i + 1].split()[0])
        except (IndexError, ValueError) as exc:
            raise FormatError(f"bad matrix header for {name}") from exc
        block = "\n".join(lines[i + 1:i + 2 + n])
        mats[name] = matrix_from_text(block, F)
        if mats[name].n != desc.k:
            raise FormatError(f"{name} has size {mats[name].n}, expected {desc.k}")
        i += 2 + n
    if i != len(lines):
        raise FormatError("trailing content after M_c")
    return SeedTriple(desc, mats["M_a"], mats["M_b"], mats["M_c"], head["variant"],
                      Provenance(lam, basis, x))


__all__ = [
    "ClauseResult",
    "ConditionReport",
    "GeneratorTriple",
    "Provenance",
    "SeedTriple",
    "build_seed",
    "build_sl_seed",
    "build_sp_seed",
    "generators",
    "seed_from_text",
    "seed_to_text",
    "smallest_admissible_x",
    "validate_parameters",
    "verify_conditions",
]
