"""Dense matrices over F_q: arithmetic, blocks, commutators, packing and spans."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, FormatError, SingularMatrix
from .fields import GF, FieldDescriptor


def _as_field(F) -> GF:
    if isinstance(F, FieldDescriptor):
        return F.field
    if isinstance(F, GF):
        return F
    raise TypeError(f"expected GF or FieldDescriptor, got {type(F).__name__}")


# ---- elimination kernels on raw code arrays ---------------------------------

def rref(F: GF, M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    R = np.array(M, dtype=np.int64, copy=True)
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            R[[r, i]] = R[[i, r]]
        inv = F.inv(int(R[r, c]))
        if inv != 1:
            R[r] = F.mul_arr(R[r], inv)
        f = R[:, c].copy()
        f[r] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            R[hit] = F.sub_arr(R[hit], F.mul_arr(f[hit, None], R[r][None, :]))
        pivots.append(c)
        r += 1
    return R, pivots


def det_array(F: GF, M: np.ndarray) -> int:
    R = np.array(M, dtype=np.int64, copy=True)
    n = R.shape[0]
    det = 1
    for c in range(n):
        nz = np.flatnonzero(R[c:, c])
        if nz.size == 0:
            return 0
        i = c + int(nz[0])
        if i != c:
            R[[c, i]] = R[[i, c]]
            det = F.neg(det)
        piv = int(R[c, c])
        det = F.mul(det, piv)
        inv = F.inv(piv)
        below = R[c + 1:, c]
        hit = np.flatnonzero(below)
        if hit.size:
            rows = c + 1 + hit
            factors = F.mul_arr(below[hit], inv)
            R[rows] = F.sub_arr(R[rows], F.mul_arr(factors[:, None], R[c][None, :]))
    return det


def inverse_array(F: GF, M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    aug = np.concatenate([np.asarray(M, dtype=np.int64), np.eye(n, dtype=np.int64)], axis=1)
    R, piv = rref(F, aug)
    if piv != list(range(n)):
        raise SingularMatrix("matrix is not invertible")
    return R[:, n:]


def nullspace(F: GF, M: np.ndarray) -> np.ndarray:
    """Basis of {v : M v = 0} as rows."""
    R, piv = rref(F, M)
    cols = M.shape[1]
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for t, fc in enumerate(free):
        basis[t, fc] = 1
        for row, pc in enumerate(piv):
            basis[t, pc] = F.neg(int(R[row, fc]))
    return basis


# ---- the matrix type --------------------------------------------------------

class MatFq:
    """Immutable square matrix over F_q with entries stored as field codes."""

    __slots__ = ("a", "F")

    def __init__(self, entries, F):
        F = _as_field(F)
        a = np.array(entries, dtype=np.int64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.size and (a.min() < 0 or a.max() >= F.q):
            if F.r == 1:
                a %= F.p
            else:
                raise ValueError("entries must be F_q codes in [0, q)")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "F", F)

    def __setattr__(self, name, value):
        raise AttributeError("MatFq is immutable")

    @classmethod
    def _wrap(cls, a: np.ndarray, F: GF) -> "MatFq":
        obj = object.__new__(cls)
        a = np.ascontiguousarray(a, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(obj, "a", a)
        object.__setattr__(obj, "F", F)
        return obj

    # constructors
    @classmethod
    def identity(cls, n: int, F) -> "MatFq":
        return cls._wrap(np.eye(n, dtype=np.int64), _as_field(F))

    @classmethod
    def zeros(cls, n: int, F) -> "MatFq":
        return cls._wrap(np.zeros((n, n), dtype=np.int64), _as_field(F))

    @classmethod
    def diag(cls, values: Sequence[int], F) -> "MatFq":
        return cls._wrap(np.diag(np.array(values, dtype=np.int64)), _as_field(F))

    @classmethod
    def unit(cls, i: int, j: int, n: int, F) -> "MatFq":
        """E_{i,j} (1-based) in dimension n."""
        a = np.zeros((n, n), dtype=np.int64)
        a[i - 1, j - 1] = 1
        return cls._wrap(a, _as_field(F))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def _check(self, other: "MatFq"):
        if not isinstance(other, MatFq):
            raise TypeError("expected MatFq")
        if other.F != self.F:
            raise DimensionMismatch("matrices over different fields")
        if other.n != self.n:
            raise DimensionMismatch(f"dimension {self.n} vs {other.n}")

    def __matmul__(self, other: "MatFq") -> "MatFq":
        self._check(other)
        return MatFq._wrap(self.F.matmul(self.a, other.a), self.F)

    def __mul__(self, other):
        if isinstance(other, MatFq):
            return self @ other
        return self.scale(int(other))

    def __rmul__(self, other):
        return self.scale(int(other))

    def scale(self, c: int) -> "MatFq":
        """Multiply by the F_q element with code c."""
        return MatFq._wrap(self.F.mul_arr(self.a, c), self.F)

    def scale_int(self, n: int) -> "MatFq":
        """Multiply by the image of the integer n in F_p."""
        return self.scale(self.F.from_int(n))

    def __add__(self, other: "MatFq") -> "MatFq":
        self._check(other)
        return MatFq._wrap(self.F.add_arr(self.a, other.a), self.F)

    def __sub__(self, other: "MatFq") -> "MatFq":
        self._check(other)
        return MatFq._wrap(self.F.sub_arr(self.a, other.a), self.F)

    def __neg__(self) -> "MatFq":
        return MatFq._wrap(self.F.neg_arr(self.a), self.F)

    @property
    def T(self) -> "MatFq":
        return MatFq._wrap(self.a.T, self.F)

    def transpose(self) -> "MatFq":
        return self.T

    def inv(self) -> "MatFq":
        return MatFq._wrap(inverse_array(self.F, self.a), self.F)

    def det(self) -> int:
        return det_array(self.F, self.a)

    def rank(self) -> int:
        return len(rref(self.F, self.a)[1])

    def is_invertible(self) -> bool:
        return self.det() != 0

    def __pow__(self, e: int) -> "MatFq":
        e = int(e)
        base = self.inv() if e < 0 else self
        e = abs(e)
        result = MatFq.identity(self.n, self.F)
        while e:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MatFq):
            return NotImplemented
        return self.F == other.F and self.a.shape == other.a.shape and bool(
            np.array_equal(self.a, other.a))

    def __hash__(self):
        return hash((self.F, self.a.shape, self.a.tobytes()))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.a, np.eye(self.n, dtype=np.int64)))

    def is_zero(self) -> bool:
        return not self.a.any()

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.a, self.a.T))

    def entry(self, i: int, j: int) -> int:
        """Entry at 1-based position (i, j)."""
        return int(self.a[i - 1, j - 1])

    def block(self, i: int, j: int, k: int) -> "MatFq":
        """The (i, j) block (1-based) of size k."""
        return MatFq._wrap(self.a[(i - 1) * k:i * k, (j - 1) * k:j * k], self.F)

    def key(self):
        return pack_key(self)

    def to_text(self) -> str:
        return matrix_to_text(self)

    def __repr__(self):
        return f"MatFq(n={self.n}, q={self.F.q}, {self.a.tolist()})"


def mat_arith(A: MatFq, B: MatFq | None, kind: str):
    """Matrix operation by name: mul, add, sub, inv, det or transpose."""
    if kind == "mul":
        return A @ B
    if kind == "add":
        return A + B
    if kind == "sub":
        return A - B
    if kind == "inv":
        return A.inv()
    if kind == "det":
        return A.det()
    if kind == "transpose":
        return A.T
    raise ValueError(f"unknown operation {kind!r}")


def commutator(*gs: MatFq) -> MatFq:
    """[g, h] = g^-1 h^-1 g h; longer argument lists fold from the left."""
    if len(gs) < 2:
        raise ValueError("commutator needs at least two arguments")
    acc = gs[0]
    for h in gs[1:]:
        acc = acc.inv() @ h.inv() @ acc @ h
    return acc


# ---- blocks -----------------------------------------------------------------

def assemble(grid: Sequence[Sequence[MatFq | None]], k: int, F) -> MatFq:
    """Assemble a square grid of k x k blocks; None stands for the zero block."""
    F = _as_field(F)
    m = len(grid)
    out = np.zeros((m * k, m * k), dtype=np.int64)
    for i, row in enumerate(grid):
        if len(row) != m:
            raise DimensionMismatch("block grid must be square")
        for j, blk in enumerate(row):
            if blk is None:
                continue
            if blk.n != k or blk.F != F:
                raise DimensionMismatch(f"block ({i + 1},{j + 1}) has the wrong shape or field")
            out[i * k:(i + 1) * k, j * k:(j + 1) * k] = blk.a
    return MatFq._wrap(out, F)


def block4(blocks: Sequence[Sequence[MatFq | None]]) -> MatFq:
    if len(blocks) != 4 or any(len(r) != 4 for r in blocks):
        raise DimensionMismatch("block4 expects a 4 x 4 grid")
    sample = next((b for r in blocks for b in r if b is not None), None)
    if sample is None:
        raise DimensionMismatch("block4 needs at least one non-empty block")
    return assemble(blocks, sample.n, sample.F)


def extract_blocks(X: MatFq, k: int) -> list[list[MatFq]]:
    if X.n % k:
        raise DimensionMismatch(f"{X.n} is not a multiple of {k}")
    m = X.n // k
    return [[X.block(i + 1, j + 1, k) for j in range(m)] for i in range(m)]


def embed(M: MatFq, i: int, j: int, m: int = 4) -> MatFq:
    """The m x m block matrix with M at block (i, j) and zeros elsewhere."""
    grid = [[None] * m for _ in range(m)]
    grid[i - 1][j - 1] = M
    return assemble(grid, M.n, M.F)


def block_diag(*ms: MatFq) -> MatFq:
    F = ms[0].F
    n = sum(m.n for m in ms)
    out = np.zeros((n, n), dtype=np.int64)
    off = 0
    for m in ms:
        out[off:off + m.n, off:off + m.n] = m.a
        off += m.n
    return MatFq._wrap(out, F)


# ---- symplectic forms -------------------------------------------------------

@dataclass(frozen=True)
class SymplecticForm:
    """Standard form [[0, -I_n], [I_n, 0]] of half-dimension n."""

    n: int
    omega: MatFq

    @classmethod
    def standard(cls, n: int, F) -> "SymplecticForm":
        F = _as_field(F)
        a = np.zeros((2 * n, 2 * n), dtype=np.int64)
        a[:n, n:] = F.neg_arr(np.eye(n, dtype=np.int64))
        a[n:, :n] = np.eye(n, dtype=np.int64)
        return cls(n, MatFq._wrap(a, F))


def is_symplectic(X: MatFq, form: SymplecticForm) -> bool:
    if X.n != 2 * form.n:
        raise DimensionMismatch(f"matrix of size {X.n} against form of rank {form.n}")
    return X.T @ form.omega @ X == form.omega


def is_symplectic_batch(F: GF, mats: np.ndarray, form: SymplecticForm) -> np.ndarray:
    """Vectorized X^T Omega X == Omega over a stack of matrices."""
    Om = form.omega.a
    left = F.matmul(np.swapaxes(mats, -1, -2), Om[None])
    prod = F.matmul(left, mats)
    return np.all(prod == Om[None], axis=(1, 2))


# ---- packing ----------------------------------------------------------------

def bits_per_digit(p: int) -> int:
    """ceil(log2 p) for an odd prime p."""
    return (p - 1).bit_length()


def key_bits(n: int, F) -> int:
    F = _as_field(F)
    return n * n * F.r * bits_per_digit(F.p)


def _digit_rows(F: GF, mats: np.ndarray) -> np.ndarray:
    """(N, n, n) codes -> (N, n*n*r) base-p digits, row-major, low digit first."""
    N = mats.shape[0]
    if F.r == 1:
        return mats.reshape(N, -1)
    return F.digits_arr(mats).reshape(N, -1)


def _key_header(n: int, F: GF) -> bytes:
    return f"{n},{F.p},{F.r};".encode()


def pack_key(X: MatFq):
    """Injective key: an int when it fits in 128 bits, else a canonical byte string."""
    F = X.F
    digits = _digit_rows(F, X.a[None])[0]
    b = bits_per_digit(F.p)
    if digits.size * b <= 128:
        key = 0
        for j, d in enumerate(digits.tolist()):
            key |= d << (b * j)
        return key
    return _key_header(X.n, F) + bytes((digits + 1).astype(np.uint8))


def unpack_key(key, n: int, F) -> MatFq:
    F = _as_field(F)
    b = bits_per_digit(F.p)
    total = n * n * F.r
    if isinstance(key, (int, np.integer)):
        key = int(key)
        mask = (1 << b) - 1
        digits = [(key >> (b * j)) & mask for j in range(total)]
    else:
        head = _key_header(n, F)
        if not key.startswith(head):
            raise FormatError("key header does not match dimension and field")
        digits = [c - 1 for c in key[len(head):]]
    arr = np.array(digits, dtype=np.int64).reshape(n, n, F.r)
    return MatFq._wrap(F.encode_arr(arr) if F.r > 1 else arr[..., 0], F)


def pack_keys(F: GF, mats: np.ndarray) -> np.ndarray:
    """Vectorized keys for a stack of matrices.

    When n*n*r*ceil(log2 p) <= 64 the result is a uint64 array whose values
    equal ``pack_key``; otherwise it is a fixed-width bytes array holding the
    digits shifted by one (so no byte is zero).
    """
    mats = np.asarray(mats, dtype=np.int64)
    N, n = mats.shape[0], mats.shape[1]
    digits = _digit_rows(F, mats)
    b = bits_per_digit(F.p)
    if digits.shape[1] * b <= 64:
        shifts = (np.arange(digits.shape[1], dtype=np.uint64) * np.uint64(b))
        return np.bitwise_or.reduce(digits.astype(np.uint64) << shifts, axis=1) \
            if N else np.zeros(0, dtype=np.uint64)
    u8 = np.ascontiguousarray((digits + 1).astype(np.uint8))
    return u8.view(f"S{digits.shape[1]}").reshape(N)


def unpack_keys(F: GF, keys: np.ndarray, n: int) -> np.ndarray:
    total = n * n * F.r
    b = bits_per_digit(F.p)
    if keys.dtype == np.uint64:
        shifts = np.arange(total, dtype=np.uint64) * np.uint64(b)
        digits = ((keys[:, None] >> shifts) & np.uint64((1 << b) - 1)).astype(np.int64)
    else:
        raw = np.frombuffer(keys.tobytes(), dtype=np.uint8).reshape(len(keys), total)
        digits = raw.astype(np.int64) - 1
    digits = digits.reshape(len(keys), n, n, F.r)
    return F.encode_arr(digits) if F.r > 1 else digits[..., 0]


# ---- text format ------------------------------------------------------------

def matrix_to_text(X: MatFq) -> str:
    F = X.F
    lines = [f"{X.n} {F.p} {F.r}"]
    for row in X.a.tolist():
        if F.r == 1:
            lines.append(" ".join(str(v) for v in row))
        else:
            lines.append(" ".join(",".join(str(d) for d in F.digits(v)) for v in row))
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str, F) -> MatFq:
    F = _as_field(F)
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    try:
        n, p, r = (int(x) for x in lines[0].split())
    except (IndexError, ValueError) as exc:
        raise FormatError("matrix header must be 'n p r'") from exc
    if (p, r) != (F.p, F.r):
        raise FormatError(f"matrix over F_{p}^{r} does not match field {F}")
    if len(lines) != n + 1:
        raise FormatError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != n:
            raise FormatError(f"row has {len(toks)} entries, expected {n}")
        try:
            if r == 1:
                vals = [int(t) for t in toks]
            else:
                vals = [F.from_digits([int(d) for d in t.split(",")]) for t in toks]
        except ValueError as exc:
            raise FormatError(f"bad matrix entry in {ln!r}") from exc
        if any(not 0 <= v < F.q for v in vals):
            raise FormatError("matrix entry out of range")
        rows.append(vals)
    return MatFq(rows, F)


# ---- linear envelope ----------------------------------------------------------

class RowSpace:
    """Incrementally maintained reduced row echelon basis of a subspace of F_q^N."""

    def __init__(self, F: GF, N: int):
        self.F = F
        self.N = N
        self.rows = np.zeros((0, N), dtype=np.int64)
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, C: np.ndarray) -> np.ndarray:
        """Residues of the rows of C modulo the current span."""
        if not self.pivots:
            return np.array(C, dtype=np.int64, copy=True)
        coeff = C[:, self.pivots]
        return self.F.sub_arr(C, self.F.matmul(coeff, self.rows))

    def add(self, C: np.ndarray) -> np.ndarray:
        """Add the rows of C; returns the newly created basis rows."""
        res = self.reduce(np.asarray(C, dtype=np.int64))
        res = res[res.any(axis=1)]
        if res.shape[0] == 0:
            return res
        R, piv = rref(self.F, res)
        new = R[:len(piv)]
        if self.pivots:
            coeff = self.rows[:, piv]
            self.rows = self.F.sub_arr(self.rows, self.F.matmul(coeff, new))
        self.rows = np.concatenate([self.rows, new], axis=0)
        self.pivots.extend(piv)
        return new


@dataclass
class EnvelopeResult:
    dim: int
    closed: bool
    max_len: int
    history: list[int] = field(default_factory=list)


def algebra_envelope(generators: Sequence[MatFq], max_len: int = 12) -> EnvelopeResult:
    """Span of all generator words of length <= max_len, grown by word length."""
    if not generators:
        raise ValueError("need at least one generator")
    F, n = generators[0].F, generators[0].n
    for g in generators:
        if g.n != n or g.F != F:
            raise DimensionMismatch("generators must share dimension and field")
    space = RowSpace(F, n * n)
    new = space.add(np.eye(n, dtype=np.int64).reshape(1, -1))
    history = [space.dim]
    gens = np.stack([g.a for g in generators])
    for _ in range(max_len):
        mats = new.reshape(-1, n, n)
        cand = F.matmul(gens[:, None], mats[None]).reshape(-1, n * n)
        new = space.add(cand)
        history.append(space.dim)
        if new.shape[0] == 0:
            return EnvelopeResult(space.dim, True, max_len, history)
    # one more round decides whether the final level was already closed
    mats = new.reshape(-1, n, n)
    cand = F.matmul(gens[:, None], mats[None]).reshape(-1, n * n)
    closed = space.reduce(cand).any(axis=1).sum() == 0
    return EnvelopeResult(space.dim, bool(closed), max_len, history)


def algebra_envelope_dim(generators: Sequence[MatFq], max_len: int = 12) -> int:
    res = algebra_envelope(generators, max_len)
    if not res.closed:
        raise BudgetExceeded(
            f"envelope not closed within word length {max_len} (dim {res.dim})", dim=res.dim)
    return res.dim


def identity_like(X: MatFq) -> MatFq:
    return MatFq.identity(X.n, X.F)


def stack(mats: Iterable[MatFq]) -> np.ndarray:
    return np.stack([m.a for m in mats])
