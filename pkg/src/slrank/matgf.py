"""Dense exact matrices over a finite field: rank, determinant, inverse,
the normalized rank metric, and uniform sampling from SL_n(q).

Entries are integer element codes of the owning field.  GF(2) work is
routed through the bit-packed kernels; every other field goes through the
table-driven kernels.  All distances are exact `Fraction`s.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import UsageError
from .field import Field, FieldCtx, QuadExt, format_element, parse_element


@dataclass
class MatF:
    """Dense matrix of field element codes.  Treated as immutable by convention."""

    field: Field
    data: np.ndarray  # 2-d int array of codes

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def copy(self) -> "MatF":
        return MatF(self.field, self.data.copy())

    def __eq__(self, other):
        return (
            isinstance(other, MatF)
            and self.field == other.field
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def __repr__(self):
        return f"MatF({self.field!r}, {self.rows}x{self.cols})"


def mat(field: Field, rows: Sequence[Sequence[int]]) -> MatF:
    data = np.array(rows, dtype=np.int64)
    if data.ndim != 2:
        raise UsageError("matrix literal must be two-dimensional")
    if data.size and (data.min() < 0 or data.max() >= field.q):
        raise UsageError("entry code out of range for the field")
    return MatF(field, data)


def identity(field: Field, n: int) -> MatF:
    return MatF(field, np.eye(n, dtype=np.int64))


def zeros(field: Field, n: int, m: Optional[int] = None) -> MatF:
    return MatF(field, np.zeros((n, m if m is not None else n), dtype=np.int64))


def scalar_mat(field: Field, n: int, z: int) -> MatF:
    out = np.zeros((n, n), dtype=np.int64)
    np.fill_diagonal(out, z)
    return MatF(field, out)


def _check_same(g: MatF, h: MatF) -> None:
    if g.field != h.field:
        raise UsageError("operands live over different fields")
    if g.data.shape != h.data.shape:
        raise UsageError(f"shape mismatch {g.data.shape} vs {h.data.shape}")


def madd(g: MatF, h: MatF) -> MatF:
    _check_same(g, h)
    t = g.field.tables()
    return MatF(g.field, t.add[g.data, h.data])


def msub(g: MatF, h: MatF) -> MatF:
    _check_same(g, h)
    t = g.field.tables()
    return MatF(g.field, t.add[g.data, t.neg[h.data]])


def mneg(g: MatF) -> MatF:
    return MatF(g.field, g.field.tables().neg[g.data])


def mmul(g: MatF, h: MatF) -> MatF:
    if g.field != h.field:
        raise UsageError("operands live over different fields")
    if g.cols != h.rows:
        raise UsageError("inner dimensions disagree")
    if g.field.q == 2:
        C = K.gf2_matmul(
            K.gf2_pack(g.data.astype(np.uint8)),
            K.gf2_pack(h.data.astype(np.uint8)),
            g.rows,
            g.cols,
            h.cols,
        )
        return MatF(g.field, K.gf2_unpack(C, h.cols).astype(np.int64))
    t = g.field.tables()
    return MatF(g.field, K.gen_matmul(g.data, h.data, t.add, t.mul))


def matvec(g: MatF, v: np.ndarray) -> np.ndarray:
    t = g.field.tables()
    return K.gen_matvec(g.data, np.asarray(v, dtype=g.data.dtype), t.add, t.mul)


def rank(M: MatF) -> int:
    if M.rows == 0 or M.cols == 0:
        return 0
    if M.field.q == 2:
        return int(K.gf2_rank(K.gf2_pack(M.data.astype(np.uint8)), M.rows, M.cols))
    t = M.field.tables()
    r, _ = K.gen_rank_det(M.data.copy(), t.add, t.mul, t.neg, t.inv)
    return int(r)


def _rank_generic(M: MatF) -> int:
    """Table-driven rank regardless of field size 2 (cross-check path)."""
    t = M.field.tables()
    r, _ = K.gen_rank_det(M.data.copy(), t.add, t.mul, t.neg, t.inv)
    return int(r)


def det(M: MatF) -> int:
    if M.rows != M.cols:
        raise UsageError("determinant of a non-square matrix")
    if M.rows == 0:
        return 1
    if M.field.q == 2:
        r = rank(M)
        return 1 if r == M.rows else 0
    t = M.field.tables()
    _, d = K.gen_rank_det(M.data.copy(), t.add, t.mul, t.neg, t.inv)
    return int(d)


def det_inv(M: MatF) -> tuple[int, Optional[MatF]]:
    """Determinant and inverse; the inverse is None exactly when singular."""
    if M.rows != M.cols:
        raise UsageError("det_inv of a non-square matrix")
    n = M.rows
    if n == 0:
        return 1, MatF(M.field, np.zeros((0, 0), dtype=np.int64))
    if M.field.q == 2:
        aug = np.concatenate(
            [M.data.astype(np.uint8), np.eye(n, dtype=np.uint8)], axis=1
        )
        packed = K.gf2_pack(aug)
        r = K.gf2_rref(packed, n, n)
        if r < n:
            return 0, None
        inv_bits = K.gf2_unpack(packed, 2 * n)[:, n:]
        return 1, MatF(M.field, inv_bits.astype(np.int64))
    t = M.field.tables()
    aug = np.concatenate([M.data, np.eye(n, dtype=np.int64)], axis=1)
    _, d = K.gen_rank_det(M.data.copy(), t.add, t.mul, t.neg, t.inv)
    if d == 0:
        return 0, None
    K.gen_rref(aug, n, t.add, t.mul, t.neg, t.inv)
    return int(d), MatF(M.field, aug[:, n:].copy())


def rank_distance(g: MatF, h: MatF) -> Fraction:
    """Normalized rank distance rank(g - h) / n, exact."""
    _check_same(g, h)
    if g.rows != g.cols:
        raise UsageError("rank distance is defined for square matrices")
    return Fraction(rank(msub(g, h)), g.rows)


# ---------------------------------------------------------------------------
# SL_n(q)


@dataclass
class SLElement:
    """A square matrix of determinant one."""

    mat: MatF

    def __post_init__(self):
        if self.mat.rows != self.mat.cols:
            raise UsageError("SL elements are square")

    @property
    def n(self) -> int:
        return self.mat.rows

    @property
    def field(self) -> Field:
        return self.mat.field

    def __eq__(self, other):
        return isinstance(other, SLElement) and self.mat == other.mat


def sl_element(M: MatF, *, check: bool = True) -> SLElement:
    if check and det(M) != 1:
        raise UsageError("matrix has determinant != 1")
    return SLElement(M)


def _sample_gl2_packed(n: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample a uniform invertible packed GF(2) matrix."""
    W = (n + 63) // 64
    rem = n & 63
    mask = np.uint64((1 << rem) - 1) if rem else None
    while True:
        M = rng.integers(0, 2 ** 64, size=(n, W), dtype=np.uint64)
        if mask is not None:
            M[:, -1] &= mask
        if K.gf2_rank(M.copy(), n, n) == n:
            return M


def sample_sl(n: int, field: Field, rng: np.random.Generator) -> SLElement:
    """Uniform element of SL_n(q): rejection-sampled GL followed by scaling
    the first row by det^-1 (a bijection from each determinant fiber)."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if field.q == 2:
        packed = _sample_gl2_packed(n, rng)
        data = K.gf2_unpack(packed, n).astype(np.int64)
        return SLElement(MatF(field, data))
    t = field.tables()
    while True:
        data = rng.integers(0, field.q, size=(n, n), dtype=np.int64)
        _, d = K.gen_rank_det(data.copy(), t.add, t.mul, t.neg, t.inv)
        if d != 0:
            break
    if d != 1:
        data[0, :] = t.mul[int(t.inv[d]), data[0, :]]
    return SLElement(MatF(field, data))


def central_distance(g: SLElement) -> tuple[Fraction, int]:
    """Distance to the nearest nonzero scalar matrix, with the best scalar."""
    M = g.mat
    best: Optional[Fraction] = None
    best_z = 1
    for z in range(1, M.field.q):
        d = rank_distance(M, scalar_mat(M.field, M.rows, z))
        if best is None or d < best:
            best, best_z = d, z
    assert best is not None
    return best, best_z


# ---------------------------------------------------------------------------
# serialization


def mat_to_text(M: MatF) -> str:
    """Header "n m q" then one line per row of element coefficient tuples."""
    lines = [f"{M.rows} {M.cols} {M.field.q}"]
    for i in range(M.rows):
        lines.append(" ".join(format_element(M.field, int(c)) for c in M.data[i]))
    return "\n".join(lines) + "\n"


def mat_from_text(text: str, field: Field) -> MatF:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    n, m, q = (int(t) for t in lines[0].split())
    if q != field.q:
        raise UsageError(f"matrix is over GF({q}), field is GF({field.q})")
    if len(lines) != n + 1:
        raise UsageError("row count does not match header")
    data = np.zeros((n, m), dtype=np.int64)
    for i, ln in enumerate(lines[1:]):
        toks = ln.split()
        if len(toks) != m:
            raise UsageError("column count does not match header")
        for j, tok in enumerate(toks):
            data[i, j] = parse_element(field, tok)
    return MatF(field, data)


def mat_to_json(M: MatF) -> dict:
    return {
        "rows": M.rows,
        "cols": M.cols,
        "q": M.field.q,
        "entries": [
            [list(M.field.prime_coeffs(int(c))) for c in M.data[i]]
            for i in range(M.rows)
        ],
    }
