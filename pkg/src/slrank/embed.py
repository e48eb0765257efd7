"""The two isometric embeddings and levelled elements of the dyadic limit.

`diag_embed` doubles the matrix dimension block-diagonally at fixed field;
`quad_embed` halves the field degree and doubles the dimension through the
decomposition g = g0 + s*g1 over a quadratic extension; `chain_embed`
composes quad steps down a tower.  Cross-level distances promote both
operands explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import UsageError
from .field import Field, FieldCtx, QuadExt, Tower
from .matgf import MatF, SLElement, mmul, rank_distance, sl_element


@dataclass
class LevelledElement:
    """An element of SL_{2^level}(q), standing for a point of the dyadic limit."""

    level: int
    elem: SLElement

    def __post_init__(self):
        if self.elem.n != 2 ** self.level:
            raise UsageError(
                f"dimension {self.elem.n} does not match level {self.level}"
            )

    @property
    def field(self) -> Field:
        return self.elem.field


def lift(elem: SLElement) -> LevelledElement:
    """Wrap an SL element whose dimension is a power of two."""
    n = elem.n
    level = n.bit_length() - 1
    if 2 ** level != n:
        raise UsageError(f"dimension {n} is not a power of two")
    return LevelledElement(level, elem)


def diag_embed(x: LevelledElement) -> LevelledElement:
    """Block-diagonal doubling (g 0; 0 g); isometric and multiplicative."""
    n = x.elem.n
    out = np.zeros((2 * n, 2 * n), dtype=x.elem.mat.data.dtype)
    out[:n, :n] = x.elem.mat.data
    out[n:, n:] = x.elem.mat.data
    return LevelledElement(x.level + 1, SLElement(MatF(x.field, out)))


def promote(x: LevelledElement, level: int) -> LevelledElement:
    if level < x.level:
        raise UsageError("cannot demote a levelled element")
    while x.level < level:
        x = diag_embed(x)
    return x


def limit_distance(x: LevelledElement, y: LevelledElement) -> Fraction:
    """Rank distance after promoting both operands to a common level."""
    if x.field != y.field:
        raise UsageError("elements live over different fields")
    top = max(x.level, y.level)
    return rank_distance(promote(x, top).elem.mat, promote(y, top).elem.mat)


def split_matrix(M: MatF) -> tuple[MatF, MatF]:
    """Write M over a quadratic extension as M0 + s*M1 over the base."""
    ext = M.field
    if not isinstance(ext, QuadExt):
        raise UsageError("matrix is not over a quadratic extension")
    Q = ext.base.q
    return MatF(ext.base, M.data % Q), MatF(ext.base, M.data // Q)


def join_matrix(ext: QuadExt, M0: MatF, M1: MatF) -> MatF:
    if M0.field != ext.base or M1.field != ext.base:
        raise UsageError("components are not over the extension's base field")
    return MatF(ext, M0.data + ext.base.q * M1.data)


def quad_embed(M: MatF) -> MatF:
    """One step down the tower: ((g0, beta*g1), (g1, g0 + alpha*g1)).

    Multiplicative, determinant-preserving, and rank-doubling for a matrix
    over a quadratic extension.
    """
    ext = M.field
    if not isinstance(ext, QuadExt):
        raise UsageError("quad_embed needs a matrix over a quadratic extension")
    if M.rows != M.cols:
        raise UsageError("quad_embed is defined for square matrices")
    M0, M1 = split_matrix(M)
    base = ext.base
    t = base.tables()
    n = M.rows
    out = np.zeros((2 * n, 2 * n), dtype=np.int64)
    out[:n, :n] = M0.data
    out[:n, n:] = t.mul[ext.beta, M1.data]
    out[n:, :n] = M1.data
    out[n:, n:] = t.add[M0.data, t.mul[ext.alpha, M1.data]]
    return MatF(base, out)


def chain_embed(M: MatF, tower: Tower) -> LevelledElement:
    """Compose quad steps from the matrix's tower level all the way down to
    the ground field, returning a levelled element over GF(q)."""
    level = None
    for k in range(tower.depth + 1):
        if M.field == tower.field(k):
            level = k
            break
    if level is None:
        raise UsageError("matrix field is not a level of the tower")
    out = M
    for _ in range(level):
        out = quad_embed(out)
    return lift(sl_element(out))


def kernel_vectors(M: MatF) -> list[tuple[int, ...]]:
    """All kernel vectors of a small matrix by exhaustive scan (oracle use)."""
    F = M.field
    n = M.cols
    if F.q ** n > 1 << 20:
        raise UsageError("kernel scan too large")
    out = []
    for code in range(F.q ** n):
        v = []
        c = code
        for _ in range(n):
            v.append(c % F.q)
            c //= F.q
        img = [0] * M.rows
        for i in range(M.rows):
            acc = 0
            for j in range(n):
                acc = F.add(acc, F.mul(int(M.data[i, j]), v[j]))
            img[i] = acc
        if all(x == 0 for x in img):
            out.append(tuple(v))
    return out
