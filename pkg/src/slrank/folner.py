"""Folner-based partial-permutation representations of amenable groups and
group-ring elements, with exact rank accounting.

Supported groups: free abelian Z^d (boxes [0, 2^n)^d, which tile under the
translate set {0, 2^n}^d) and the discrete Heisenberg group (boxes
[0,2^n) x [0,2^n) x [0,4^n), which are Folner but do not tile under right
translation, so cross-level nesting checks are restricted to Z^d).

Representations are stored column-sparsely; rank computations materialize
a packed GF(2) matrix or a dense code matrix only transiently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import ResourceCapError, UsageError
from .field import Field
from .matgf import MatF, rank

FOLNER_CAP_GF2 = 1 << 14
FOLNER_CAP_GENERIC = 1 << 12


@dataclass(frozen=True)
class AmenableGroup:
    """Element-coded amenable group: integer tuples with an explicit product."""

    kind: str  # "free-abelian" or "heisenberg"
    d: int     # coordinate count

    def mul(self, a: tuple, b: tuple) -> tuple:
        if self.kind == "free-abelian":
            return tuple(x + y for x, y in zip(a, b))
        a1, a2, a3 = a
        b1, b2, b3 = b
        return (a1 + b1, a2 + b2, a3 + b3 + a1 * b2)

    def inv(self, a: tuple) -> tuple:
        if self.kind == "free-abelian":
            return tuple(-x for x in a)
        a1, a2, a3 = a
        return (-a1, -a2, -a3 + a1 * a2)

    def identity(self) -> tuple:
        return (0,) * self.d


def free_abelian(d: int) -> AmenableGroup:
    if d < 1:
        raise UsageError("rank must be >= 1")
    return AmenableGroup("free-abelian", d)


def heisenberg() -> AmenableGroup:
    return AmenableGroup("heisenberg", 3)


@dataclass(frozen=True)
class FolnerSpec:
    """A Folner set sequence for one of the supported groups."""

    group: AmenableGroup

    def radii(self, n: int) -> tuple[int, ...]:
        if self.group.kind == "free-abelian":
            return (2 ** n,) * self.group.d
        return (2 ** n, 2 ** n, 4 ** n)

    def size(self, n: int) -> int:
        out = 1
        for r in self.radii(n):
            out *= r
        return out

    def contains(self, x: tuple, n: int) -> bool:
        return all(0 <= c < r for c, r in zip(x, self.radii(n)))

    def index_of(self, x: tuple, n: int) -> int:
        """Mixed-radix index of x in F_n (little-endian in the coordinates)."""
        idx = 0
        scale = 1
        for c, r in zip(x, self.radii(n)):
            idx += c * scale
            scale *= r
        return idx

    def element_at(self, idx: int, n: int) -> tuple:
        out = []
        for r in self.radii(n):
            out.append(idx % r)
            idx //= r
        return tuple(out)

    def tiles(self, n: int) -> list[tuple]:
        """Translate set D_n with F_{n+1} = disjoint union of F_n + c."""
        if self.group.kind != "free-abelian":
            raise UsageError("only the free abelian boxes tile exactly")
        side = 2 ** n
        d = self.group.d
        out = []
        for mask in range(2 ** d):
            out.append(tuple(side if (mask >> i) & 1 else 0 for i in range(d)))
        return out


@dataclass
class GroupRingElement:
    """Finitely supported field-coefficient function on a coded group."""

    field: Field
    coeffs: dict[tuple, int]

    def __post_init__(self):
        cleaned = {}
        for g, c in self.coeffs.items():
            self.field.check(c)
            if c != 0:
                cleaned[tuple(int(x) for x in g)] = int(c)
        self.coeffs = cleaned

    @property
    def support(self) -> list[tuple]:
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs


def _cap_for(field: Field) -> int:
    return FOLNER_CAP_GF2 if field.q == 2 else FOLNER_CAP_GENERIC


def _check_cap(spec: FolnerSpec, n: int, field: Field, cap: Optional[int]) -> int:
    N = spec.size(n)
    limit = cap if cap is not None else _cap_for(field)
    if N > limit:
        raise ResourceCapError(
            f"|F_{n}| = {N} exceeds the matrix-size cap {limit}"
        )
    return N


def l_set(spec: FolnerSpec, support: Sequence[tuple], n: int) -> list[int]:
    """Indices of L_n = {x in F_n : s*x in F_n for every s in the support}."""
    G = spec.group
    out = []
    for idx in range(spec.size(n)):
        x = spec.element_at(idx, n)
        if all(spec.contains(G.mul(s, x), n) for s in support):
            out.append(idx)
    return out


def l_set_size(spec: FolnerSpec, h: tuple, n: int) -> int:
    return len(l_set(spec, [h], n))


def folner_lower_bound(spec: FolnerSpec, h: tuple, n: int) -> Fraction:
    """Provable bound |L_n^h|/|F_n| >= 1 - c_h * 2^-n from the support geometry."""
    if spec.group.kind == "free-abelian":
        c_h = spec.group.d * max((abs(c) for c in h), default=0)
    else:
        a, b, c = h
        c_h = 2 * abs(a) + abs(b) + abs(c)
    return max(Fraction(0), 1 - Fraction(c_h, 2 ** n))


# ---------------------------------------------------------------------------
# representations (column-sparse internally)


def _folner_columns(h: tuple, spec: FolnerSpec, n: int) -> np.ndarray:
    """targets[i] = row index of h * x_i, or -1 when h x_i leaves F_n."""
    G = spec.group
    N = spec.size(n)
    targets = np.full(N, -1, dtype=np.int64)
    for idx in range(N):
        y = G.mul(h, spec.element_at(idx, n))
        if spec.contains(y, n):
            targets[idx] = spec.index_of(y, n)
    return targets


def _ring_columns(a: GroupRingElement, spec: FolnerSpec, n: int):
    """Per-column (rows, coeffs) lists; empty when x is outside L_n^a."""
    G = spec.group
    N = spec.size(n)
    support = a.support
    cols = []
    for idx in range(N):
        x = spec.element_at(idx, n)
        ys = [G.mul(s, x) for s in support]
        if all(spec.contains(y, n) for y in ys):
            cols.append(
                ([spec.index_of(y, n) for y in ys], [a.coeffs[s] for s in support])
            )
        else:
            cols.append(([], []))
    return cols


def _dense_from_columns(field: Field, N: int, cols) -> MatF:
    data = np.zeros((N, N), dtype=np.int64)
    t = field.tables()
    for j, (rows, coeffs) in enumerate(cols):
        for i, c in zip(rows, coeffs):
            data[i, j] = t.add[data[i, j], c]
    return MatF(field, data)


def _packed_rank_from_bit_columns(N: int, cols) -> int:
    """Rank over GF(2) of the matrix whose column j has ones at cols[j]."""
    W = (N + 63) // 64
    M = np.zeros((N, W), dtype=np.uint64)
    for j, rows in enumerate(cols):
        w = j >> 6
        bit = np.uint64(1 << (j & 63))
        for i in rows:
            M[i, w] ^= bit
    return int(K.gf2_rank(M, N, N))


def folner_rep(h: tuple, spec: FolnerSpec, n: int, field: Field,
               cap: Optional[int] = None) -> MatF:
    """Partial-permutation matrix: e_x -> e_{h x} on L_n^h, zero elsewhere."""
    N = _check_cap(spec, n, field, cap)
    targets = _folner_columns(h, spec, n)
    data = np.zeros((N, N), dtype=np.int64)
    for j, i in enumerate(targets):
        if i >= 0:
            data[i, j] = 1
    return MatF(field, data)


def ring_rep(a: GroupRingElement, spec: FolnerSpec, n: int,
             field: Optional[Field] = None, cap: Optional[int] = None) -> MatF:
    """Group-ring action on L_n^a: e_x -> sum_s a(s) e_{s x}, zero outside."""
    if field is not None and field != a.field:
        raise UsageError("field does not match the ring element's coefficients")
    field = a.field
    N = _check_cap(spec, n, field, cap)
    return _dense_from_columns(field, N, _ring_columns(a, spec, n))


def normalized_rank(a: GroupRingElement, spec: FolnerSpec, n: int,
                    field: Optional[Field] = None,
                    cap: Optional[int] = None) -> Fraction:
    """rank(ring_rep(a)) / |F_n|, computed without the dense detour for GF(2)."""
    if field is not None and field != a.field:
        raise UsageError("field does not match the ring element's coefficients")
    field = a.field
    N = _check_cap(spec, n, field, cap)
    cols = _ring_columns(a, spec, n)
    if field.q == 2:
        r = _packed_rank_from_bit_columns(N, [rows for rows, _ in cols])
    else:
        r = rank(_dense_from_columns(field, N, cols))
    return Fraction(r, N)


def discreteness_profile(g: tuple, h: tuple, spec: FolnerSpec, levels: int,
                         field: Field, cap: Optional[int] = None) -> list[Fraction]:
    """Per level n = 1..levels: rank(folner_rep(g) - folner_rep(h)) / |F_n|."""
    out = []
    for n in range(1, levels + 1):
        N = _check_cap(spec, n, field, cap)
        tg = _folner_columns(g, spec, n)
        th = _folner_columns(h, spec, n)
        if field.q == 2:
            cols = []
            for j in range(N):
                rows = []
                if tg[j] >= 0:
                    rows.append(int(tg[j]))
                if th[j] >= 0:
                    if rows and rows[0] == int(th[j]):
                        rows.pop()  # equal targets cancel over GF(2)
                    else:
                        rows.append(int(th[j]))
                cols.append(rows)
            r = _packed_rank_from_bit_columns(N, cols)
        else:
            t = field.tables()
            data = np.zeros((N, N), dtype=np.int64)
            for j in range(N):
                if tg[j] >= 0:
                    data[tg[j], j] = t.add[data[tg[j], j], 1]
                if th[j] >= 0:
                    data[th[j], j] = t.add[data[th[j], j], int(t.neg[1])]
            r = rank(MatF(field, data))
        out.append(Fraction(r, N))
    return out


@dataclass
class NestingReport:
    """Cross-level comparison of a representation with its tiled promotion."""

    level: int
    size_next: int
    l_size: int
    distance: Fraction        # d(promotion, rep at level n+1)
    boundary: Fraction        # (|F_{n+1}| - #tiles * |L_n^h|) / |F_{n+1}|

    @property
    def within(self) -> bool:
        return self.distance <= self.boundary


def nesting_check(spec: FolnerSpec, h: tuple, n: int, field: Field,
                  cap: Optional[int] = None) -> NestingReport:
    """Distance between the block-diagonal promotion of level n and the level
    n+1 representation, against the exact boundary term. Z^d only."""
    if spec.group.kind != "free-abelian":
        raise UsageError("nesting checks need an exact tiling (Z^d only)")
    G = spec.group
    N1 = _check_cap(spec, n + 1, field, cap)
    targets_next = _folner_columns(h, spec, n + 1)
    tiles = spec.tiles(n)
    targets_n = _folner_columns(h, spec, n)
    promo = np.full(N1, -1, dtype=np.int64)
    for c in tiles:
        for j, i in enumerate(targets_n):
            x = spec.element_at(j, n)
            col = spec.index_of(G.mul(x, c), n + 1)
            if i >= 0:
                promo[col] = spec.index_of(G.mul(spec.element_at(int(i), n), c), n + 1)
    if field.q == 2:
        cols = []
        for j in range(N1):
            rows = []
            if promo[j] >= 0:
                rows.append(int(promo[j]))
            if targets_next[j] >= 0:
                if rows and rows[0] == int(targets_next[j]):
                    rows.pop()
                else:
                    rows.append(int(targets_next[j]))
            cols.append(rows)
        r = _packed_rank_from_bit_columns(N1, cols)
    else:
        t = field.tables()
        data = np.zeros((N1, N1), dtype=np.int64)
        for j in range(N1):
            if promo[j] >= 0:
                data[promo[j], j] = t.add[data[promo[j], j], 1]
            if targets_next[j] >= 0:
                data[targets_next[j], j] = t.add[
                    data[targets_next[j], j], int(t.neg[1])
                ]
        r = rank(MatF(field, data))
    l_size = int(np.sum(targets_n >= 0))
    boundary = Fraction(N1 - len(tiles) * l_size, N1)
    report = NestingReport(n, N1, l_size, Fraction(r, N1), boundary)
    if not report.within:
        raise UsageError(
            f"nesting distance {report.distance} exceeds boundary {report.boundary}"
        )
    return report


def check_tiling(spec: FolnerSpec, n: int) -> bool:
    """The translates {F_n + c : c in D_n} partition F_{n+1} (Z^d invariant)."""
    G = spec.group
    seen = set()
    for c in spec.tiles(n):
        for idx in range(spec.size(n)):
            y = G.mul(spec.element_at(idx, n), c)
            if not spec.contains(y, n + 1):
                return False
            key = spec.index_of(y, n + 1)
            if key in seen:
                return False
            seen.add(key)
    return len(seen) == spec.size(n + 1)
