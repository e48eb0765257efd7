"""Numba kernels for exact dense linear algebra over small finite fields.

Two families:

* ``gf2_*`` work on GF(2) matrices with rows packed 64 columns per uint64
  word (bit b of word w is column 64*w + b).  Elimination is blocked: per
  8-column block a register-resident byte reduction finds the pivot rows
  (exiting early once the block is full), the pivot rows are mutually
  reduced, and one pass with a 256-entry combination table clears the block
  in the remaining rows.

* ``gen_*`` work on integer code matrices over any field small enough for
  dense op tables (add, mul as q x q arrays; neg, inv as length-q arrays).

All kernels mutate their matrix argument; callers copy.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# GF(2), packed


def gf2_pack(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into rows of uint64 words, little-endian bits."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    n, m = bits.shape
    words = (m + 63) // 64
    by = np.packbits(bits, axis=1, bitorder="little")
    padded = np.zeros((n, words * 8), dtype=np.uint8)
    padded[:, : by.shape[1]] = by
    return padded.view(np.uint64)


def gf2_unpack(packed: np.ndarray, m: int) -> np.ndarray:
    """Inverse of gf2_pack; returns an n x m uint8 matrix."""
    by = packed.view(np.uint8)
    bits = np.unpackbits(by, axis=1, bitorder="little")
    return bits[:, :m].copy()


@njit(cache=True)
def gf2_rank(M, nrows, ncols):  # pragma: no cover - exercised via wrappers
    W = M.shape[1]
    table = np.zeros((256, W), dtype=np.uint64)
    written = np.empty(256, dtype=np.uint64)
    piv_col = np.empty(8, dtype=np.uint64)
    piv_byte = np.empty(8, dtype=np.uint64)
    one = np.uint64(1)
    r = 0
    col0 = 0
    while col0 < ncols and r < nrows:
        k = min(8, ncols - col0)
        w = col0 >> 6
        b = np.uint64(col0 & 63)
        blockmask = np.uint64((1 << k) - 1)
        npiv = 0
        i = r
        while i < nrows and npiv < k:
            byte = (M[i, w] >> b) & blockmask
            for a in range(npiv):
                if (byte >> piv_col[a]) & one:
                    byte ^= piv_byte[a]
                    for t in range(w, W):
                        M[i, t] ^= M[r + a, t]
            if byte != 0:
                j = np.uint64(0)
                while not ((byte >> j) & one):
                    j += one
                for a in range(npiv):
                    if (piv_byte[a] >> j) & one:
                        piv_byte[a] ^= byte
                        for t in range(w, W):
                            M[r + a, t] ^= M[i, t]
                dest = r + npiv
                if i != dest:
                    for t in range(W):
                        tmp = M[dest, t]
                        M[dest, t] = M[i, t]
                        M[i, t] = tmp
                piv_col[npiv] = j
                piv_byte[npiv] = byte
                npiv += 1
            i += 1
        if npiv == 0:
            col0 += k
            continue
        pivmask = np.uint64(0)
        for a in range(npiv):
            pivmask |= one << piv_col[a]
        for t in range(w, W):
            table[0, t] = 0
        written[0] = 0
        size = 1
        for a in range(npiv):
            bit = one << piv_col[a]
            for s in range(size):
                m_ = written[s]
                idx = m_ | bit
                for t in range(w, W):
                    table[idx, t] = table[m_, t] ^ M[r + a, t]
                written[size + s] = idx
            size <<= 1
        start = i if i > r + npiv else r + npiv
        for i2 in range(start, nrows):
            m_ = (M[i2, w] >> b) & pivmask
            if m_:
                for t in range(w, W):
                    M[i2, t] ^= table[m_, t]
        r += npiv
        col0 += k
    return r


@njit(cache=True)
def gf2_rref(M, nrows, ncols):  # pragma: no cover
    """Reduced row echelon form in place (plain elimination); returns rank.

    Row width may exceed ncols (augmented systems); only the first ncols
    columns are eligible as pivots while row updates span all words.
    """
    W = M.shape[1]
    one = np.uint64(1)
    r = 0
    for col in range(ncols):
        w = col >> 6
        b = np.uint64(col & 63)
        piv = -1
        for i in range(r, nrows):
            if (M[i, w] >> b) & one:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for t in range(W):
                tmp = M[r, t]
                M[r, t] = M[piv, t]
                M[piv, t] = tmp
        for i in range(nrows):
            if i != r and ((M[i, w] >> b) & one):
                for t in range(W):
                    M[i, t] ^= M[r, t]
        r += 1
        if r == nrows:
            break
    return r


@njit(cache=True)
def gf2_matmul(A, B, n, m, k):  # pragma: no cover
    """C = A @ B over GF(2); A is n x m, B is m x k, all packed."""
    Wc = B.shape[1]
    C = np.zeros((n, Wc), dtype=np.uint64)
    one = np.uint64(1)
    for i in range(n):
        for jw in range(A.shape[1]):
            word = A[i, jw]
            if word == 0:
                continue
            base = jw << 6
            for bb in range(64):
                if (word >> np.uint64(bb)) & one:
                    j = base + bb
                    if j < m:
                        for t in range(Wc):
                            C[i, t] ^= B[j, t]
    return C


# ---------------------------------------------------------------------------
# generic small field, table-driven


@njit(cache=True)
def gen_rank_det(M, addt, mult, negt, invt):  # pragma: no cover
    """Forward elimination; returns (rank, det_code).

    det_code is the determinant for square inputs (0 when singular) and
    meaningless otherwise.
    """
    n, m = M.shape
    r = 0
    det = 1
    for col in range(m):
        piv = -1
        for i in range(r, n):
            if M[i, col] != 0:
                piv = i
                break
        if piv < 0:
            det = 0
            continue
        if piv != r:
            for j in range(col, m):
                tmp = M[r, j]
                M[r, j] = M[piv, j]
                M[piv, j] = tmp
            det = negt[det]
        p = M[r, col]
        det = mult[det, p]
        ip = invt[p]
        for i in range(r + 1, n):
            x = M[i, col]
            if x != 0:
                f = mult[x, ip]
                for j in range(col, m):
                    M[i, j] = addt[M[i, j], negt[mult[f, M[r, j]]]]
        r += 1
        if r == n:
            break
    return r, det


@njit(cache=True)
def gen_rref(M, ncols, addt, mult, negt, invt):  # pragma: no cover
    """Gauss-Jordan on the first ncols columns; full-width row updates."""
    n, mtot = M.shape
    r = 0
    for col in range(ncols):
        piv = -1
        for i in range(r, n):
            if M[i, col] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(mtot):
                tmp = M[r, j]
                M[r, j] = M[piv, j]
                M[piv, j] = tmp
        ip = invt[M[r, col]]
        for j in range(mtot):
            M[r, j] = mult[M[r, j], ip]
        for i in range(n):
            if i != r:
                x = M[i, col]
                if x != 0:
                    for j in range(mtot):
                        M[i, j] = addt[M[i, j], negt[mult[x, M[r, j]]]]
        r += 1
        if r == n:
            break
    return r


@njit(cache=True)
def gen_matmul(A, B, addt, mult):  # pragma: no cover
    n, m = A.shape
    k = B.shape[1]
    C = np.zeros((n, k), dtype=A.dtype)
    for i in range(n):
        for t in range(m):
            a = A[i, t]
            if a != 0:
                for j in range(k):
                    b = B[t, j]
                    if b != 0:
                        C[i, j] = addt[C[i, j], mult[a, b]]
    return C


@njit(cache=True)
def gen_matvec(A, v, addt, mult):  # pragma: no cover
    n, m = A.shape
    out = np.zeros(n, dtype=A.dtype)
    for i in range(n):
        acc = 0
        for t in range(m):
            a = A[i, t]
            if a != 0 and v[t] != 0:
                acc = addt[acc, mult[a, v[t]]]
        out[i] = acc
    return out


def warmup() -> None:
    """Trigger JIT compilation of all kernels on tiny inputs."""
    M = gf2_pack(np.eye(2, dtype=np.uint8))
    gf2_rank(M.copy(), 2, 2)
    gf2_rref(M.copy(), 2, 2)
    gf2_matmul(M, M, 2, 2, 2)
    addt = np.array([[0, 1], [1, 0]], dtype=np.int64)
    mult = np.array([[0, 0], [0, 1]], dtype=np.int64)
    negt = np.array([0, 1], dtype=np.int64)
    invt = np.array([0, 1], dtype=np.int64)
    E = np.eye(2, dtype=np.int64)
    gen_rank_det(E.copy(), addt, mult, negt, invt)
    gen_rref(E.copy(), 2, addt, mult, negt, invt)
    gen_matmul(E, E, addt, mult)
    gen_matvec(E, np.ones(2, dtype=np.int64), addt, mult)
