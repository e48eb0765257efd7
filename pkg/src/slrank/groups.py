"""Small-group engine for SL_n(q): enumeration, conjugacy classes, numeric
character tables, the normalized-character bound scan, conjugacy covering
numbers, and positive definite function machinery.

Character tables are computed by simultaneous diagonalization of class
multiplication matrices over the complex numbers (a random real combination
separates the common eigenvectors) and validated by orthogonality; all
downstream uses are inequalities with slack, so numeric values suffice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import NumericError, ResourceCapError, UsageError
from .field import Field, FieldCtx
from .matgf import MatF, SLElement, central_distance, det_inv, mat, sl_element

DEFAULT_ORDER_CAP = 50_000
CAYLEY_CAP = 2_500


def sl_order(n: int, q: int) -> int:
    """|SL_n(q)| = q^(n(n-1)/2) * prod_{i=2..n} (q^i - 1)."""
    order = q ** (n * (n - 1) // 2)
    for i in range(2, n + 1):
        order *= q ** i - 1
    return order


def transvection_generators(n: int, field: Field) -> list[np.ndarray]:
    """Elementary matrices id + c*E_ij over an additive basis of the field."""
    if isinstance(field, FieldCtx):
        basis = [field.p ** t for t in range(field.h)]
    else:  # quadratic extension: basis = base basis plus its shift by sigma
        basis = [c for c in range(field.q) if c in _additive_basis(field)]
    gens = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for c in basis:
                g = np.eye(n, dtype=np.int64)
                g[i, j] = c
                gens.append(g)
    return gens


def _additive_basis(field: Field) -> set[int]:
    # codes p^t under the nested pair encoding
    out, step = set(), 1
    total = field.h
    for _ in range(total):
        out.add(step)
        step *= field.p
    return out


class GroupTable:
    """Indexed element list of a finite matrix group, closed under products."""

    def __init__(self, n: int, field: Field, elements: list[tuple],
                 index: dict, gens: list[int]):
        self.n = n
        self.field = field
        self.elements = elements
        self.index = index
        self.gens = gens
        self.order = len(elements)
        t = field.tables()
        self._add = t.add.tolist()
        self._mul = t.mul.tolist()
        self._inv_ids: Optional[np.ndarray] = None
        self._cayley: Optional[np.ndarray] = None
        self._classes: Optional["ConjClasses"] = None

    # -- element ops ---------------------------------------------------------

    def mul_tuple(self, a: tuple, b: tuple) -> tuple:
        n, add, mul = self.n, self._add, self._mul
        out = []
        for i in range(n):
            arow = a[i * n:(i + 1) * n]
            for j in range(n):
                acc = 0
                for k in range(n):
                    x = arow[k]
                    if x:
                        y = b[k * n + j]
                        if y:
                            acc = add[acc][mul[x][y]]
                out.append(acc)
        return tuple(out)

    def mul_ids(self, i: int, j: int) -> int:
        return self.index[self.mul_tuple(self.elements[i], self.elements[j])]

    @property
    def identity_id(self) -> int:
        return 0

    def matrix(self, i: int) -> MatF:
        data = np.array(self.elements[i], dtype=np.int64).reshape(self.n, self.n)
        return MatF(self.field, data)

    def element_of(self, M: MatF) -> int:
        key = tuple(int(x) for x in M.data.ravel())
        if key not in self.index:
            raise UsageError("matrix is not a group element")
        return self.index[key]

    @property
    def inv_ids(self) -> np.ndarray:
        if self._inv_ids is None:
            out = np.empty(self.order, dtype=np.int64)
            for i in range(self.order):
                _, inv = det_inv(self.matrix(i))
                assert inv is not None
                out[i] = self.index[tuple(int(x) for x in inv.data.ravel())]
            self._inv_ids = out
        return self._inv_ids

    def cayley(self) -> np.ndarray:
        """Full multiplication table (order x order); small groups only."""
        if self._cayley is None:
            if self.order > CAYLEY_CAP:
                raise ResourceCapError(
                    f"group order {self.order} exceeds the Cayley cap {CAYLEY_CAP}"
                )
            table = np.empty((self.order, self.order), dtype=np.int32)
            for i in range(self.order):
                a = self.elements[i]
                row = table[i]
                for j in range(self.order):
                    row[j] = self.index[self.mul_tuple(a, self.elements[j])]
            self._cayley = table
        return self._cayley


def enumerate_group(n: int, field: Field, cap: int = DEFAULT_ORDER_CAP) -> GroupTable:
    """BFS closure of SL_n(q) from transvection generators."""
    predicted = sl_order(n, field.q)
    if predicted > cap:
        raise ResourceCapError(
            f"predicted order {predicted} of SL_{n}({field.q}) exceeds cap {cap}"
        )
    gen_mats = transvection_generators(n, field)
    ident = tuple(int(x) for x in np.eye(n, dtype=np.int64).ravel())
    elements = [ident]
    index = {ident: 0}
    G = GroupTable(n, field, elements, index, gens=[])
    queue = deque([ident])
    gens_t = [tuple(int(x) for x in g.ravel()) for g in gen_mats]
    while queue:
        a = queue.popleft()
        for g in gens_t:
            b = G.mul_tuple(a, g)
            if b not in index:
                index[b] = len(elements)
                elements.append(b)
                queue.append(b)
    G.order = len(elements)
    G.gens = [index[g] for g in gens_t]
    if G.order != predicted:
        raise NumericError(
            f"enumeration found {G.order} elements, formula predicts {predicted}"
        )
    return G


# ---------------------------------------------------------------------------
# conjugacy classes


@dataclass
class ConjClasses:
    group: GroupTable
    class_of: np.ndarray          # element id -> class id
    reps: list[int]               # class id -> representative element id
    sizes: np.ndarray             # class id -> size
    members: list[list[int]]      # class id -> element ids
    _support: Optional[np.ndarray] = dc_field(default=None, repr=False)

    @property
    def n_classes(self) -> int:
        return len(self.reps)

    def inverse_class(self, k: int) -> int:
        g = self.group
        return int(self.class_of[g.inv_ids[self.reps[k]]])

    def is_central(self, k: int) -> bool:
        return int(self.sizes[k]) == 1


def conjugacy_classes(G: GroupTable) -> ConjClasses:
    """Orbit partition under conjugation by the group generators."""
    inv = G.inv_ids
    class_of = np.full(G.order, -1, dtype=np.int64)
    reps: list[int] = []
    members: list[list[int]] = []
    for start in range(G.order):
        if class_of[start] >= 0:
            continue
        cid = len(reps)
        reps.append(start)
        class_of[start] = cid
        orbit = [start]
        queue = [start]
        while queue:
            x = queue.pop()
            for g in G.gens:
                y = G.mul_ids(g, G.mul_ids(x, int(inv[g])))
                if class_of[y] < 0:
                    class_of[y] = cid
                    orbit.append(y)
                    queue.append(y)
        members.append(sorted(orbit))
    sizes = np.array([len(m) for m in members], dtype=np.int64)
    assert int(sizes.sum()) == G.order
    return ConjClasses(G, class_of, reps, sizes, members)


def class_product_support(G: GroupTable, classes: ConjClasses) -> np.ndarray:
    """Boolean tensor S[i, j, k]: class k meets the product set C_i * C_j.

    Computed exactly by counting x in C_i with x^-1 z in C_j for a fixed
    z in C_k; only the support (count > 0) is kept.
    """
    if classes._support is not None:
        return classes._support
    r = classes.n_classes
    inv = G.inv_ids
    cls = classes.class_of
    S = np.zeros((r, r, r), dtype=bool)
    for k in range(r):
        z = classes.reps[k]
        for x in range(G.order):
            j = cls[G.mul_ids(int(inv[x]), z)]
            S[cls[x], j, k] = True
    classes._support = S
    return S


def structure_constant(G: GroupTable, classes: ConjClasses,
                       i: int, j: int, k: int) -> int:
    """Exact a_ijk: pairs (x, y) in C_i x C_j with x*y = z for fixed z in C_k."""
    z = classes.reps[k]
    inv = G.inv_ids
    count = 0
    for x in classes.members[i]:
        if classes.class_of[G.mul_ids(int(inv[x]), z)] == j:
            count += 1
    return count


def structure_constant_from_table(table: "CharTable", i: int, j: int, k: int) -> complex:
    """Character-theoretic a_ijk = |C_i||C_j|/|G| * sum_s X_s(i)X_s(j)conj(X_s(k))/d_s."""
    cl = table.classes
    order = cl.group.order
    vals = table.values
    acc = 0j
    for s in range(vals.shape[0]):
        acc += vals[s, i] * vals[s, j] * np.conj(vals[s, k]) / table.degrees[s]
    return acc * cl.sizes[i] * cl.sizes[j] / order


def covering_number(G: GroupTable, classes: ConjClasses, class_id: int,
                    max_steps: Optional[int] = None) -> Optional[int]:
    """Minimal m with supp(C^m) = all classes, or None if the support closure
    stabilizes or cycles short of the full group."""
    S = class_product_support(G, classes)
    r = classes.n_classes
    full = frozenset(range(r))
    current = frozenset([class_id])
    seen = {current}
    m = 1
    cap = max_steps if max_steps is not None else 4 * r + 4
    while m <= cap:
        if current == full:
            return m
        nxt = set()
        for i in current:
            nxt.update(np.flatnonzero(S[i, class_id]))
        nxt = frozenset(int(k) for k in nxt)
        m += 1
        if nxt in seen:
            return None
        seen.add(nxt)
        current = nxt
    return None


def group_center(G: GroupTable) -> list[int]:
    """Element ids commuting with every generator; must be the scalar
    matrices z*id with z^n = 1."""
    center = []
    for x in range(G.order):
        if all(G.mul_ids(x, g) == G.mul_ids(g, x) for g in G.gens):
            center.append(x)
    F = G.field
    scalars = []
    for z in range(1, F.q):
        if F.pow(z, G.n) == 1:
            data = np.zeros((G.n, G.n), dtype=np.int64)
            np.fill_diagonal(data, z)
            scalars.append(G.index[tuple(int(v) for v in data.ravel())])
    if sorted(center) != sorted(scalars):
        raise NumericError("center does not match the scalar matrices")
    return sorted(center)


# ---------------------------------------------------------------------------
# character tables (Burnside/Dixon, numeric)


@dataclass
class CharTable:
    classes: ConjClasses
    values: np.ndarray    # (n_irreducibles x n_classes) complex
    degrees: list[int]

    @property
    def n_irr(self) -> int:
        return self.values.shape[0]


def character_table(G: GroupTable, classes: Optional[ConjClasses] = None,
                    seed: int = 0, retries: int = 10,
                    max_classes: int = 200) -> CharTable:
    """Numerically validated character table.

    Simultaneously diagonalizes the class multiplication matrices through a
    random real linear combination; retries with a fresh combination when
    eigenvalues cluster closer than 1e-6 or validation fails.
    """
    if classes is None:
        classes = conjugacy_classes(G)
    r = classes.n_classes
    if r > max_classes:
        raise UsageError(f"{r} classes exceeds the supported maximum {max_classes}")
    inv = G.inv_ids
    cls = classes.class_of
    A = np.zeros((r, r, r), dtype=np.float64)
    for k in range(r):
        z = classes.reps[k]
        for x in range(G.order):
            A[cls[x], cls[G.mul_ids(int(inv[x]), z)], k] += 1.0
    rng = np.random.default_rng(seed)
    sizes = classes.sizes.astype(np.float64)
    last_err = "no attempt"
    for _ in range(retries):
        t = rng.standard_normal(r)
        M = np.tensordot(t, A, axes=(0, 0))
        w, V = scipy.linalg.eig(M)
        order_idx = np.argsort(w.real, kind="stable")
        gaps = np.abs(np.diff(w[order_idx]))
        scale = max(1.0, float(np.max(np.abs(w))))
        if r > 1 and gaps.min() < 1e-6 * scale:
            last_err = "eigenvalue clusters too close"
            continue
        U = V.copy()
        try:
            rows = []
            degrees = []
            for s in range(r):
                u = U[:, s]
                if abs(u[0]) < 1e-12:
                    raise NumericError("eigenvector vanishes at the identity class")
                u = u / u[0]
                denom = float(np.sum(np.abs(u) ** 2 / sizes))
                d = np.sqrt(G.order / denom)
                d_int = int(round(d))
                if abs(d - d_int) > 1e-6 or d_int < 1:
                    raise NumericError(f"non-integer degree {d}")
                rows.append(d_int * u / sizes)
                degrees.append(d_int)
            values = np.array(rows)
            table = CharTable(classes, values, degrees)
            _validate_table(G, table)
            _canonical_order(table)
            return table
        except NumericError as exc:
            last_err = str(exc)
            continue
    raise NumericError(f"character table failed after {retries} retries: {last_err}")


def _validate_table(G: GroupTable, table: CharTable, tol: float = 1e-8) -> None:
    r = table.n_irr
    sizes = table.classes.sizes.astype(np.float64)
    gram = (table.values * sizes) @ table.values.conj().T / G.order
    if np.max(np.abs(gram - np.eye(r))) > tol:
        raise NumericError("row orthogonality fails")
    if sum(d * d for d in table.degrees) != G.order:
        raise NumericError("degrees do not sum to the group order")


def _canonical_order(table: CharTable) -> None:
    """Trivial character first, the rest sorted by degree then values."""
    r = table.n_irr
    keys = []
    for s in range(r):
        vals = table.values[s]
        trivial = bool(np.max(np.abs(vals - 1.0)) < 1e-8)
        rounded = tuple(
            (round(v.real, 6), round(v.imag, 6)) for v in vals
        )
        keys.append((0 if trivial else 1, table.degrees[s], rounded))
    order_idx = sorted(range(r), key=lambda s: keys[s])
    table.values = table.values[order_idx]
    table.degrees = [table.degrees[s] for s in order_idx]
    # snap the trivial row exactly
    table.values[0] = 1.0


@dataclass
class GluckReport:
    q: int
    bound: float
    max_ratio: float
    witness_class: int
    witness_irr: int
    per_class: list[tuple[int, float]]  # (class id, max normalized modulus)

    @property
    def passed(self) -> bool:
        return self.max_ratio < self.bound


def gluck_check(G: GroupTable, table: CharTable) -> GluckReport:
    """Max over non-central classes and nontrivial irreducibles of
    |X(h)| / X(1); asserts the bound 8/q strictly."""
    q = G.field.q
    cl = table.classes
    best = -1.0
    wc, wi = -1, -1
    per_class = []
    for k in range(cl.n_classes):
        if cl.is_central(k):
            continue
        cmax = -1.0
        for s in range(1, table.n_irr):
            ratio = float(abs(table.values[s, k])) / table.degrees[s]
            if ratio > cmax:
                cmax = ratio
            if ratio > best:
                best, wc, wi = ratio, k, s
        per_class.append((k, cmax))
    report = GluckReport(q, 8.0 / q, best, wc, wi, per_class)
    if not report.passed:
        raise NumericError(
            f"normalized character bound fails: |X|/deg = {best} >= {8.0 / q} "
            f"at class {wc}, irreducible {wi}"
        )
    return report


def chartab_to_json(G: GroupTable, table: CharTable) -> dict:
    """JSON export: class representatives in matrix text form, sizes, and
    complex values as (re, im) pairs rounded to 12 digits."""
    from .matgf import mat_to_text

    cl = table.classes
    return {
        "n": G.n,
        "q": G.field.q,
        "order": G.order,
        "class_reps": [mat_to_text(G.matrix(r)) for r in cl.reps],
        "class_sizes": [int(s) for s in cl.sizes],
        "degrees": list(table.degrees),
        "values": [
            [[round(v.real, 12), round(v.imag, 12)] for v in row]
            for row in table.values
        ],
    }


# ---------------------------------------------------------------------------
# positive definite functions


@dataclass
class PDF:
    """A positive definite function as its value array over element ids."""

    group: GroupTable
    values: np.ndarray  # complex, length = order

    def __post_init__(self):
        if abs(self.values[self.group.identity_id] - 1.0) > 1e-9:
            raise UsageError("a positive definite function must be 1 at the identity")


def trivial_pdf(G: GroupTable) -> PDF:
    return PDF(G, np.ones(G.order, dtype=np.complex128))


def random_pdf(G: GroupTable, rng: np.random.Generator) -> PDF:
    """Matrix coefficient of the regular representation for a random vector:
    psi(g) = sum_x f(gx) conj(f(x)), normalized so psi(id) = 1."""
    cay = G.cayley()
    while True:
        f = rng.standard_normal(G.order) + 1j * rng.standard_normal(G.order)
        norm = float(np.sum(np.abs(f) ** 2))
        if norm > 0:
            break
    values = (f[cay] @ f.conj()) / norm
    values[G.identity_id] = 1.0
    return PDF(G, values)


def mix_pdfs(parts: Sequence[tuple[float, PDF]]) -> PDF:
    """Convex combination of positive definite functions."""
    weights = [w for w, _ in parts]
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise UsageError("weights must be a convex combination")
    G = parts[0][1].group
    values = np.zeros(G.order, dtype=np.complex128)
    for w, psi in parts:
        values += w * psi.values
    return PDF(G, values)


def conj_average(psi: PDF) -> PDF:
    """Average over conjugation: a character with the same value at id."""
    G = psi.group
    classes = _classes_of(G)
    values = np.empty_like(psi.values)
    for members in classes.members:
        values[members] = psi.values[members].mean()
    return PDF(G, values)


def _classes_of(G: GroupTable) -> ConjClasses:
    if G._classes is None:
        G._classes = conjugacy_classes(G)
    return G._classes


def gram_check(psi: PDF, rng: np.random.Generator, n_subsets: int = 8,
               subset_size: int = 64, tol: float = -1e-9) -> float:
    """Minimum eigenvalue of random principal Gram submatrices [psi(gj^-1 gi)]."""
    G = psi.group
    inv = G.inv_ids
    cay = G.cayley()
    worst = np.inf
    size = min(subset_size, G.order)
    for _ in range(n_subsets):
        idx = rng.choice(G.order, size=size, replace=False)
        gram = psi.values[cay[np.ix_(inv[idx], idx)]]
        w = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
        worst = min(worst, float(w[0]))
    if worst < tol:
        raise NumericError(f"Gram matrix has eigenvalue {worst} < {tol}")
    return worst


def pdf_decompose(chi: PDF, table: CharTable, tol: float = 1e-8) -> tuple[float, np.ndarray]:
    """Weights of a character in the normalized irreducible characters.

    Returns (lambda, lambda_pi) with lambda the trivial weight; all weights
    must be >= -tol and sum to 1 within tol, and the reconstruction must
    match within tol, else the input is flagged as not positive definite.
    """
    G = chi.group
    cl = table.classes
    # must be a class function
    for members in cl.members:
        vals = chi.values[members]
        if np.max(np.abs(vals - vals[0])) > 1e-10:
            raise UsageError("input is not a class function")
    chi_cls = np.array([chi.values[r] for r in cl.reps])
    sizes = cl.sizes.astype(np.float64)
    mu = np.array([
        table.degrees[s]
        * np.sum(sizes * chi_cls * np.conj(table.values[s])) / G.order
        for s in range(table.n_irr)
    ])
    if np.max(np.abs(mu.imag)) > tol or float(mu.real.min()) < -tol:
        raise UsageError("not positive definite: negative or complex weight")
    w = mu.real
    if abs(w.sum() - 1.0) > tol:
        raise UsageError(f"weights sum to {w.sum()}, not 1")
    normalized = table.values / np.array(table.degrees)[:, None]
    recon = w @ normalized
    if np.max(np.abs(recon - chi_cls)) > tol:
        raise UsageError("reconstruction from weights fails")
    return float(w[0]), w[1:]


@dataclass
class LemmaReport:
    """Outcome of one positive-definite-function lemma verification."""

    applicable: bool
    g_class: int = -1
    epsilon: float = 0.0
    t: float = 0.0                     # 2*eps + 16/q
    lam: float = 0.0
    lam_lower: float = 0.0             # 1 - eps - 8/q
    chi_dev_max: float = 0.0           # max |1 - chi(h)|
    density: float = 0.0               # |A| / |G|
    factorization_ok: bool = False     # every h = k1 k2 with k1, k2 in A
    star_max_violation: float = 0.0
    conclusion_max: float = 0.0        # max |1 - psi(h)|
    conclusion_bound: float = 0.0      # 9 sqrt(t)

    def passed(self, tol: float = 1e-8, star_tol: float = 1e-10) -> bool:
        if not self.applicable:
            return True
        return (
            self.lam > self.lam_lower - tol
            and self.chi_dev_max < self.t + tol
            and 3.0 * self.density >= 2.0
            and self.factorization_ok
            and self.star_max_violation <= star_tol
            and self.conclusion_max < self.conclusion_bound + tol
        )


def premise_epsilon(G: GroupTable, psi: PDF, g_id: int) -> float:
    """Exact max of |1 - psi(x^-1 g x)| over the conjugacy class of g."""
    classes = _classes_of(G)
    members = classes.members[int(classes.class_of[g_id])]
    return float(np.max(np.abs(1.0 - psi.values[members])))


def pdf_lemma_check(G: GroupTable, table: CharTable, psi: PDF, g_id: int,
                    eps: float, star_pairs: int = 10_000,
                    rng: Optional[np.random.Generator] = None) -> LemmaReport:
    """Verify the conjugation-averaging lemma and its proof's intermediate
    inequalities for one positive definite function and premise element."""
    classes = table.classes
    g_class = int(classes.class_of[g_id])
    if classes.is_central(g_class) or not (0 < eps < 1):
        return LemmaReport(applicable=False, g_class=g_class, epsilon=eps)
    if premise_epsilon(G, psi, g_id) >= eps:
        return LemmaReport(applicable=False, g_class=g_class, epsilon=eps)

    q = G.field.q
    t = 2.0 * eps + 16.0 / q
    chi = conj_average(psi)
    lam, _ = pdf_decompose(chi, table)
    chi_dev = float(np.max(np.abs(1.0 - np.array([chi.values[r] for r in classes.reps]))))

    a_mask = np.abs(1.0 - psi.values) < 3.0 * t
    density = float(a_mask.sum()) / G.order

    # every h factors as k1 k2 with both factors in A
    inv = G.inv_ids
    cay = G.cayley()
    a_ids = np.flatnonzero(a_mask)
    fact_ok = bool(np.all(a_mask[cay[inv[a_ids]]].any(axis=0)))

    if rng is None:
        rng = np.random.default_rng(0)
    gi = rng.integers(0, G.order, size=star_pairs)
    hi = rng.integers(0, G.order, size=star_pairs)
    lhs = np.abs(psi.values[gi] - psi.values[hi]) ** 2
    rhs = 2.0 * (1.0 - psi.values[cay[inv[gi], hi]].real)
    worst = float(np.max(lhs - rhs))
    worst = max(worst, 0.0)

    return LemmaReport(
        applicable=True,
        g_class=g_class,
        epsilon=eps,
        t=t,
        lam=lam,
        lam_lower=1.0 - eps - 8.0 / q,
        chi_dev_max=chi_dev,
        density=density,
        factorization_ok=fact_ok,
        star_max_violation=worst,
        conclusion_max=float(np.max(np.abs(1.0 - psi.values))),
        conclusion_bound=9.0 * t ** 0.5,
    )
