"""Concentration of measure on (SL_n(q), rank metric, uniform measure):
constructive chain diameters, the exponential concentration bound,
empirical tails of 1-Lipschitz functions, and the metric Ramsey experiment
over decidable functional covers.

The concentration function itself is never estimated directly (membership
in a neighborhood of an arbitrary half-mass set is not decidable without
search); what is tested is exactly what the proofs use: chain witnesses,
Lipschitz tails, and interval covers pulled back through registered
1-Lipschitz functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .errors import UsageError
from .field import Field
from .matgf import (
    MatF,
    SLElement,
    _sample_gl2_packed,
    det,
    identity,
    mmul,
    msub,
    rank,
    sample_sl,
)

RationalLike = Union[Fraction, int, float, str]


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


# ---------------------------------------------------------------------------
# chain diameters


def stabilizer_reduce(g: SLElement) -> tuple[SLElement, SLElement]:
    """Witness h in SL_n(q) with h*g fixing e_n, det(h) = 1, rank(h - id) <= 2.

    h acts as an SL(2) rotation on a 2-dimensional space containing e_n and
    g*e_n and as the identity on a complement.
    """
    n = g.n
    if n < 2:
        raise UsageError("stabilizer reduction needs n >= 2")
    F = g.field
    t = F.tables()
    w = g.mat.data[:, n - 1].copy()  # g e_n
    last = n - 1
    if not w[:last].any():
        c = int(w[last])
        if c == 1:
            h = identity(F, n)
        else:
            data = np.eye(n, dtype=np.int64)
            data[0, 0] = c
            data[last, last] = F.inv(c)
            h = MatF(F, data)
    else:
        j = int(np.flatnonzero(w[:last])[0])
        wj_inv = F.inv(int(w[j]))
        # row functionals: phi_w = e_j / w_j ; phi_n = e_n - (w_n / w_j) e_j
        phi_w = np.zeros(n, dtype=np.int64)
        phi_w[j] = wj_inv
        phi_n = np.zeros(n, dtype=np.int64)
        phi_n[last] = 1
        phi_n[j] = t.neg[t.mul[int(w[last]), wj_inv]]
        # column vectors: u1 = -w - e_n ; u2 = e_n - w
        e_n = np.zeros(n, dtype=np.int64)
        e_n[last] = 1
        u1 = t.add[t.neg[w], t.neg[e_n]]
        u2 = t.add[e_n, t.neg[w]]
        data = np.eye(n, dtype=np.int64)
        data = t.add[data, t.mul[u1[:, None], phi_n[None, :]]]
        data = t.add[data, t.mul[u2[:, None], phi_w[None, :]]]
        h = MatF(F, data)
    h_el = SLElement(h)
    return h_el, SLElement(mmul(h, g.mat))


def verify_reduction(g: SLElement, h: SLElement, g_prime: SLElement) -> bool:
    """Exact postcondition check for one stabilizer_reduce witness."""
    n = g.n
    F = g.field
    if mmul(h.mat, g.mat) != g_prime.mat:
        return False
    col = g_prime.mat.data[:, n - 1]
    e_n = np.zeros(n, dtype=np.int64)
    e_n[n - 1] = 1
    if not np.array_equal(col, e_n):
        return False
    if det(h.mat) != 1:
        return False
    return rank(msub(h.mat, identity(F, n))) <= 2


@dataclass
class ChainProfile:
    """Certified per-step diameters of the stabilizer chain in SL_n(q)."""

    n: int
    q: int
    diameters: list[Fraction]        # a_i for i = 1..n
    samples_per_level: int
    failures: int

    @property
    def length_bound(self) -> float:
        return math.sqrt(sum(float(a) ** 2 for a in self.diameters))


def chain_profile(n: int, field: Field, samples: int,
                  rng: np.random.Generator) -> ChainProfile:
    """Certify a_i <= 2/n at every chain level by sampled reduction witnesses."""
    if n < 2:
        raise UsageError("chain profile needs n >= 2")
    failures = 0
    for i in range(2, n + 1):
        for _ in range(samples):
            g = sample_sl(i, field, rng)
            h, gp = stabilizer_reduce(g)
            if not verify_reduction(g, h, gp):
                failures += 1
    diameters = [Fraction(0)] + [Fraction(2, n)] * (n - 1)
    profile = ChainProfile(n, field.q, diameters, samples, failures)
    assert profile.length_bound <= 2.0 / math.sqrt(n) + 1e-12
    return profile


def levy_bound(r: RationalLike, n: int) -> float:
    """Concentration bound 2*exp(-r^2 n / 64) from the chain of diameters."""
    rf = float(_as_fraction(r))
    if not 0 < rf:
        raise UsageError("r must be positive")
    return 2.0 * math.exp(-(rf ** 2) * n / 64.0)


# ---------------------------------------------------------------------------
# registered 1-Lipschitz functions


@dataclass
class LipschitzFunction:
    """min over a finite anchor set of the rank distance; 1-Lipschitz because
    each x -> d(x, a) is, by bi-invariance of the metric."""

    f_id: str
    anchors: Optional[list[MatF]] = None  # None means the identity matrix

    def anchor_mats(self, n: int, field: Field) -> list[MatF]:
        if self.anchors is None:
            return [identity(field, n)]
        for a in self.anchors:
            if a.rows != n or a.field != field:
                raise UsageError("anchor dimensions or field do not match")
        return self.anchors


def registered_function(f_id: str, anchors: Optional[list[MatF]] = None) -> LipschitzFunction:
    if f_id == "dist_to_identity":
        return LipschitzFunction(f_id)
    if f_id in ("dist_to_anchor", "min_dist_to_set"):
        if not anchors:
            raise UsageError(f"{f_id} requires anchor matrices")
        return LipschitzFunction(f_id, anchors)
    raise UsageError(f"unknown Lipschitz function id {f_id!r}")


class _Evaluator:
    """Samples group elements and evaluates a registered function, staying in
    the packed representation over GF(2)."""

    def __init__(self, n: int, field: Field, func: LipschitzFunction,
                 rng: np.random.Generator):
        self.n = n
        self.field = field
        self.rng = rng
        self.packed = field.q == 2
        anchors = func.anchor_mats(n, field)
        if self.packed:
            self.anchors = [
                K.gf2_pack(a.data.astype(np.uint8)) for a in anchors
            ]
        else:
            self.anchors = anchors

    def sample(self):
        if self.packed:
            return _sample_gl2_packed(self.n, self.rng)
        return sample_sl(self.n, self.field, self.rng).mat

    def value_rank(self, x) -> int:
        """min over anchors of rank(x - a), in integer rank units."""
        if self.packed:
            return min(
                int(K.gf2_rank(np.bitwise_xor(x, a), self.n, self.n))
                for a in self.anchors
            )
        return min(rank(MatF(self.field, _sub_data(x, a))) for a in self.anchors)

    def distance_rank(self, x, y) -> int:
        if self.packed:
            return int(K.gf2_rank(np.bitwise_xor(x, y), self.n, self.n))
        return rank(MatF(self.field, _sub_data(x, y)))

    def translate(self, g, h):
        """Product g*h in the evaluator's representation."""
        if self.packed:
            return K.gf2_matmul(g, h, self.n, self.n, self.n)
        return mmul(g, h)


def _sub_data(x: MatF, a: MatF) -> np.ndarray:
    t = x.field.tables()
    return t.add[x.data, t.neg[a.data]]


def lipschitz_certificate(n: int, field: Field, func: LipschitzFunction,
                          pairs: int, rng: np.random.Generator) -> None:
    """Spot-check |f(x) - f(y)| <= d(x, y) exactly on random pairs."""
    ev = _Evaluator(n, field, func, rng)
    for _ in range(pairs):
        x, y = ev.sample(), ev.sample()
        if abs(ev.value_rank(x) - ev.value_rank(y)) > ev.distance_rank(x, y):
            raise UsageError(
                f"Lipschitz certificate fails for {func.f_id} at n={n}, q={field.q}"
            )


@dataclass
class TailRow:
    n: int
    q: int
    r: Fraction
    bound: float
    empirical: float
    stderr: float
    samples: int

    @property
    def binding(self) -> bool:
        return self.bound < 0.5

    @property
    def within(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.stderr


@dataclass
class LipschitzReport:
    n: int
    q: int
    f_id: str
    samples: int
    median: Fraction
    rows: list[TailRow]

    @property
    def violations(self) -> list[TailRow]:
        return [row for row in self.rows if row.binding and not row.within]


DEFAULT_R_GRID = tuple(Fraction(k, 20) for k in range(1, 20))


def lipschitz_concentration(n: int, field: Field, f_id: str,
                            r_list: Sequence[RationalLike],
                            samples: int, rng: np.random.Generator,
                            cert_pairs: int = 10_000,
                            anchors: Optional[list[MatF]] = None) -> LipschitzReport:
    """Empirical two-sided tails of a registered 1-Lipschitz function around
    its sample median, against the bound 2*exp(-r^2 n/64)."""
    func = registered_function(f_id, anchors)
    lipschitz_certificate(n, field, func, cert_pairs, rng)
    ev = _Evaluator(n, field, func, rng)
    values = np.empty(samples, dtype=np.int64)
    for s in range(samples):
        values[s] = ev.value_rank(ev.sample())
    values.sort()
    if samples % 2:
        med2 = 2 * int(values[samples // 2])  # median in half-rank units
    else:
        med2 = int(values[samples // 2 - 1]) + int(values[samples // 2])
    med = Fraction(med2, 2 * n)
    dev2 = np.abs(2 * values - med2)  # |2 v - 2 n med|, exact integers
    rows = []
    for r in r_list:
        rf = _as_fraction(r)
        # |v/n - med| >= r  <=>  den * |2v - med2| >= 2 n num
        count = int(np.sum(rf.denominator * dev2 >= 2 * n * rf.numerator))
        phat = count / samples
        stderr = math.sqrt(phat * (1.0 - phat) / samples)
        rows.append(TailRow(n, field.q, rf, levy_bound(rf, n), phat, stderr, samples))
    return LipschitzReport(n, field.q, f_id, samples, med, rows)


# ---------------------------------------------------------------------------
# functional covers and the Ramsey experiment


@dataclass(frozen=True)
class FunctionalCover:
    """Closed subintervals of [0,1] pulled back through a registered
    1-Lipschitz function; the interval system must have Lebesgue number eps."""

    f_id: str
    intervals: tuple[tuple[Fraction, Fraction], ...]
    eps: Fraction

    def __post_init__(self):
        if self.eps < 0:
            raise UsageError("eps must be >= 0")
        if not self.intervals:
            raise UsageError("cover needs at least one interval")
        for lo, hi in self.intervals:
            if not (0 <= lo <= hi <= 1):
                raise UsageError(f"interval [{lo}, {hi}] is not inside [0, 1]")
        if not _covers_unit(self.intervals):
            raise UsageError("intervals do not cover [0, 1]")
        if not _covers_unit(_eroded(self.intervals, self.eps)):
            raise UsageError(
                "cover has Lebesgue number below eps (eroded intervals leave a gap)"
            )


def _eroded(intervals, eps: Fraction):
    out = []
    for lo, hi in intervals:
        lo2 = lo + eps if lo > 0 else Fraction(0)
        hi2 = hi - eps if hi < 1 else Fraction(1)
        if lo2 <= hi2:
            out.append((lo2, hi2))
    return tuple(out)


def _covers_unit(intervals) -> bool:
    if not intervals:
        return False
    reach = Fraction(0)
    for lo, hi in sorted(intervals):
        if lo > reach:
            return False
        reach = max(reach, hi)
        if reach >= 1:
            return True
    return reach >= 1


def functional_erode(cover: FunctionalCover) -> FunctionalCover:
    """Shrink every interval by eps on each interior side; the preimage of a
    shrunk interval sits inside the erosion of the original preimage."""
    return FunctionalCover(cover.f_id, _eroded(cover.intervals, cover.eps),
                           Fraction(0))


def uniform_cover(m: int, eps: RationalLike,
                  f_id: str = "dist_to_identity") -> FunctionalCover:
    """m intervals [i/m - eps, (i+1)/m + eps] clamped to [0, 1]."""
    e = _as_fraction(eps)
    intervals = tuple(
        (max(Fraction(0), Fraction(i, m) - e), min(Fraction(1), Fraction(i + 1, m) + e))
        for i in range(m)
    )
    return FunctionalCover(f_id, intervals, e)


def ramsey_threshold(eps: RationalLike, k: int, m: int) -> float:
    """Dimension threshold N = 64 eps^-2 max(log 2k, log 2m)."""
    e = float(_as_fraction(eps))
    return 64.0 * e ** -2 * max(math.log(2 * k), math.log(2 * m))


@dataclass
class RamseyReport:
    n: int
    q: int
    eps: Fraction
    k: int
    m: int
    trials: int
    successes: int
    attempts: list[int]              # samples-to-success per trial (0 = failed)
    total_samples: int
    total_good: int
    threshold: float
    good_bound: float                # 1 - 2k exp(-eps^2 n / 64)

    @property
    def bound_applies(self) -> bool:
        return self.n > self.threshold

    @property
    def good_freq(self) -> float:
        return self.total_good / self.total_samples if self.total_samples else 0.0

    @property
    def good_stderr(self) -> float:
        if not self.total_samples:
            return 0.0
        p = self.good_freq
        return math.sqrt(p * (1.0 - p) / self.total_samples)

    @property
    def mean_samples_to_success(self) -> float:
        done = [a for a in self.attempts if a > 0]
        return sum(done) / len(done) if done else math.inf


def ramsey_search(n: int, field: Field, cover: FunctionalCover,
                  F: Sequence[MatF], trials: int, rng: np.random.Generator,
                  max_attempts: int = 1000,
                  anchors: Optional[list[MatF]] = None) -> RamseyReport:
    """Per trial, sample translates g until some single cover element contains
    g*F; membership is decided by evaluating the cover's function on each g*h."""
    k = len(F)
    if k == 0:
        raise UsageError("F must be nonempty")
    func = registered_function(cover.f_id, anchors)
    ev = _Evaluator(n, field, func, rng)
    if ev.packed:
        F_rep = [K.gf2_pack(h.data.astype(np.uint8)) for h in F]
    else:
        F_rep = list(F)
    successes = 0
    attempts_log: list[int] = []
    total_samples = 0
    total_good = 0
    for _ in range(trials):
        found = 0
        for attempt in range(1, max_attempts + 1):
            g = ev.sample()
            vals = [Fraction(ev.value_rank(ev.translate(g, h)), n) for h in F_rep]
            good = any(
                all(lo <= v <= hi for v in vals) for lo, hi in cover.intervals
            )
            total_samples += 1
            total_good += int(good)
            if good:
                found = attempt
                break
        if found:
            successes += 1
        attempts_log.append(found)
    m = len(cover.intervals)
    eps_f = float(cover.eps)
    bound = 1.0 - 2.0 * k * math.exp(-(eps_f ** 2) * n / 64.0)
    return RamseyReport(
        n, field.q, cover.eps, k, m, trials, successes, attempts_log,
        total_samples, total_good, ramsey_threshold(cover.eps, k, m), bound,
    )
