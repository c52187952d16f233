"""K-types of the minimal representation of O(p, q) and its branching laws.

All labels are spherical-harmonic degrees, all arithmetic is exact: spectral
parameters are ``Fraction`` values with denominator 1 or 2.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParameterError, ParityError
from .model_spectra import harmonic_dim


@dataclass(frozen=True)
class KType:
    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ParameterError(f"K-type degrees must be >= 0, got ({self.a}, {self.b})")


@dataclass
class KTypeSet:
    """Multiset of degree labels (tuples) with multiplicities."""

    signature: tuple
    entries: Counter
    cutoff: int
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k, m in self.entries.items() if m < 1]
        if bad:
            raise ParameterError(f"multiplicities must be >= 1: {bad[:3]}")

    def labels(self) -> list:
        return sorted(self.entries)

    def __len__(self) -> int:
        return sum(self.entries.values())

    def __contains__(self, label) -> bool:
        return tuple(label) in self.entries

    def max_multiplicity(self) -> int:
        return max(self.entries.values(), default=0)

    def to_csv(self, path, header=None) -> None:
        width = len(next(iter(self.entries), ()))
        header = header or ([f"d{i}" for i in range(width)] + ["mult"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for lab in self.labels():
                w.writerow(list(lab) + [self.entries[lab]])


def _check_minrep(p: int, q: int):
    if p <= 2 or q <= 2:
        raise ParameterError(f"the minimal representation needs p, q > 2, got ({p}, {q})")
    if (p + q) % 2:
        raise ParityError(f"p + q must be even, got p={p}, q={q}")


def norm_factor(p: int, a: int) -> Fraction:
    """Ratio of the invariant norm to the L2(M) norm on the K-type of degree a on R^p."""
    return Fraction(a) + Fraction(p - 2, 2)


def minrep_ktypes(p: int, q: int, cutoff: int) -> KTypeSet:
    """(a, b) with a + p/2 = b + q/2 and max(a, b) <= cutoff, each with multiplicity one."""
    _check_minrep(p, q)
    shift = (q - p) // 2  # a = b + shift
    entries = Counter()
    for b in range(cutoff + 1):
        a = b + shift
        if 0 <= a <= cutoff:
            entries[(a, b)] = 1
    return KTypeSet((p, q), entries, cutoff, {"kind": "minimal"})


def yamabe_balance(p: int, q: int, a: int, b: int) -> Fraction:
    """(a + (p-2)/2)^2 - (b + (q-2)/2)^2, zero on minimal-representation K-types."""
    return (Fraction(a) + Fraction(p - 2, 2)) ** 2 - (Fraction(b) + Fraction(q - 2, 2)) ** 2


def _as_half(x) -> Fraction:
    f = Fraction(x)
    if f.denominator not in (1, 2):
        raise ParameterError(f"spectral parameter must be a half-integer, got {x}")
    return f


def _in_coset(lam: Fraction, p: int, q: int) -> bool:
    return (lam - Fraction(p + q, 2)).denominator == 1


def elliptic_rep_ktypes(p: int, q: int, lam, cutoff: int, sign: str = "+") -> KTypeSet:
    """K-types (m, n) of the elliptic representation pi_{sign, lam} of O(p, q).

    ``+``: m - n >= b and m - n = b mod 2, b = lam - p/2 + q/2 + 1.
    ``-``: m - n <= b, m - n = b mod 2, b = -lam + q/2 - p/2 - 1.
    Degrees with no harmonics (in one or two variables) are dropped.
    """
    if p < 2 or q < 1:
        raise ParameterError(f"elliptic representations need p > 1 and q >= 1, got ({p}, {q})")
    lam = _as_half(lam)
    if not _in_coset(lam, p, q):
        raise ParityError(f"lambda = {lam} is not in Z + {Fraction(p + q, 2)}")
    if not lam > -1:
        raise ParameterError(f"lambda must exceed -1, got {lam}")
    if sign == "+":
        bnd = lam - Fraction(p, 2) + Fraction(q, 2) + 1
    elif sign == "-":
        bnd = -lam + Fraction(q, 2) - Fraction(p, 2) - 1
    else:
        raise ParameterError(f"sign must be '+' or '-', got {sign!r}")
    bnd = int(bnd)  # integral because lam is in Z + (p+q)/2
    entries = Counter()
    for m in range(cutoff + 1):
        if harmonic_dim(p, m) == 0:
            continue
        for n in range(cutoff + 1):
            if harmonic_dim(q, n) == 0:
                continue
            d = m - n
            ok = d >= bnd if sign == "+" else d <= bnd
            if ok and (d - bnd) % 2 == 0:
                entries[(m, n)] = 1
    desc = {"kind": f"elliptic{sign}", "lambda": lam, "b": bnd, "discrete_series": lam > 0}
    return KTypeSet((p, q), entries, cutoff, desc)


def harmonic_branching(q1: int, q2: int, b: int) -> list[tuple[int, int, int]]:
    """Restriction of H^b(R^{q1+q2}) to O(q1) x O(q2): (b1, b2, multiplicity).

    Pairs with b1 + b2 <= b and b1 + b2 = b mod 2, dropping degrees that carry
    no harmonics in one or two variables.
    """
    if q1 < 1 or q2 < 1:
        raise ParameterError(f"harmonic_branching needs q', q'' >= 1, got ({q1}, {q2})")
    out = []
    for b1 in range(b + 1):
        for b2 in range(b - b1 + 1):
            if (b - b1 - b2) % 2 == 0 and harmonic_dim(q1, b1) > 0 and harmonic_dim(q2, b2) > 0:
                out.append((b1, b2, 1))
    return out


def branching_dimension_gap(q1: int, q2: int, b: int) -> int:
    """dim H^b(R^{q1+q2}) minus the summed dimensions of its branching; zero when the rule is right."""
    total = sum(harmonic_dim(q1, b1) * harmonic_dim(q2, b2) * m for b1, b2, m in harmonic_branching(q1, q2, b))
    return harmonic_dim(q1 + q2, b) - total


@dataclass
class BranchingReport:
    signature: tuple
    cutoff: int
    equal: bool
    lhs: KTypeSet
    rhs: KTypeSet
    witnesses: list
    plancherel: dict
    degenerate_weights: list
    excluded: int

    @property
    def lhs_count(self) -> int:
        return len(self.lhs)

    @property
    def rhs_count(self) -> int:
        return len(self.rhs)

    def contributing_l(self) -> list[int]:
        return sorted({lab[2] for lab in self.rhs.entries})


def plancherel_weight(q2: int, l: int) -> Fraction:
    """l + q''/2 - 1, the weight of the l-th summand in the branched norm."""
    return Fraction(l) + Fraction(q2, 2) - 1


def branching_verify_compact(p: int, q: int, q1: int, q2: int, cutoff: int) -> BranchingReport:
    """Compare both sides of the restriction to O(p, q') x O(q'') as multisets of (m, b', b'').

    LHS: minimal-representation K-types (a, b) with H^b(R^q) branched to
    O(q') x O(q'').  RHS: for each l, the K-types of pi_{+, l + q''/2 - 1} of
    O(p, q') tensored with H^l(R^{q''}).  A triple is compared only when m, b',
    b'' and the ambient degree b = m + (p - q)/2 are all strictly below the
    cutoff, so truncation cannot create a spurious mismatch.
    """
    _check_minrep(p, q)
    if q1 < 1 or q2 < 1 or q1 + q2 != q:
        raise ParameterError(f"need q' + q'' = q with q', q'' >= 1, got {q1} + {q2} vs {q}")
    shift = (p - q) // 2  # ambient b = m + shift

    def keep(m, b1, b2):
        b = m + shift
        return max(m, b1, b2, b) < cutoff and b >= 0

    lhs = Counter()
    excluded = 0
    for (a, b), mult in minrep_ktypes(p, q, cutoff).entries.items():
        for b1, b2, m2 in harmonic_branching(q1, q2, b):
            if keep(a, b1, b2):
                lhs[(a, b1, b2)] += mult * m2
            else:
                excluded += 1
    rhs = Counter()
    weights, degenerate = {}, []
    for l in range(cutoff):
        if harmonic_dim(q2, l) == 0:
            continue
        lam = plancherel_weight(q2, l)
        weights[l] = lam
        if lam == 0:
            degenerate.append(l)
        for (m, n), mult in elliptic_rep_ktypes(p, q1, lam, cutoff).entries.items():
            if keep(m, n, l):
                rhs[(m, n, l)] += mult
            else:
                excluded += 1
    diff = sorted(set(lhs) ^ set(rhs) | {k for k in lhs if lhs[k] != rhs.get(k)})
    witnesses = [{"label": k, "lhs": lhs.get(k, 0), "rhs": rhs.get(k, 0)} for k in diff[:10]]
    sig = (p, q, q1, q2)
    return BranchingReport(sig, cutoff, not diff,
                           KTypeSet(sig, lhs, cutoff, {"side": "minimal restricted"}),
                           KTypeSet(sig, rhs, cutoff, {"side": "elliptic sum"}),
                           witnesses, weights, degenerate, excluded)


def admissible_signatures(max_pq: int = 10):
    """All (p, q, q', q'') with 3 <= p, q <= max_pq, p + q even, q' + q'' = q, q', q'' >= 1."""
    for p in range(3, max_pq + 1):
        for q in range(3, max_pq + 1):
            if (p + q) % 2:
                continue
            for q1 in range(1, q):
                yield p, q, q1, q - q1


def discrete_spectrum_params(p1: int, q1: int, p2: int, q2: int, lam_max) -> list[tuple[Fraction, tuple]]:
    """Parameters lambda > 1, lambda <= lam_max, of the discrete spectrum for O(p', q') x O(p'', q'').

    lambda must lie in Z + (p'+q')/2 and in Z + (p''+q'')/2; each admissible
    value is listed with both orientations (+, -) and (-, +).  When p + q is
    odd the two cosets are disjoint and the list is empty.
    """
    if min(p1, q1, p2, q2) < 0:
        raise ParameterError("signature entries must be >= 0")
    lam_max = Fraction(lam_max)
    out = []
    lam = Fraction(3, 2)
    while lam <= lam_max:
        if _in_coset(lam, p1, q1) and _in_coset(lam, p2, q2):
            out.append((lam, ("+", "-")))
            out.append((lam, ("-", "+")))
        lam += Fraction(1, 2)
    return out
