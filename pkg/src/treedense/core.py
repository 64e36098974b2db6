"""Bitstrings, cylinder-set measure algebra, finite pruned trees, level schedules.

Bitstrings are plain ``str`` over the alphabet ``01`` (the empty string is the
root). Finite sets of bitstrings stand for unions of cylinders in the space of
infinite bit sequences; all measures are exact :class:`~treedense.dyadic.Dyadic`
values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Iterator

from .dyadic import Dyadic


class PreconditionError(ValueError):
    """A documented precondition of an operation was violated."""


class ResourceCapError(RuntimeError):
    """An enumeration or refinement exceeded its configured cap."""


# ---------------------------------------------------------------------------
# bitstring helpers

def check_bits(s: str) -> str:
    if not isinstance(s, str) or s.strip("01") != "":
        raise PreconditionError(f"not a bitstring: {s!r}")
    return s


def shortlex(s: str) -> tuple[int, str]:
    """Sort key: length first, then lexicographic."""
    return (len(s), s)


def sort_strings(strings: Iterable[str]) -> list[str]:
    return sorted(strings, key=shortlex)


def all_strings(n: int) -> list[str]:
    """All strings of length n, lexicographically."""
    return ["".join(bits) for bits in itertools.product("01", repeat=n)]


def is_prefix_free(strings: Iterable[str]) -> bool:
    members = set(strings)
    for s in members:
        for i in range(len(s)):
            if s[:i] in members:
                return False
    return True


def minimal_cover(strings: Iterable[str]) -> frozenset[str]:
    """Prefix-free generator of the same cylinder union.

    Keeps exactly the members with no strict prefix in the set.
    """
    members = set(strings)
    kept = set()
    for s in members:
        if not any(s[:i] in members for i in range(len(s))):
            kept.add(s)
    return frozenset(kept)


def measure(strings: Iterable[str]) -> Dyadic:
    """Uniform measure of the union of cylinders (overlaps counted once)."""
    total = Dyadic.zero()
    for s in minimal_cover(strings):
        total = total + Dyadic.pow2(-len(s))
    return total


def relative_measure(sigma: str, strings: Iterable[str]) -> Dyadic:
    """Measure of the cylinder union inside <sigma>, rescaled by 2**len(sigma)."""
    check_bits(sigma)
    members = set(strings)
    if any(sigma.startswith(v) for v in members if len(v) <= len(sigma)):
        return Dyadic.one()
    tails = {v[len(sigma):] for v in members if v.startswith(sigma)}
    return measure(tails)


def concat(left: Iterable[str], right: Iterable[str]) -> frozenset[str]:
    return frozenset(a + b for a in left for b in right)


def concat_power(strings: Iterable[str], k: int) -> frozenset[str]:
    """k-fold concatenation of a prefix-free set with itself."""
    members = frozenset(strings)
    if k < 1:
        raise PreconditionError("concat_power needs k >= 1")
    if not is_prefix_free(members):
        raise PreconditionError("concat_power requires a prefix-free set")
    result = members
    for _ in range(k - 1):
        result = concat(result, members)
    return result


def overlap_measure(first: Iterable[str], second: Iterable[str]) -> Dyadic:
    """Exact measure of the intersection of two cylinder unions."""
    a_cover = minimal_cover(first)
    b_cover = minimal_cover(second)
    total = Dyadic.zero()
    for a in a_cover:
        for b in b_cover:
            if a.startswith(b) or b.startswith(a):
                total = total + Dyadic.pow2(-max(len(a), len(b)))
    return total


def overlap_minus_measure(
    first: Iterable[str], second: Iterable[str], removed: Iterable[str]
) -> Dyadic:
    """Exact measure of (<first> ∩ <second>) − <removed>."""
    a_cover = minimal_cover(first)
    b_cover = minimal_cover(second)
    r_members = frozenset(removed)
    depth = max([len(s) for s in a_cover | b_cover] or [0])

    def walk(node: str) -> Dyadic:
        if node in r_members or any(node[:i] in r_members for i in range(len(node))):
            return Dyadic.zero()
        in_a = any(node[:i] in a_cover for i in range(len(node) + 1))
        in_b = any(node[:i] in b_cover for i in range(len(node) + 1))
        if in_a and in_b:
            # whole cylinder is in the intersection; subtract what <removed>
            # still takes out below this node
            inside = relative_measure(node, r_members)
            return (Dyadic.one() - inside).scale2(-len(node))
        if len(node) >= depth:
            return Dyadic.zero()
        return walk(node + "0") + walk(node + "1")

    return walk("")


# ---------------------------------------------------------------------------
# finite pruned trees

@dataclass(frozen=True)
class FiniteTree:
    """Finite pruned tree of a declared height, stored as its leaf set.

    Every node is a prefix of some leaf, so prunedness is structural.
    """

    height: int
    leaves: frozenset[str]

    def __post_init__(self):
        if not self.leaves:
            raise PreconditionError("a finite tree is nonempty")
        for leaf in self.leaves:
            check_bits(leaf)
            if len(leaf) != self.height:
                raise PreconditionError(
                    f"leaf {leaf!r} does not have the declared height {self.height}"
                )

    @classmethod
    def from_leaves(cls, leaves: Iterable[str]) -> "FiniteTree":
        leaves = frozenset(leaves)
        heights = {len(w) for w in leaves}
        if len(heights) != 1:
            raise PreconditionError("leaves must share one length")
        return cls(heights.pop(), leaves)

    @classmethod
    def full(cls, height: int) -> "FiniteTree":
        return cls(height, frozenset(all_strings(height)))

    @classmethod
    def cylinder(cls, sigma: str, height: int) -> "FiniteTree":
        """Truncation of the cylinder <sigma> at the given height."""
        check_bits(sigma)
        if len(sigma) > height:
            raise PreconditionError("cylinder root longer than requested height")
        return cls(height, frozenset(sigma + tail for tail in all_strings(height - len(sigma))))

    @cached_property
    def nodes(self) -> frozenset[str]:
        found = set()
        for leaf in self.leaves:
            for i in range(self.height + 1):
                found.add(leaf[:i])
        return frozenset(found)

    def __contains__(self, item: str) -> bool:
        if len(item) > self.height:
            return False
        if len(item) == self.height:
            return item in self.leaves
        return any(leaf.startswith(item) for leaf in self.leaves)

    def nodes_at(self, depth: int) -> frozenset[str]:
        if depth > self.height or depth < 0:
            return frozenset()
        return frozenset(leaf[:depth] for leaf in self.leaves)

    def extensions(self, node: str, depth: int) -> frozenset[str]:
        """Nodes at the given depth extending (or equal to) node."""
        return frozenset(u for u in self.nodes_at(depth) if u.startswith(node))

    def leaf_count_below(self, node: str) -> int:
        return sum(1 for leaf in self.leaves if leaf.startswith(node))

    def truncate(self, depth: int) -> "FiniteTree":
        if depth > self.height or depth < 0:
            raise PreconditionError("truncation depth out of range")
        return FiniteTree(depth, self.nodes_at(depth))

    def branch_nodes(self) -> frozenset[str]:
        """Nodes with at least two incomparable extensions in the tree."""
        counts: dict[str, int] = {}
        for leaf in self.leaves:
            for i in range(self.height + 1):
                counts[leaf[:i]] = counts.get(leaf[:i], 0) + 1
        return frozenset(node for node, c in counts.items() if c >= 2)

    def measure(self) -> Dyadic:
        return Dyadic(len(self.leaves), self.height)

    def canonical_leaves(self) -> tuple[str, ...]:
        return tuple(sort_strings(self.leaves))

    def __repr__(self):
        inner = ",".join(self.canonical_leaves()[:6])
        more = "..." if len(self.leaves) > 6 else ""
        return f"FiniteTree(h={self.height}, [{inner}{more}])"


# ---------------------------------------------------------------------------
# level schedules and series diagnostics

@dataclass(frozen=True)
class AffineGapWitness:
    """Caller-asserted claim gap(n) >= offset + slope*n for all n (slope >= 1)."""

    offset: int
    slope: int

    def __post_init__(self):
        if self.slope < 1:
            raise PreconditionError("affine gap witness needs slope >= 1")


@dataclass(frozen=True)
class GapUpperBound:
    """Caller-asserted claim gap(n) <= bound for all n."""

    bound: int


class LevelSchedule:
    """Strictly increasing depth sequence with index 0 at depth 0 (the root).

    Closed-form constructors attach the exact gap witnesses their form
    justifies, so convergence verdicts never rest on a guess.
    """

    def __init__(
        self,
        depth_fn: Callable[[int], int],
        name: str,
        convergence_witness: AffineGapWitness | None = None,
        gap_bound: GapUpperBound | None = None,
    ):
        self._fn = depth_fn
        self.name = name
        self.convergence_witness = convergence_witness
        self.gap_bound = gap_bound
        self._memo: list[int] = []

    def value(self, n: int) -> int:
        if n < 0:
            raise PreconditionError("schedule index must be >= 0")
        while len(self._memo) <= n:
            idx = len(self._memo)
            depth = self._fn(idx)
            if idx == 0:
                if depth != 0:
                    raise PreconditionError("schedule must start at depth 0")
            elif depth <= self._memo[idx - 1]:
                raise PreconditionError(
                    f"schedule not strictly increasing at index {idx}"
                )
            self._memo.append(depth)
        return self._memo[n]

    def gap(self, n: int) -> int:
        return self.value(n + 1) - self.value(n)

    def agrees_with(self, other: "LevelSchedule", upto: int) -> bool:
        try:
            return all(self.value(k) == other.value(k) for k in range(upto + 1))
        except IndexError:
            return False

    # closed forms ---------------------------------------------------------

    @classmethod
    def linear(cls) -> "LevelSchedule":
        return cls(lambda n: n, "n", gap_bound=GapUpperBound(1))

    @classmethod
    def square(cls) -> "LevelSchedule":
        return cls(lambda n: n * n, "n2", convergence_witness=AffineGapWitness(1, 2))

    @classmethod
    def double_square(cls) -> "LevelSchedule":
        return cls(lambda n: 2 * n * n, "2n2", convergence_witness=AffineGapWitness(2, 4))

    @classmethod
    def constant_gap(cls, g: int) -> "LevelSchedule":
        if g < 1:
            raise PreconditionError("constant gap must be >= 1")
        return cls(lambda n: g * n, f"gap:{g}", gap_bound=GapUpperBound(g))

    @classmethod
    def ramp(cls, c: int) -> "LevelSchedule":
        """Gaps c, c+2, c+4, ...: depth(n) = n*(n-1) + c*n."""
        if c < 1:
            raise PreconditionError("ramp offset must be >= 1 (gap 0 otherwise)")
        return cls(
            lambda n: n * (n - 1) + c * n,
            f"ramp:{c}",
            convergence_witness=AffineGapWitness(c, 2),
        )

    @classmethod
    def from_gaps(cls, gaps: Iterable[int]) -> "LevelSchedule":
        gaps = tuple(gaps)
        depths = [0]
        for g in gaps:
            depths.append(depths[-1] + g)

        def fn(n: int) -> int:
            if n >= len(depths):
                raise IndexError(f"schedule defined up to index {len(depths) - 1}")
            return depths[n]

        return cls(fn, "gaps:" + ",".join(str(g) for g in gaps))

    def __repr__(self):
        return f"LevelSchedule({self.name})"


@dataclass(frozen=True)
class SeriesReport:
    partial: Dyadic
    tail_bound: Dyadic | None
    verdict: str  # converges | diverges | unknown
    terms: int


def _partial_sum(exponent: Callable[[int], int], count: int) -> Dyadic:
    total = Dyadic.zero()
    for n in range(count):
        total = total + Dyadic.pow2(-exponent(n))
    return total


def _series_verdict(
    exponent: Callable[[int], int],
    count: int,
    witness: AffineGapWitness | GapUpperBound | None,
) -> tuple[Dyadic | None, str]:
    if isinstance(witness, AffineGapWitness):
        for n in range(count):
            if exponent(n) < witness.offset + witness.slope * n:
                raise PreconditionError(f"affine witness falsified at index {n}")
        # geometric tail with ratio <= 1/2, summed from index `count`
        tail = Dyadic.pow2(1 - (witness.offset + witness.slope * count))
        return tail, "converges"
    if isinstance(witness, GapUpperBound):
        for n in range(count):
            if exponent(n) > witness.bound:
                raise PreconditionError(f"gap upper bound falsified at index {n}")
        return None, "diverges"
    return None, "unknown"


def series_partial(
    schedule: LevelSchedule,
    count: int,
    witness: AffineGapWitness | GapUpperBound | None = None,
) -> SeriesReport:
    """Partial sum of 2**(-gap(n)) over n < count, with a certified verdict.

    The verdict is "unknown" unless an affine lower witness (convergence) or a
    uniform upper bound (divergence) is supplied or attached to the schedule.
    """
    if count < 1:
        raise PreconditionError("series_partial needs count >= 1")
    if witness is None:
        witness = schedule.convergence_witness or schedule.gap_bound
    partial = _partial_sum(schedule.gap, count)
    tail, verdict = _series_verdict(schedule.gap, count, witness)
    return SeriesReport(partial=partial, tail_bound=tail, verdict=verdict, terms=count)


@dataclass(frozen=True)
class CompatReport:
    dominance_violations: tuple[int, ...]
    m_partial: Dyadic
    m_tail_bound: Dyadic | None
    m_verdict: str
    terms: int

    @property
    def dominance_ok(self) -> bool:
        return not self.dominance_violations

    @property
    def hypothesis_ok(self) -> bool:
        return self.dominance_ok and self.m_verdict == "converges"


def compat_check(
    l_schedule: LevelSchedule,
    m_schedule: LevelSchedule,
    count: int,
    m_witness: AffineGapWitness | GapUpperBound | None = None,
) -> CompatReport:
    """Check gap dominance and the shifted series over the target schedule.

    Dominance asks l.gap(n) >= m.gap(n) for n < count; the series summed is
    2**(-(m.gap(n) - n)), whose convergence needs the target gaps to outgrow n.
    """
    if count < 1:
        raise PreconditionError("compat_check needs count >= 1")
    violations = tuple(
        n for n in range(count) if l_schedule.gap(n) < m_schedule.gap(n)
    )

    def shifted(n: int) -> int:
        return m_schedule.gap(n) - n

    witness = m_witness
    if witness is None and m_schedule.convergence_witness is not None:
        base = m_schedule.convergence_witness
        if base.slope >= 2:
            witness = AffineGapWitness(base.offset, base.slope - 1)
    if witness is None and m_schedule.gap_bound is not None:
        # bounded gaps make the shifted terms grow; certify divergence by
        # falsifiability of the same claim on the shifted exponents
        bound = m_schedule.gap_bound.bound
        for n in range(count):
            if m_schedule.gap(n) > bound:
                raise PreconditionError(f"gap upper bound falsified at index {n}")
        return CompatReport(
            dominance_violations=violations,
            m_partial=_partial_sum(shifted, count),
            m_tail_bound=None,
            m_verdict="diverges",
            terms=count,
        )

    partial = _partial_sum(shifted, count)
    tail, verdict = _series_verdict(shifted, count, witness)
    return CompatReport(
        dominance_violations=violations,
        m_partial=partial,
        m_tail_bound=tail,
        m_verdict=verdict,
        terms=count,
    )
