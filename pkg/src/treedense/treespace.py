"""Schedule-aligned one-or-two-branching trees: sampling, counting, diagnostics.

The tree space consists of pruned trees in which every node sitting on a
schedule depth has one or two extensions at the next schedule depth. Sampling
follows the two-draws-with-replacement growth process; the level-uniform count
is exposed separately as ``count_prefixes``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .core import (
    FiniteTree,
    LevelSchedule,
    PreconditionError,
    ResourceCapError,
    all_strings,
    check_bits,
    shortlex,
    sort_strings,
)
from .dyadic import Dyadic

DEFAULT_ENUM_CAP = 10**6


@dataclass(frozen=True)
class RngSeed:
    """Reproducible seed: identical (seed, stream) reproduces identical draws."""

    seed: int
    stream: int = 0

    def rng(self) -> random.Random:
        mask = (1 << 64) - 1
        return random.Random(((self.seed & mask) << 64) | (self.stream & mask))


@dataclass(frozen=True)
class LevelTree:
    """Finite prefix of a schedule-aligned one-or-two-branching tree."""

    schedule: LevelSchedule
    level: int
    tree: FiniteTree

    def __post_init__(self):
        if self.tree.height != self.schedule.value(self.level):
            raise PreconditionError("tree height does not sit on the schedule")
        for k in range(self.level):
            for node in self.tree.nodes_at(self.schedule.value(k)):
                n_ext = len(self.tree.extensions(node, self.schedule.value(k + 1)))
                if not 1 <= n_ext <= 2:
                    raise PreconditionError(
                        f"node {node!r} has {n_ext} extensions at the next level"
                    )

    def slice_at(self, k: int) -> frozenset[str]:
        return self.tree.nodes_at(self.schedule.value(k))


@dataclass(frozen=True)
class LevelGrowth:
    """Per-level bookkeeping of one sampled growth pass."""

    level: int
    leaf_count: int
    single_children: int


def grow_random_tree(
    schedule: LevelSchedule, level: int, rng: random.Random
) -> tuple[list[str], list[LevelGrowth]]:
    """Grow leaves level by level; each leaf draws two extensions with replacement."""
    leaves = [""]
    stats = []
    for k in range(level):
        g = schedule.gap(k)
        singles = 0
        grown: list[str] = []
        for leaf in leaves:
            first = rng.getrandbits(g)
            second = rng.getrandbits(g)
            if first == second:
                singles += 1
            for suffix in sorted({first, second}):
                grown.append(leaf + format(suffix, f"0{g}b"))
        stats.append(LevelGrowth(level=k, leaf_count=len(leaves), single_children=singles))
        leaves = grown
    return leaves, stats


def sample_tree(schedule: LevelSchedule, level: int, seed: RngSeed) -> LevelTree:
    """Draw one tree prefix from the growth process."""
    if level < 0:
        raise PreconditionError("level must be >= 0")
    leaves, _ = grow_random_tree(schedule, level, seed.rng())
    return LevelTree(schedule, level, FiniteTree(schedule.value(level), frozenset(leaves)))


def count_prefixes(schedule: LevelSchedule, level: int) -> int:
    """Number of distinct level prefixes, by DP over leaf-count profiles."""
    if level < 0:
        raise PreconditionError("level must be >= 0")
    profile = {1: 1}
    for k in range(level):
        s = 1 << schedule.gap(k)
        single, pair = s, s * (s - 1) // 2
        grown: dict[int, int] = {}
        for j, count in profile.items():
            for t in range(j + 1):
                ways = math.comb(j, t) * pair**t * single ** (j - t)
                grown[j + t] = grown.get(j + t, 0) + count * ways
        profile = grown
    return sum(profile.values())


def branching_defects(level_tree: LevelTree) -> list[tuple[int, str]]:
    """Schedule-level nodes with exactly one next-level extension."""
    defects = []
    for k in range(level_tree.level):
        depth = level_tree.schedule.value(k)
        nxt = level_tree.schedule.value(k + 1)
        for node in sort_strings(level_tree.tree.nodes_at(depth)):
            if len(level_tree.tree.extensions(node, nxt)) == 1:
                defects.append((k, node))
    return defects


def schedule_single_extensions(
    tree: FiniteTree, schedule: LevelSchedule, level: int
) -> list[tuple[int, str]]:
    """Same defect scan for a bare tree aligned to a schedule."""
    out = []
    for k in range(level):
        depth, nxt = schedule.value(k), schedule.value(k + 1)
        for node in sort_strings(tree.nodes_at(depth)):
            if len(tree.extensions(node, nxt)) == 1:
                out.append((k, node))
    return out


def schedule_over_branching(
    tree: FiniteTree, schedule: LevelSchedule, level: int
) -> list[tuple[int, str, int]]:
    """Schedule nodes with more than two next-level extensions."""
    out = []
    for k in range(level):
        depth, nxt = schedule.value(k), schedule.value(k + 1)
        for node in sort_strings(tree.nodes_at(depth)):
            n_ext = len(tree.extensions(node, nxt))
            if n_ext > 2:
                out.append((k, node, n_ext))
    return out


def is_skeletal(tree: FiniteTree) -> str | None:
    """Main-branch prefix if the branch nodes form a chain, else None.

    Returns the longest spine prefix the finite tree determines: the common
    prefix of all leaves extending the deepest branch node.
    """
    branch = tree.branch_nodes()
    chain = sorted(branch, key=shortlex)
    for prev, cur in zip(chain, chain[1:]):
        if len(prev) == len(cur) or not cur.startswith(prev):
            return None
    anchor = chain[-1] if chain else ""
    below = [leaf for leaf in tree.leaves if leaf.startswith(anchor)]
    spine = below[0]
    for leaf in below[1:]:
        i = 0
        while i < len(spine) and i < len(leaf) and spine[i] == leaf[i]:
            i += 1
        spine = spine[:i]
    return spine


# ---------------------------------------------------------------------------
# tree classes and enumeration

@dataclass(frozen=True, eq=False)
class Extends:
    """Member trees must contain every node of the base tree."""

    base: FiniteTree


@dataclass(frozen=True, eq=False)
class PathsInside:
    """Member trees must stay inside the region tree (leafwise)."""

    region: FiniteTree


@dataclass(frozen=True, eq=False)
class ScheduleBranching:
    """Members are prefixes of the one-or-two-branching space for a schedule."""

    schedule: LevelSchedule


@dataclass(frozen=True)
class Skeletal:
    """Members must be truncations of skeletal trees."""


Constraint = Extends | PathsInside | ScheduleBranching | Skeletal


@dataclass(frozen=True, eq=False)
class TreeClass:
    """Finitely enumerable set of pruned trees of one height."""

    height: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        for c in self.constraints:
            if isinstance(c, Extends) and c.base.height > self.height:
                raise PreconditionError("Extends base taller than the class height")
            if isinstance(c, ScheduleBranching):
                self._schedule_level(c.schedule)

    def _schedule_level(self, schedule: LevelSchedule) -> int:
        k = 0
        while schedule.value(k) < self.height:
            k += 1
        if schedule.value(k) != self.height:
            raise PreconditionError("class height does not sit on the schedule")
        return k

    def contains(self, tree: FiniteTree) -> bool:
        if tree.height != self.height:
            return False
        for c in self.constraints:
            if isinstance(c, Extends):
                if not all(node in tree for node in c.base.nodes):
                    return False
            elif isinstance(c, PathsInside):
                d = min(self.height, c.region.height)
                if not all(leaf[:d] in c.region for leaf in tree.leaves):
                    return False
            elif isinstance(c, ScheduleBranching):
                level = self._schedule_level(c.schedule)
                for k in range(level):
                    for node in tree.nodes_at(c.schedule.value(k)):
                        if len(tree.extensions(node, c.schedule.value(k + 1))) > 2:
                            return False
            elif isinstance(c, Skeletal):
                if is_skeletal(tree) is None:
                    return False
        return True

    def members(self, cap: int = DEFAULT_ENUM_CAP) -> list[FiniteTree]:
        """All members in canonical order: fewest leaves first, then leafwise."""
        found = list(self._enumerate(cap))
        found.sort(key=lambda t: (len(t.leaves), tuple(sorted(t.leaves))))
        return found

    def _enumerate(self, cap: int) -> Iterator[FiniteTree]:
        required: dict[int, frozenset[str]] = {}
        for c in self.constraints:
            if isinstance(c, Extends):
                for d in range(c.base.height + 1):
                    required[d] = required.get(d, frozenset()) | c.base.nodes_at(d)
        regions = [c.region for c in self.constraints if isinstance(c, PathsInside)]
        schedules = [c.schedule for c in self.constraints if isinstance(c, ScheduleBranching)]
        # depth just grown -> schedule depths to recount against
        boundary: dict[int, list[int]] = {}
        for s in schedules:
            for k in range(self._schedule_level(s)):
                boundary.setdefault(s.value(k + 1), []).append(s.value(k))
        want_skeletal = any(isinstance(c, Skeletal) for c in self.constraints)
        budget = cap

        def allowed(node: str) -> bool:
            return all(
                len(node) > region.height or node in region for region in regions
            )

        def chain_ok(leaves: tuple[str, ...]) -> bool:
            counts: dict[str, int] = {}
            for leaf in leaves:
                for i in range(len(leaf) + 1):
                    counts[leaf[:i]] = counts.get(leaf[:i], 0) + 1
            chain = sorted((n for n, c in counts.items() if c >= 2), key=shortlex)
            return all(
                len(a) != len(b) and b.startswith(a) for a, b in zip(chain, chain[1:])
            )

        def expand(depth: int, leaves: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
            nonlocal budget
            budget -= 1
            if budget < 0:
                raise ResourceCapError(f"enumeration exceeded cap {cap}")
            if depth == self.height:
                yield leaves
                return
            need = required.get(depth + 1, frozenset())
            per_leaf: list[list[tuple[str, ...]]] = []
            for leaf in leaves:
                children = [leaf + b for b in "01" if allowed(leaf + b)]
                forced = tuple(ch for ch in children if ch in need)
                free = [ch for ch in children if ch not in need]
                options = set()
                for mask in range(1 << len(free)):
                    chosen = forced + tuple(ch for i, ch in enumerate(free) if mask >> i & 1)
                    if chosen:
                        options.add(tuple(sorted(chosen)))
                if not options:
                    return
                per_leaf.append(sorted(options))

            def combine(i: int, acc: tuple[str, ...]) -> Iterator[tuple[str, ...]]:
                if i == len(leaves):
                    yield acc
                    return
                for option in per_leaf[i]:
                    yield from combine(i + 1, acc + option)

            for grown in combine(0, ()):
                ok = True
                for base in boundary.get(depth + 1, ()):
                    per_node: dict[str, int] = {}
                    for w in grown:
                        per_node[w[:base]] = per_node.get(w[:base], 0) + 1
                    if any(v > 2 for v in per_node.values()):
                        ok = False
                        break
                if not ok:
                    continue
                if want_skeletal and not chain_ok(grown):
                    continue
                yield from expand(depth + 1, grown)

        for leaves in expand(0, ("",)):
            tree = FiniteTree(self.height, frozenset(leaves))
            if self.contains(tree):
                yield tree


def enumerate_class(tree_class: TreeClass, cap: int = DEFAULT_ENUM_CAP) -> Iterator[FiniteTree]:
    yield from tree_class.members(cap)


# ---------------------------------------------------------------------------
# density and branching subtrees

def density_profile(region: FiniteTree, zprefix: str) -> list[Dyadic]:
    """Finite-depth conditional densities of the region along a path prefix.

    Entry n is the measure of the region's leaf cylinders below the length-n
    prefix, rescaled by 2**n.
    """
    check_bits(zprefix)
    if len(zprefix) > region.height:
        raise PreconditionError("prefix longer than the region height")
    entries = []
    for n in range(len(zprefix) + 1):
        below = sum(1 for leaf in region.leaves if leaf.startswith(zprefix[:n]))
        entries.append(Dyadic(below, region.height).scale2(n))
    return entries


def prune_to_branching(
    tree: FiniteTree, schedule: LevelSchedule, level: int
) -> FiniteTree | None:
    """Largest subtree whose schedule nodes all keep two next-level extensions.

    A single bottom-up sweep computes the maximal fixpoint: valid subtrees are
    closed under union, and pruning a level leaves deeper levels untouched.
    Returns None exactly when no such subtree exists.
    """
    if tree.height != schedule.value(level):
        raise PreconditionError("tree height does not sit on the schedule")
    leaves = set(tree.leaves)
    for k in range(level - 1, -1, -1):
        depth, nxt = schedule.value(k), schedule.value(k + 1)
        for node in {w[:depth] for w in leaves}:
            extensions = {w[:nxt] for w in leaves if w.startswith(node)}
            if len(extensions) < 2:
                leaves = {w for w in leaves if not w.startswith(node)}
        if not leaves:
            return None
    return FiniteTree(tree.height, frozenset(leaves))
