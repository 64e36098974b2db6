"""Window-nested hitting families, the induced tree map, and its experiments.

The family assigns to each index string a block of same-length strings, nested
along index extensions; the induced map sends a tree to the set of indices
whose blocks it meets. Reading fixed bit windows off a leaf recovers its index
in closed form, which gives a fast second route to the same map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import (
    FiniteTree,
    LevelSchedule,
    PreconditionError,
    ResourceCapError,
    all_strings,
    check_bits,
    sort_strings,
)
from .dyadic import Dyadic
from .kc import KCRequest
from .treespace import (
    LevelTree,
    RngSeed,
    grow_random_tree,
    schedule_over_branching,
    schedule_single_extensions,
)

FAMILY_DEPTH_CAP = 22  # level sets materialize 2**depth strings


def _check_dominance(l_schedule: LevelSchedule, m_schedule: LevelSchedule, level: int):
    for k in range(level):
        if m_schedule.gap(k) > l_schedule.gap(k):
            raise PreconditionError(
                f"gap dominance fails at level {k}: "
                f"{m_schedule.gap(k)} > {l_schedule.gap(k)}"
            )


@dataclass(frozen=True, eq=False)
class HittingFamily:
    """Blocks of source-level strings indexed by target-level strings."""

    l_schedule: LevelSchedule
    m_schedule: LevelSchedule
    level: int
    sets: Mapping[str, frozenset[str]]

    def level_keys(self, k: int) -> list[str]:
        width = self.m_schedule.value(k)
        return sorted(s for s in self.sets if len(s) == width)

    def index_of(self, tau: str) -> str:
        return window_index(tau, self.l_schedule, self.m_schedule)


def build_family(
    l_schedule: LevelSchedule, m_schedule: LevelSchedule, level: int
) -> HittingFamily:
    """Materialize the block family level by level.

    The block of an extended index collects, over the parent block, every
    source string that continues a parent member with the new index bits.
    """
    _check_dominance(l_schedule, m_schedule, level)
    if l_schedule.value(level) > FAMILY_DEPTH_CAP:
        raise ResourceCapError(
            f"family at depth {l_schedule.value(level)} would exceed 2^{FAMILY_DEPTH_CAP} strings"
        )
    sets: dict[str, frozenset[str]] = {"": frozenset({""})}
    previous = [""]
    for k in range(1, level + 1):
        m_bits = m_schedule.gap(k - 1)
        pad = l_schedule.gap(k - 1) - m_bits
        current = []
        for parent in previous:
            block = sets[parent]
            for rho in all_strings(m_bits):
                members = frozenset(
                    tau + rho + tail for tau in block for tail in all_strings(pad)
                )
                sets[parent + rho] = members
                current.append(parent + rho)
        previous = current
    return HittingFamily(l_schedule, m_schedule, level, sets)


def window_index(tau: str, l_schedule: LevelSchedule, m_schedule: LevelSchedule) -> str:
    """Closed-form index of a source string: concatenate its window bits."""
    check_bits(tau)
    k = 0
    while l_schedule.value(k) < len(tau):
        k += 1
    if l_schedule.value(k) != len(tau):
        raise PreconditionError(f"length {len(tau)} is not a schedule depth")
    pieces = []
    for j in range(k):
        start = l_schedule.value(j)
        pieces.append(tau[start : start + m_schedule.gap(j)])
    return "".join(pieces)


def family_image(tree: LevelTree, family: HittingFamily) -> FiniteTree:
    """Image tree by the definition: indices whose blocks the tree meets."""
    if tree.level > family.level:
        raise PreconditionError("tree level exceeds the family level")
    if not tree.schedule.agrees_with(family.l_schedule, tree.level):
        raise PreconditionError("tree schedule does not match the family")
    leaves = frozenset(tree.tree.leaves)
    image = [
        sigma
        for sigma in family.level_keys(tree.level)
        if not leaves.isdisjoint(family.sets[sigma])
    ]
    return FiniteTree(family.m_schedule.value(tree.level), frozenset(image))


def image_slices(tree: LevelTree, family: HittingFamily) -> dict[int, frozenset[str]]:
    """Definition-computed image slice at every level up to the tree level."""
    slices = {}
    for k in range(tree.level + 1):
        nodes = tree.slice_at(k)
        slices[k] = frozenset(
            sigma
            for sigma in family.level_keys(k)
            if not nodes.isdisjoint(family.sets[sigma])
        )
    return slices


def window_image(
    tree: LevelTree, l_schedule: LevelSchedule, m_schedule: LevelSchedule
) -> FiniteTree:
    """Image tree by window reads; agrees with the definition route."""
    if not tree.schedule.agrees_with(l_schedule, tree.level):
        raise PreconditionError("tree schedule does not match the window schedules")
    leaves = frozenset(
        window_index(w, l_schedule, m_schedule) for w in tree.tree.leaves
    )
    return FiniteTree(m_schedule.value(tree.level), leaves)


def transfer_requests(
    family: HittingFamily, certified: Iterable[tuple[str, int]]
) -> list[KCRequest]:
    """Spread certified index compressibility over the indexed blocks.

    Each (sigma, c) entry asserts a certified code of length |sigma| - c; every
    block member then gets a request shorter than itself by the same margin,
    costing exactly 2**(c - |sigma|) of code space per entry.
    """
    requests: list[KCRequest] = []
    for sigma, c in certified:
        check_bits(sigma)
        if sigma not in family.sets:
            raise PreconditionError(f"{sigma!r} is not an index of the family")
        for tau in sort_strings(family.sets[sigma]):
            if len(tau) - c < 0:
                raise PreconditionError(
                    f"margin {c} exceeds the block string length {len(tau)}"
                )
            requests.append(KCRequest(tau, len(tau) - c))
    return requests


# ---------------------------------------------------------------------------
# Monte Carlo verification

@dataclass(frozen=True)
class MCLevelStats:
    level: int
    source_bound: Dyadic  # union bound on a single-child source node
    source_defect_freq: float
    source_defect_se: float
    per_leaf_p: Dyadic  # exact single-child probability per leaf
    per_leaf_freq: float
    per_leaf_se: float
    per_leaf_events: int
    image_bound: Dyadic  # union bound on a single-child image node
    image_defect_freq: float
    image_defect_se: float
    image_over_branch_freq: float
    image_nodes: int


@dataclass(frozen=True)
class MCResult:
    l_name: str
    m_name: str
    level: int
    samples: int
    seed: int
    stream: int
    rows: tuple[MCLevelStats, ...]

    CSV_HEADER = (
        "level,source_bound,source_observed,source_se,"
        "per_leaf_p,per_leaf_observed,per_leaf_se,per_leaf_events,"
        "image_bound,image_observed,image_se,image_over_branch,image_nodes"
    )

    def csv_rows(self) -> list[str]:
        rows = [self.CSV_HEADER]
        for r in self.rows:
            rows.append(
                f"{r.level},{r.source_bound},{r.source_defect_freq!r},{r.source_defect_se!r},"
                f"{r.per_leaf_p},{r.per_leaf_freq!r},{r.per_leaf_se!r},{r.per_leaf_events},"
                f"{r.image_bound},{r.image_defect_freq!r},{r.image_defect_se!r},"
                f"{r.image_over_branch_freq!r},{r.image_nodes}"
            )
        return rows


def _binomial_se(p: float, n: int) -> float:
    if n == 0:
        return 0.0
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / n)


def mc_experiment(
    l_schedule: LevelSchedule,
    m_schedule: LevelSchedule,
    level: int,
    samples: int,
    seed: RngSeed,
) -> MCResult:
    """Sample trees and compare observed branching failures with exact bounds.

    Tracks, per level: the fraction of samples with at least one single-child
    source node against 2**(level - source gap); the same for image nodes
    against 2**(level - target gap); the pooled per-leaf single-child rate
    against its exact probability; and how often image nodes over-branch.
    """
    _check_dominance(l_schedule, m_schedule, level)
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    rng = seed.rng()

    leaf_events = [0] * level
    leaf_singles = [0] * level
    source_defects = [0] * level
    image_defects = [0] * level
    over_branch = [0] * level
    image_nodes = [0] * level

    for _ in range(samples):
        leaves, growth = grow_random_tree(l_schedule, level, rng)
        for g in growth:
            leaf_events[g.level] += g.leaf_count
            leaf_singles[g.level] += g.single_children
            if g.single_children:
                source_defects[g.level] += 1
        image = frozenset(
            window_index(w, l_schedule, m_schedule) for w in leaves
        )
        for k in range(level):
            depth, nxt = m_schedule.value(k), m_schedule.value(k + 1)
            nodes = {w[:depth] for w in image}
            image_nodes[k] += len(nodes)
            single = False
            for node in nodes:
                n_ext = len({w[:nxt] for w in image if w.startswith(node)})
                if n_ext == 1:
                    single = True
                elif n_ext > 2:
                    over_branch[k] += 1
            if single:
                image_defects[k] += 1

    rows = []
    for k in range(level):
        rows.append(
            MCLevelStats(
                level=k,
                source_bound=Dyadic.pow2(k - l_schedule.gap(k)),
                source_defect_freq=source_defects[k] / samples,
                source_defect_se=_binomial_se(source_defects[k] / samples, samples),
                per_leaf_p=Dyadic.pow2(-l_schedule.gap(k)),
                per_leaf_freq=(leaf_singles[k] / leaf_events[k]) if leaf_events[k] else 0.0,
                per_leaf_se=_binomial_se(
                    float(Dyadic.pow2(-l_schedule.gap(k))), leaf_events[k]
                ),
                per_leaf_events=leaf_events[k],
                image_bound=Dyadic.pow2(k - m_schedule.gap(k)),
                image_defect_freq=image_defects[k] / samples,
                image_defect_se=_binomial_se(image_defects[k] / samples, samples),
                image_over_branch_freq=(
                    over_branch[k] / image_nodes[k] if image_nodes[k] else 0.0
                ),
                image_nodes=image_nodes[k],
            )
        )
    return MCResult(
        l_name=l_schedule.name,
        m_name=m_schedule.name,
        level=level,
        samples=samples,
        seed=seed.seed,
        stream=seed.stream,
        rows=tuple(rows),
    )


# ---------------------------------------------------------------------------
# derived tree of a path and its inverse

def derived_tree(zprefix: str, depth: int) -> FiniteTree:
    """Tree whose paths bend off the source path at each of its zero bits.

    Each zero position i contributes the path (z[:i] + "1" + z) truncated at
    the requested depth; the truncated continuation of the path itself is the
    remaining leaf.
    """
    check_bits(zprefix)
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    if depth > len(zprefix):
        raise PreconditionError("insufficient source bits for the requested depth")
    zeros = [i for i, b in enumerate(zprefix) if b == "0"]
    if not zeros:
        raise PreconditionError("source prefix has no zero; the tree is empty")
    leaves = {(zprefix[:i] + "1" + zprefix)[:depth] for i in zeros}
    leaves.add(zprefix[:depth])
    return FiniteTree(depth, frozenset(leaves))


def decode_tree(tree: FiniteTree) -> str:
    """Recover the source prefix by walking the spine.

    A branch means the source had a zero (the bend takes the one side), a
    single child repeats the source bit, so the walk reads the prefix off the
    tree directly.
    """
    prefix = ""
    for _ in range(tree.height):
        zero_child = prefix + "0" in tree
        one_child = prefix + "1" in tree
        if zero_child and one_child:
            prefix += "0"
        elif zero_child:
            prefix += "0"
        else:
            prefix += "1"
    return prefix
