"""Hit-or-miss toolkit: hitting sets, hitting cost, pull-backs, envelopes.

A set of strings hits a class of trees when every member tree contains one of
the strings as a node. Costs weigh a hitting set by the measure of its
cylinders inside a reference tree, exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    FiniteTree,
    LevelSchedule,
    PreconditionError,
    all_strings,
    check_bits,
    measure,
    minimal_cover,
    overlap_measure,
    overlap_minus_measure,
    relative_measure,
    concat_power,
    shortlex,
    sort_strings,
)
from .dyadic import Dyadic
from .treespace import DEFAULT_ENUM_CAP, TreeClass


@dataclass(frozen=True)
class HittingReport:
    hits: bool
    witness: FiniteTree | None  # a missed member, present iff hits is False


class MissWitness(PreconditionError):
    """Raised when a hitting precondition fails; carries the missed tree."""

    def __init__(self, witness: FiniteTree):
        self.witness = witness
        super().__init__(f"set does not hit the class; missed {witness!r}")


def _tree_contains_any(tree: FiniteTree, strings: Sequence[str]) -> bool:
    return any(s in tree for s in strings)


def _first_miss(members: Sequence[FiniteTree], strings: Sequence[str]) -> int | None:
    for i, tree in enumerate(members):
        if not _tree_contains_any(tree, strings):
            return i
    return None


def hits(
    hitting_set: Iterable[str],
    tree_class: TreeClass,
    cap: int = DEFAULT_ENUM_CAP,
    width: int = 1,
) -> HittingReport:
    """Does every member of the class contain one of the strings?

    With width > 1 the member list is split into chunks checked concurrently;
    the reported witness is always the canonically first missed member.
    """
    strings = sort_strings({check_bits(s) for s in hitting_set})
    members = tree_class.members(cap)
    if width <= 1 or len(members) < 2 * width:
        miss = _first_miss(members, strings)
    else:
        chunk = (len(members) + width - 1) // width
        parts = [members[i : i + chunk] for i in range(0, len(members), chunk)]
        with ThreadPoolExecutor(max_workers=width) as pool:
            found = list(pool.map(lambda part: _first_miss(part, strings), parts))
        miss = None
        for j, local in enumerate(found):
            if local is not None:
                miss = j * chunk + local
                break
    if miss is None:
        return HittingReport(True, None)
    return HittingReport(False, members[miss])


def finite_subcover(
    hitting_set: Iterable[str],
    tree_class: TreeClass,
    cap: int = DEFAULT_ENUM_CAP,
) -> frozenset[str]:
    """Greedy-minimal hitting subset: no single element can still be dropped.

    Candidates are tried for removal longest first, so redundant fine-grained
    cylinders go before the coarse strings that cover them.
    """
    strings = sort_strings({check_bits(s) for s in hitting_set})
    members = tree_class.members(cap)
    miss = _first_miss(members, strings)
    if miss is not None:
        raise MissWitness(members[miss])
    kept = list(strings)
    for s in sorted(strings, key=shortlex, reverse=True):
        trial = [t for t in kept if t != s]
        if _first_miss(members, trial) is None:
            kept = trial
    return frozenset(kept)


def _cylinder_weight(sigma: str, region: FiniteTree) -> Dyadic:
    return overlap_measure([sigma], region.leaves)


def hitting_cost(
    tree_class: TreeClass,
    region: FiniteTree,
    level_len: int,
    mode: str = "exact",
    cap: int = DEFAULT_ENUM_CAP,
    width: int = 1,
) -> tuple[Dyadic, frozenset[str]]:
    """Cheapest (exact) or cheap (greedy) hitting set drawn from one level.

    Cost is the exact measure of the chosen cylinders inside the region.
    Exact mode searches all subsets of the level and is guarded accordingly.
    """
    if mode not in ("exact", "greedy"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if level_len > tree_class.height:
        raise PreconditionError("level is deeper than the class trees")
    candidates = all_strings(level_len)
    if mode == "exact" and len(candidates) > 20:
        raise PreconditionError(
            "exact mode is limited to levels with at most 20 strings"
        )
    members = tree_class.members(cap)
    if not members:
        return Dyadic.zero(), frozenset()
    weights = [_cylinder_weight(s, region) for s in candidates]
    masks = set()
    for tree in members:
        nodes = tree.nodes_at(level_len)
        mask = 0
        for i, s in enumerate(candidates):
            if s in nodes:
                mask |= 1 << i
        masks.add(mask)

    def cost_of(indices: Sequence[int]) -> Dyadic:
        total = Dyadic.zero()
        for i in indices:
            total = total + weights[i]
        return total

    if mode == "exact":
        best_key = None
        best: tuple[Dyadic, frozenset[str]] | None = None
        for hmask in range(1 << len(candidates)):
            if any(not hmask & m for m in masks):
                continue
            indices = [i for i in range(len(candidates)) if hmask >> i & 1]
            chosen = tuple(candidates[i] for i in indices)
            key = (cost_of(indices), len(indices), chosen)
            if best_key is None or key < best_key:
                best_key = key
                best = (key[0], frozenset(chosen))
        assert best is not None  # the full level always hits
        return best

    unhit = set(masks)
    chosen_idx: list[int] = []
    chosen_mask = 0
    while unhit:
        best_i = None
        best_gain = None  # (is_free, gain_num * other_weight comparison)
        for i in range(len(candidates)):
            if chosen_mask >> i & 1:
                continue
            gain = sum(1 for m in unhit if m >> i & 1)
            if gain == 0:
                continue
            w = weights[i]
            if best_i is None:
                best_i, best_gain = i, (w, gain)
                continue
            bw, bg = best_gain
            # prefer free cylinders, then larger gain per unit weight
            if w.is_zero() != bw.is_zero():
                better = w.is_zero()
            elif w.is_zero():
                better = gain > bg
            else:
                better = gain * bw.num * (1 << w.exp) > bg * w.num * (1 << bw.exp)
            if better:
                best_i, best_gain = i, (w, gain)
        assert best_i is not None
        chosen_idx.append(best_i)
        chosen_mask |= 1 << best_i
        unhit = {m for m in unhit if not m >> best_i & 1}
    chosen = frozenset(candidates[i] for i in sorted(chosen_idx))
    return cost_of(sorted(chosen_idx)), chosen


def pull_back(
    hprime: Iterable[str],
    region: FiniteTree,
    schedule: LevelSchedule,
    n: int,
) -> frozenset[str]:
    """Move a hitting set one schedule level up at bounded extra cost.

    Keeps exactly the level-n strings whose cylinder, with the old set removed,
    meets the region in measure at most 2**(-value(n+1)); the total overshoot
    is then at most 2**(value(n) - value(n+1)).
    """
    ln, ln1 = schedule.value(n), schedule.value(n + 1)
    old = frozenset(hprime)
    for s in old:
        check_bits(s)
        if len(s) != ln1:
            raise PreconditionError(f"{s!r} does not sit at schedule depth {ln1}")
    if region.height < ln1:
        raise PreconditionError("region is shallower than the next schedule depth")
    threshold = Dyadic.pow2(-ln1)
    pulled = []
    for tau in all_strings(ln):
        leftover = sum(
            1
            for leaf in region.leaves
            if leaf.startswith(tau) and leaf[:ln1] not in old
        )
        if Dyadic(leftover, region.height) <= threshold:
            pulled.append(tau)
    return frozenset(pulled)


# ---------------------------------------------------------------------------
# envelopes

@dataclass(frozen=True, eq=False)
class EnvelopeFamily:
    """Leveled family of hitting sets indexed by strings up to a length.

    ``levels[k]`` is the schedule depth that the sets indexed by length-k
    strings must sit at; it is determined by the base tree height and the
    per-length depth requirement, never decreasing along the index.
    """

    r: int
    base: FiniteTree
    schedule: LevelSchedule
    length: int
    levels: tuple[int, ...]
    sets: Mapping[str, frozenset[str]]

    @classmethod
    def build(
        cls,
        r: int,
        base: FiniteTree,
        schedule: LevelSchedule,
        depth_requirement: Callable[[int], int],
        sets: Mapping[str, Iterable[str]],
        length: int,
    ) -> "EnvelopeFamily":
        levels = []
        prev = -1
        for k in range(length + 1):
            need = max(base.height, depth_requirement(k))
            idx = 0
            while schedule.value(idx) < need or schedule.value(idx) <= prev:
                idx += 1
            levels.append(schedule.value(idx))
            prev = levels[-1]
        frozen = {s: frozenset(v) for s, v in sets.items()}
        for sigma in frozen:
            check_bits(sigma)
            if len(sigma) > length:
                raise PreconditionError(f"index {sigma!r} longer than the family")
        return cls(
            r=r,
            base=base,
            schedule=schedule,
            length=length,
            levels=tuple(levels),
            sets=frozen,
        )

    def level_of(self, sigma: str) -> int:
        return self.levels[len(sigma)]


@dataclass(frozen=True)
class EnvelopeConditionReport:
    sigma: str
    measure_bounded: bool  # condition 1
    hits_class: bool  # condition 2
    at_level: bool  # condition 3
    telescopes: bool | None  # condition 4; None when there are no children
    bound_kind: str  # "tail-bounded" | "truncated"
    set_measure: Dyadic
    leak_measure: Dyadic | None


def _gap_sum(schedule: LevelSchedule, from_depth: int, to_depth: int | None, horizon: int) -> tuple[Dyadic, bool]:
    """Sum of 2**(-gap(i)) over schedule indices with from_depth <= value(i),
    stopping before to_depth (or after `horizon` terms when unbounded).

    A finitely specified schedule simply runs out of gaps; the sum is then the
    whole remaining series and counts as complete.
    """
    idx = 0
    while schedule.value(idx) < from_depth:
        idx += 1
    total = Dyadic.zero()
    complete = True
    steps = 0
    while True:
        try:
            if to_depth is not None and schedule.value(idx) >= to_depth:
                break
            if to_depth is None and steps >= horizon:
                complete = False
                break
            term = Dyadic.pow2(-schedule.gap(idx))
        except IndexError:
            break
        total = total + term
        idx += 1
        steps += 1
    return total, complete


def check_envelope(
    family: EnvelopeFamily,
    region: FiniteTree,
    classes: Mapping[str, TreeClass],
    horizon: int = 16,
    cap: int = DEFAULT_ENUM_CAP,
) -> list[EnvelopeConditionReport]:
    """Evaluate the four envelope conditions for every index in the family.

    The unbounded tail in condition 1 is summed up to the horizon; when the
    schedule carries a convergence witness the geometric tail bound is added
    and the report is marked tail-bounded, otherwise truncated.
    """
    reports = []
    for sigma in sort_strings(family.sets):
        hset = family.sets[sigma]
        l_sigma = family.level_of(sigma)
        at_level = all(len(t) == l_sigma for t in hset)
        if sigma not in classes:
            raise PreconditionError(f"no class supplied for index {sigma!r}")
        hits_class = hits(hset, classes[sigma], cap).hits

        set_measure = overlap_measure(hset, region.leaves)
        tail, complete = _gap_sum(family.schedule, l_sigma, None, horizon)
        bound_kind = "truncated"
        if family.schedule.convergence_witness is not None:
            witness = family.schedule.convergence_witness
            idx = 0
            while family.schedule.value(idx) < l_sigma:
                idx += 1
            tail = tail + Dyadic.pow2(1 - (witness.offset + witness.slope * (idx + horizon)))
            bound_kind = "tail-bounded"
        bound1 = Dyadic.pow2(family.r - len(sigma)) + tail
        measure_bounded = set_measure <= bound1

        telescopes = None
        leak = None
        if len(sigma) < family.length:
            children = list(family.sets.get(sigma + "0", frozenset())) + list(
                family.sets.get(sigma + "1", frozenset())
            )
            leak = overlap_minus_measure(hset, region.leaves, children)
            bound4, _ = _gap_sum(
                family.schedule, l_sigma, family.levels[len(sigma) + 1], horizon
            )
            telescopes = leak <= bound4
        reports.append(
            EnvelopeConditionReport(
                sigma=sigma,
                measure_bounded=measure_bounded,
                hits_class=hits_class,
                at_level=at_level,
                telescopes=telescopes,
                bound_kind=bound_kind,
                set_measure=set_measure,
                leak_measure=leak,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# density boost

def boost_density(
    v0: Iterable[str],
    zprefix: str,
    delta: Dyadic,
    eps: Dyadic,
    depth: int,
) -> tuple[int, FiniteTree]:
    """Thin a removed set by self-concatenation until the path gets dense.

    Requires every prefix of the path to see the removed cylinders with
    relative measure below 1 - delta; the k-fold concatenation then meets
    every such prefix in measure below (1-delta)**k < eps, so the complement
    tree has relative measure above 1 - eps along the whole path.
    """
    check_bits(zprefix)
    members = frozenset(v0)
    if not Dyadic.zero() < eps < Dyadic.one():
        raise PreconditionError("eps must lie strictly between 0 and 1")
    if not Dyadic.zero() < delta < Dyadic.one():
        raise PreconditionError("delta must lie strictly between 0 and 1")
    if not all(len(s) <= depth for s in members):
        raise PreconditionError("depth must cover the removed set")
    ceiling = Dyadic.one() - delta
    for n in range(len(zprefix) + 1):
        tau = zprefix[:n]
        if not relative_measure(tau, members) < ceiling:
            raise PreconditionError(
                f"prefix {tau!r} already sees the removed set at density >= 1-delta"
            )
    k = 1
    power = ceiling
    while not power < eps:
        k += 1
        power = power * ceiling
    thinned = concat_power(members, k) if members else frozenset()
    if any(len(s) > depth for s in thinned):
        raise PreconditionError(
            f"depth {depth} is too shallow for the {k}-fold concatenation"
        )
    leaves = frozenset(
        w for w in all_strings(depth) if relative_measure(w, thinned) < Dyadic.one()
    )
    return k, FiniteTree(depth, leaves)
