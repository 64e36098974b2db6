import itertools
import random
from fractions import Fraction

import pytest

from treedense.core import (
    FiniteTree,
    LevelSchedule,
    PreconditionError,
    all_strings,
    concat_power,
    measure,
    relative_measure,
)
from treedense.dyadic import Dyadic
from treedense.hitting import (
    EnvelopeFamily,
    MissWitness,
    boost_density,
    check_envelope,
    finite_subcover,
    hits,
    hitting_cost,
    pull_back,
)
from treedense.treespace import Extends, PathsInside, TreeClass


# --- independent oracles -----------------------------------------------------

def brute_members(tree_class):
    """Class members by filtering every leaf subset against raw predicates."""
    pool = all_strings(tree_class.height)
    fulls = []
    for r in range(1, len(pool) + 1):
        for combo in itertools.combinations(pool, r):
            leafset = frozenset(combo)
            tree = FiniteTree(tree_class.height, leafset)
            if tree_class.contains(tree):
                fulls.append(tree)
    return fulls


def brute_hits(hitting_set, members):
    for tree in members:
        nodes = {w[:i] for w in tree.leaves for i in range(tree.height + 1)}
        if not (set(hitting_set) & nodes):
            return False, tree
    return True, None


def region_weight(strings, region):
    depth = region.height
    covered = sum(
        1
        for leaf in region.leaves
        if any(leaf.startswith(s) or s.startswith(leaf) for s in strings)
    )
    # all strings in these tests are no longer than the region height
    assert all(len(s) <= depth for s in strings)
    return Fraction(covered, 2**depth)


# --- hits ----------------------------------------------------------------

def test_hits_examples():
    extends = TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),))
    assert hits({"00"}, extends).hits

    report = hits({"10"}, extends)
    assert not report.hits
    assert report.witness.leaves == frozenset({"00", "11"})

    report = hits({"01", "1"}, TreeClass(2))
    assert not report.hits
    assert report.witness.leaves == frozenset({"00"})


def test_hits_empty_class_vacuous():
    empty = TreeClass(2, (Extends(FiniteTree.full(2)), PathsInside(FiniteTree.cylinder("0", 2))))
    assert brute_members(empty) == []
    assert hits({"0"}, empty).hits


def test_hits_matches_brute_force():
    classes = [
        TreeClass(2),
        TreeClass(3),
        TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),)),
        TreeClass(3, (PathsInside(FiniteTree.cylinder("1", 3)),)),
    ]
    hitting_sets = [set(), {"0"}, {"0", "1"}, {"01", "10"}, {"", "111"}, {"000"}]
    for tree_class in classes:
        members = brute_members(tree_class)
        assert [t.leaves for t in tree_class.members()] == [t.leaves for t in members]
        for H in hitting_sets:
            expected, witness = brute_hits(H, members)
            report = hits(H, tree_class)
            assert report.hits == expected
            if not expected:
                assert report.witness == witness


def test_hits_parallel_width_matches():
    tree_class = TreeClass(3)
    for H in [{"0"}, {"0", "1"}, {"010"}]:
        assert hits(H, tree_class, width=4) == hits(H, tree_class)


# --- finite_subcover -------------------------------------------------------

def test_subcover_example():
    got = finite_subcover({"00", "01", "0", "1"}, TreeClass(2))
    assert got == frozenset({"0", "1"})


def test_subcover_single_element():
    tree_class = TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),))
    assert finite_subcover({"00"}, tree_class) == frozenset({"00"})


def test_subcover_drops_redundant_refinement():
    tree_class = TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),))
    assert finite_subcover({"00", "000"[:2], "0"}, tree_class) == frozenset({"0"})


def test_subcover_requires_hitting():
    with pytest.raises(MissWitness) as err:
        finite_subcover({"10"}, TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),)))
    assert err.value.witness.leaves == frozenset({"00", "11"})


def test_subcover_minimal_against_brute_force():
    rng = random.Random(3)
    tree_class = TreeClass(2)
    members = brute_members(tree_class)
    pool = ["", "0", "1", "00", "01", "10", "11"]
    for _ in range(40):
        H = set(rng.sample(pool, rng.randint(1, len(pool))))
        if not brute_hits(H, members)[0]:
            continue
        kept = finite_subcover(H, tree_class)
        assert kept <= H
        assert brute_hits(kept, members)[0]
        for s in kept:
            assert not brute_hits(kept - {s}, members)[0]


# --- hitting cost ------------------------------------------------------------

def test_hitting_cost_examples():
    cost, chosen = hitting_cost(TreeClass(2), FiniteTree.full(2), 1)
    assert (cost, chosen) == (Dyadic(1), frozenset({"0", "1"}))

    extends = TreeClass(2, (Extends(FiniteTree.from_leaves({"00", "11"})),))
    cost, chosen = hitting_cost(extends, FiniteTree.full(2), 2)
    assert (cost, chosen) == (Dyadic(1, 2), frozenset({"00"}))

    empty = TreeClass(2, (Extends(FiniteTree.full(2)), PathsInside(FiniteTree.cylinder("0", 2))))
    assert hitting_cost(empty, FiniteTree.full(2), 1) == (Dyadic(0), frozenset())


def test_hitting_cost_exact_guard():
    with pytest.raises(PreconditionError):
        hitting_cost(TreeClass(5), FiniteTree.full(5), 5)


def test_hitting_cost_level_deeper_than_trees():
    with pytest.raises(PreconditionError):
        hitting_cost(TreeClass(2), FiniteTree.full(2), 3)


def brute_exact_cost(tree_class, region, level_len):
    members = brute_members(tree_class)
    best = None
    for r in range(len(all_strings(level_len)) + 1):
        for combo in itertools.combinations(all_strings(level_len), r):
            ok, _ = brute_hits(set(combo), members)
            if not ok:
                continue
            key = (region_weight(combo, region), len(combo), tuple(combo))
            if best is None or key < best:
                best = key
    return best


def test_hitting_cost_exact_matches_brute_force():
    rng = random.Random(8)
    region_pool = all_strings(3)
    classes = [
        TreeClass(3),
        TreeClass(3, (PathsInside(FiniteTree.cylinder("0", 3)),)),
        TreeClass(3, (Extends(FiniteTree.from_leaves({"000", "110"})),)),
    ]
    for tree_class in classes:
        for _ in range(3):
            region = FiniteTree(3, frozenset(rng.sample(region_pool, rng.randint(2, 8))))
            for level_len in (1, 2):
                cost, chosen = hitting_cost(tree_class, region, level_len)
                best = brute_exact_cost(tree_class, region, level_len)
                assert cost.as_fraction() == best[0]
                assert region_weight(chosen, region) == best[0]
                assert (len(chosen), tuple(sorted(chosen))) == (best[1], best[2])


def test_greedy_cost_upper_bounds_exact():
    rng = random.Random(21)
    region_pool = all_strings(3)
    for _ in range(20):
        region = FiniteTree(3, frozenset(rng.sample(region_pool, rng.randint(1, 8))))
        tree_class = TreeClass(3)
        for level_len in (1, 2, 3):
            exact_cost, exact_set = hitting_cost(tree_class, region, level_len, mode="exact")
            greedy_cost, greedy_set = hitting_cost(tree_class, region, level_len, mode="greedy")
            assert exact_cost <= greedy_cost
            assert hits(exact_set, tree_class).hits
            assert hits(greedy_set, tree_class).hits


# --- pull back -------------------------------------------------------------

def test_pull_back_examples():
    schedule = LevelSchedule.from_gaps([1, 1])
    assert pull_back({"00"}, FiniteTree.full(2), schedule, 1) == frozenset({"0"})
    assert pull_back(
        set(all_strings(2)), FiniteTree.full(2), schedule, 1
    ) == frozenset({"0", "1"})
    # region empty below a candidate keeps the candidate regardless
    region = FiniteTree.from_leaves({"11"})
    assert "0" in pull_back(set(), region, schedule, 1)


def test_pull_back_length_mismatch():
    schedule = LevelSchedule.from_gaps([1, 1])
    with pytest.raises(PreconditionError):
        pull_back({"0"}, FiniteTree.full(2), schedule, 1)


def test_pull_back_bound_random_instances():
    rng = random.Random(5)
    for _ in range(300):
        a = rng.randint(0, 3)
        b = rng.randint(a + 1, min(a + 4, 8))
        schedule = LevelSchedule.from_gaps([a, b - a] if a else [b])
        n = 1 if a else 0
        height = rng.randint(b, 8)
        pool = all_strings(height)
        region = FiniteTree(height, frozenset(rng.sample(pool, rng.randint(1, len(pool)))))
        old = frozenset(rng.sample(all_strings(b), rng.randint(0, 2**b)))
        pulled = pull_back(old, region, schedule, n)
        overshoot = sum(
            1
            for leaf in region.leaves
            if any(leaf.startswith(t) for t in pulled)
            and leaf[:b] not in old
        )
        assert Fraction(overshoot, 2**height) <= Fraction(1, 2 ** (b - a))


# --- envelopes ---------------------------------------------------------------

def build_plain_family(sets, length, r=1, schedule=None, base_height=0):
    schedule = schedule or LevelSchedule.linear()
    return EnvelopeFamily.build(
        r=r,
        base=FiniteTree.full(base_height) if base_height else FiniteTree(0, frozenset({""})),
        schedule=schedule,
        depth_requirement=lambda k: k,
        sets=sets,
        length=length,
    )


def test_envelope_levels_strictly_increase():
    family = build_plain_family({}, 3, schedule=LevelSchedule.from_gaps([2, 1, 1, 1, 1]))
    assert list(family.levels) == [0, 2, 3, 4]


def test_envelope_empty_sets_fail_only_hitting():
    family = build_plain_family({"": frozenset(), "0": frozenset(), "1": frozenset()}, 1)
    classes = {sigma: TreeClass(2) for sigma in family.sets}
    rows = check_envelope(family, FiniteTree.full(2), classes)
    for row in rows:
        assert not row.hits_class
        assert row.measure_bounded
        assert row.at_level
        assert row.telescopes in (True, None)


def test_envelope_full_sets_fail_measure_once_bound_small():
    schedule = LevelSchedule.from_gaps([1, 2, 3, 4])
    length = 2
    family = EnvelopeFamily.build(
        r=-2,
        base=FiniteTree(0, frozenset({""})),
        schedule=schedule,
        depth_requirement=lambda k: k,
        sets={
            "": frozenset({""}),
            "0": frozenset(all_strings(1)),
            "1": frozenset(all_strings(1)),
            **{sigma: frozenset(all_strings(3)) for sigma in all_strings(2)},
        },
        length=length,
    )
    assert list(family.levels) == [0, 1, 3]
    classes = {sigma: TreeClass(3) for sigma in family.sets}
    rows = check_envelope(family, FiniteTree.full(3), classes)
    assert all(row.hits_class for row in rows)  # full levels hit everything
    deep = [row for row in rows if len(row.sigma) == length]
    # bound 2^(r-2) + (1/8 + 1/16) falls below the full measure 1
    assert all(row.set_measure == Dyadic(1) for row in deep)
    assert all(not row.measure_bounded for row in deep)
    shallow = [row for row in rows if not row.sigma]
    assert all(row.measure_bounded for row in shallow)


def test_envelope_from_hitting_cost_witness_passes():
    tree_class = TreeClass(2)
    region = FiniteTree.full(2)
    cost, chosen = hitting_cost(tree_class, region, 2)
    family = EnvelopeFamily.build(
        r=2,
        base=FiniteTree(0, frozenset({""})),
        schedule=LevelSchedule.from_gaps([2, 2, 2]),
        depth_requirement=lambda k: 2,
        sets={"": chosen},
        length=0,
    )
    rows = check_envelope(family, region, {"": tree_class})
    assert len(rows) == 1
    row = rows[0]
    assert row.measure_bounded and row.hits_class and row.at_level
    assert row.telescopes is None


def test_envelope_needs_class_per_index():
    family = build_plain_family({"": frozenset({"0"})}, 0)
    with pytest.raises(PreconditionError):
        check_envelope(family, FiniteTree.full(1), {})


# --- density boost -----------------------------------------------------------

def test_boost_density_example():
    k, tree = boost_density({"1"}, "000", Dyadic(1, 2), Dyadic(1, 1), 3)
    assert k == 3
    assert concat_power({"1"}, 3) == frozenset({"111"})
    assert tree.leaves == frozenset(all_strings(3)) - {"111"}
    assert relative_measure("", tree.leaves) == Dyadic(7, 3)


def test_boost_density_rejects_degenerate_eps():
    with pytest.raises(PreconditionError):
        boost_density({"1"}, "0", Dyadic(1, 2), Dyadic(1), 3)


def test_boost_density_empty_removed_set():
    k, tree = boost_density(set(), "01", Dyadic(1, 1), Dyadic(1, 1), 2)
    assert tree == FiniteTree.full(2)
    assert k == 2  # (1/2)^2 < 1/2 first


def test_boost_density_hypothesis_violation_names_prefix():
    with pytest.raises(PreconditionError, match="'01'"):
        boost_density({"01"}, "011", Dyadic(1, 2), Dyadic(1, 2), 4)


def admissible_instance(rng):
    depth = rng.randint(4, 7)
    z = format(rng.getrandbits(depth), f"0{depth}b")[: rng.randint(2, 4)]
    pool = [s for s in all_strings(3) if not z.startswith(s) and not s.startswith(z)]
    removed = frozenset(rng.sample(pool, rng.randint(0, 2)))
    margins = [relative_measure(z[:n], removed) for n in range(len(z) + 1)]
    worst = max(m.as_fraction() for m in margins)
    if worst >= Fraction(3, 4):
        return None
    delta = Dyadic(1, 2)  # 1 - delta = 1/2... needs worst < 1/2
    if worst >= Fraction(1, 2):
        delta = Dyadic(1, 3)  # 1 - delta = 7/8
    eps = Dyadic(rng.choice([1, 3]), rng.choice([2, 3]))
    return removed, z, delta, eps, depth


def test_boost_density_random_instances():
    rng = random.Random(77)
    done = 0
    while done < 60:
        instance = admissible_instance(rng)
        if instance is None:
            continue
        removed, z, delta, eps, depth = instance
        ceiling = (Dyadic(1) - delta).as_fraction()
        if any(
            relative_measure(z[:n], removed).as_fraction() >= ceiling
            for n in range(len(z) + 1)
        ):
            continue
        k_needed = 1
        while ceiling**k_needed >= eps.as_fraction():
            k_needed += 1
        if k_needed * 3 > depth:
            continue
        k, tree = boost_density(removed, z, delta, eps, depth)
        assert k == k_needed
        thinned = concat_power(removed, k) if removed else frozenset()
        for n in range(min(len(z), depth) + 1):
            tau = z[:n]
            # exact law behind the boost: one factor at the prefix, the rest global
            got = relative_measure(tau, thinned).as_fraction()
            law = (
                relative_measure(tau, removed).as_fraction()
                * measure(removed).as_fraction() ** (k - 1)
                if removed
                else 0
            )
            assert got == law
            assert got < ceiling**k < eps.as_fraction()
            assert relative_measure(tau, tree.leaves).as_fraction() > 1 - eps.as_fraction()
        done += 1
