from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revpref import core
from revpref.core import ChoiceDataset, StrictRelation
from revpref.errors import (
    BundleSumMismatch,
    ChoiceNotInMenu,
    DuplicateMenu,
    Irrational,
    MenuTooSmall,
    UnknownAlternative,
)
from revpref.oracle import all_choice_functions, complete_domain, random_dataset

X, Y, Z = 0, 1, 2
A, B, C = 0, 1, 2


def menu_index(d, labels):
    return d.menus.index(frozenset(labels))


# --- validation -------------------------------------------------------------


def test_validate_table1_alternative():
    raw = {
        "alternatives": [{"id": 0, "label": "x1", "payments": [450, 800, 1150]}, {"id": 1, "label": "x2"}],
        "observations": [{"menu": [0, 1], "choice": 0}],
    }
    d = core.validate_dataset(raw)
    assert d.universe[0].payments == (450, 800, 1150)
    assert sum(d.universe[0].payments) == 2400


def test_validate_bundle_sum():
    raw = {"alternatives": [{"id": 0, "label": "x1", "payments": [450, 800, 1100]}], "observations": []}
    with pytest.raises(BundleSumMismatch):
        core.validate_dataset(raw)


def test_menu_too_small():
    with pytest.raises(MenuTooSmall):
        ChoiceDataset.build([("x", "x")], labels=["x", "y"])


def test_duplicate_menu():
    with pytest.raises(DuplicateMenu):
        ChoiceDataset.build([("xy", "x"), ("xy", "y")], labels=["x", "y"])


def test_choice_not_in_menu():
    with pytest.raises(ChoiceNotInMenu):
        ChoiceDataset.build([("xy", "z")], labels=["x", "y", "z"])


def test_unknown_alternative():
    with pytest.raises(UnknownAlternative):
        ChoiceDataset.build([("xw", "x")], labels=["x", "y"])


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        ChoiceDataset.build([("x", "x")], labels=["x", "y"])


# --- direct relation and WARP -------------------------------------------------


def test_direct_relation(d_rat, d_warp):
    assert core.direct_relation(d_rat) == {(A, B), (A, C), (B, C)}
    assert core.direct_relation(d_warp) == {(Y, X), (X, Y), (X, Z)}
    empty = ChoiceDataset.build([], labels=["x", "y"])
    assert core.direct_relation(empty) == set()


def test_warp_pairs(d_rat, d_warp, d_sarp):
    assert core.find_warp_pairs(d_warp) == [(0, 1)]
    assert core.find_warp_pairs(d_rat) == []
    assert core.find_warp_pairs(d_sarp) == []


def test_sarp(d_rat, d_warp, d_sarp):
    found, witness = core.has_sarp_violation(d_sarp)
    assert found
    assert {d_sarp.menus[i] for i in witness} == set(d_sarp.menus)
    assert core.has_sarp_violation(d_rat) == (False, None)
    found, witness = core.has_sarp_violation(d_warp)
    assert found and sorted(witness) == [0, 1]


def test_sarp_witness_is_a_cycle(d_sarp):
    _, witness = core.has_sarp_violation(d_sarp)
    # listed in chosen-over order: each menu's choice beats the next menu's choice
    assert [sorted(d_sarp.menus[i]) for i in witness] == [[X, Y], [Y, Z], [X, Z]]
    chain = witness[::-1]
    for i, m in enumerate(chain):
        nxt = d_sarp.observations[chain[(i + 1) % len(chain)]]
        assert d_sarp.observations[m].choice in nxt.menu


def test_sarp_cycles_enumeration(d_sarp, d_rat):
    assert len(core.sarp_cycles(d_sarp)) == 1
    assert core.sarp_cycles(d_rat) == []


def test_warp_involved(d_rat, d_warp, d_sarp):
    assert core.warp_involved(d_warp) == {X, Y}
    assert core.warp_involved(d_rat) == set()
    assert core.warp_involved(d_sarp) == set()


def test_warp_directly_involved(d_rat, d_warp):
    assert core.warp_directly_involved(d_warp) == {X, Y}
    assert core.warp_directly_involved(d_rat) == set()


def test_directly_involved_excludes_chooser_outside_intersection():
    # w is chosen over the pivot a in {w, a}; the WARP pair {x,y} / {x,y,a}
    # does not have w in its intersection
    labels = ["w", "x", "y", "a"]
    d = ChoiceDataset.build([("wa", "w"), ("xy", "y"), ("xya", "x"), ("wxya", "w")], labels=labels)
    assert 0 not in core.warp_directly_involved(d)


def test_pure_sarp_only(d_rat, d_warp, d_sarp):
    assert core.pure_sarp_only(d_sarp) == {X, Y, Z}
    assert core.pure_sarp_only(d_warp) == set()
    assert core.pure_sarp_only(d_rat) == set()


def test_violation_report(d_warp):
    rep = core.violation_report(d_warp)
    assert rep.warp_pairs == [(0, 1)]
    assert rep.directly_involved <= rep.involved
    assert rep.pure_sarp_only == frozenset()


def test_observed_pivots(d_rat, d_warp):
    assert core.observed_pivots(d_warp) == ({X, Y}, {Z})
    assert core.observed_pivots(d_rat) == ({A, B}, set())
    single = ChoiceDataset.build([("xy", "x")], labels=["x", "y"])
    assert core.observed_pivots(single) == ({0}, set())


def test_distinct_chosen(d_rat, d_warp):
    assert core.distinct_chosen(d_rat) == 2
    assert core.distinct_chosen(d_warp) == 2
    assert core.distinct_chosen(ChoiceDataset.build([], labels=["x", "y"])) == 0


def test_rational_revealed(d_rat, d_warp):
    assert core.rational_revealed(d_rat).pairs == {(A, B), (A, C), (B, C)}
    with pytest.raises(Irrational):
        core.rational_revealed(d_warp)
    d = ChoiceDataset.build([("xy", "x"), ("yz", "y")], labels=["x", "y", "z"])
    assert core.rational_revealed(d).pairs == {(X, Y), (Y, Z), (X, Z)}


def test_density():
    assert core.density(StrictRelation({(A, B), (A, C), (B, C)}), 3) == 1.0
    assert core.density(StrictRelation(), 10) == 0.0
    pairs = list(combinations(range(10), 2))[:28]
    assert core.density(StrictRelation(pairs), 10) == pytest.approx(28 / 45)
    assert round(28 / 45, 3) == 0.622


def test_strict_relation_rejects_symmetric_pairs():
    with pytest.raises(ValueError):
        StrictRelation({(0, 1), (1, 0)})


# --- invariants --------------------------------------------------------------


@st.composite
def datasets(draw, max_n=5):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return random_dataset(n, rng, 1, min(10, 2**n - n - 1))


@settings(max_examples=200, deadline=None)
@given(datasets())
def test_observational_invariants(d):
    assert core.warp_directly_involved(d) <= core.warp_involved(d)
    rel = core.direct_relation(d)
    two_cycle = any((y, x) in rel for x, y in rel)
    assert bool(core.find_warp_pairs(d)) == two_cycle
    found, _ = core.has_sarp_violation(d)
    if not found:
        assert core.find_warp_pairs(d) == []
        core.rational_revealed(d)
    for i, j in core.find_warp_pairs(d):
        s, t = d.observations[i], d.observations[j]
        assert s.choice != t.choice
        assert {s.choice, t.choice} <= s.menu & t.menu
    t1, t2 = core.observed_pivots(d)
    assert t1 == set(d.choices)
    by_menu = {o.menu: o.choice for o in d.observations}
    for p in t2:
        assert any(p in m and by_menu[m] != p and by_menu.get(m - {p}) not in (None, by_menu[m]) for m in by_menu)


@settings(max_examples=100, deadline=None)
@given(datasets())
def test_density_monotone(d):
    found, _ = core.has_sarp_violation(d)
    if found:
        return
    full = core.rational_revealed(d)
    sub = StrictRelation(frozenset(list(full.pairs)[: len(full) // 2]))
    assert core.density(sub, d.n) <= core.density(full, d.n)


def test_linear_order_has_density_one():
    n = 5
    rel = StrictRelation({(i, j) for i in range(n) for j in range(i + 1, n)})
    assert rel.is_linear_order(n)
    assert core.density(rel, n) == 1.0


@pytest.mark.parametrize("n", [3, 4])
def test_complete_domain_sarp_iff_warp(n):
    menus = complete_domain(n)
    rng = np.random.default_rng(n)
    if n == 3:
        functions = list(all_choice_functions(menus))
    else:
        functions = [tuple(sorted(b)[rng.integers(len(b))] for b in menus) for _ in range(3000)]
    for cf in functions:
        d = ChoiceDataset.build(list(zip(menus, cf)), n=n)
        assert core.has_sarp_violation(d)[0] == bool(core.find_warp_pairs(d))
