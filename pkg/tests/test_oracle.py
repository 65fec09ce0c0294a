from itertools import islice

import numpy as np
import pytest

from revpref.core import ChoiceDataset
from revpref.harness import default_menu_collection
from revpref.errors import NotRationalizable, SpaceTooLarge, UniverseTooLarge
from revpref.models import (
    AMENDED_MODELS,
    BASE_MODELS,
    LA,
    LC,
    NC1,
    NC2,
    RATIONAL,
    RSM,
    TRSM,
    ModelSpec,
    evaluate,
)
from revpref.oracle import (
    all_choice_functions,
    brute_rationalizable,
    brute_revealed,
    complete_domain,
    complete_domain_datasets,
    enumerate_filters,
    exact_pass_probability,
    filter_property_holds,
    random_dataset,
    sample_filter,
)

X, Y, Z = 0, 1, 2


@pytest.mark.parametrize(
    "model,n,count",
    [(NC1, 2, 3), (NC2, 2, 1), (RSM, 2, 3), (TRSM, 2, 3), (LA, 2, 3), (LC, 2, 3), (RSM, 3, 25), (TRSM, 3, 19)],
)
def test_filter_counts(model, n, count):
    assert sum(1 for _ in enumerate_filters(model, n)) == count


@pytest.mark.parametrize("model", [LA, LC, RSM, TRSM, NC2], ids=lambda m: m.name)
def test_enumerated_filters_have_property(model):
    seen = set()
    for f in enumerate_filters(model, 3):
        assert filter_property_holds(model, f)
        key = tuple(sorted((tuple(sorted(b)), tuple(sorted(v))) for b, v in f.items()))
        assert key not in seen
        seen.add(key)


def test_filters_on_four_stream():
    sample = list(islice(enumerate_filters(LA, 4), 500))
    assert all(filter_property_holds(LA, f) for f in sample)


def test_universe_cap():
    with pytest.raises(UniverseTooLarge):
        next(enumerate_filters(LA, 5))
    d = ChoiceDataset.build([({0, 4}, 0)], n=5)
    with pytest.raises(UniverseTooLarge):
        brute_rationalizable(LA, d)


def test_brute_examples(d_warp, d_sarp, d_rat):
    ok, (f, order) = brute_rationalizable(LA, d_warp)
    assert ok
    for o in d_warp.observations:
        assert min(f[o.menu], key=order.index) == o.choice
    assert brute_rationalizable(NC2, d_sarp) == (False, None)
    assert brute_rationalizable(RATIONAL, d_rat)[0]
    assert brute_revealed(LA, d_warp).pairs == {(X, Z)}
    assert brute_revealed(RATIONAL, d_rat).pairs == {(0, 1), (0, 2), (1, 2)}
    with pytest.raises(NotRationalizable):
        brute_revealed(NC2, d_sarp)


def test_nc1_reveals_nothing():
    rng = np.random.default_rng(0)
    for _ in range(30):
        d = random_dataset(4, rng)
        assert brute_revealed(NC1, d).pairs == frozenset()


def test_exact_pass_probability_examples():
    menus = complete_domain(3)
    assert exact_pass_probability(RATIONAL, menus) == 0.25
    assert exact_pass_probability(NC1, menus) == 1.0
    la_share = sum(evaluate(LA, d).rationalizable for d in complete_domain_datasets(3)) / 24
    assert exact_pass_probability(LA, menus) == la_share


def test_exact_pass_probability_cap():
    menus = default_menu_collection(0)
    with pytest.raises(SpaceTooLarge):
        exact_pass_probability(RATIONAL, menus)
    with pytest.raises(UniverseTooLarge):
        exact_pass_probability(RATIONAL, [frozenset({0, 5})])


def test_pass_probability_antitone():
    rng = np.random.default_rng(4)
    lattice = complete_domain(4)
    for _ in range(8):
        menus = [lattice[i] for i in sorted(rng.choice(len(lattice), size=6, replace=False))]
        p = {m.name: exact_pass_probability(m, menus, 4) for m in BASE_MODELS + AMENDED_MODELS}
        assert p["trsm"] <= p["rsm"] <= p["lc"]
        assert p["trsm"] <= p["la"]
        for am in AMENDED_MODELS:
            assert p[am.name] <= p[am.base.name]


def test_complete_three_equivalence_all_models():
    for d in complete_domain_datasets(3):
        for m in BASE_MODELS + AMENDED_MODELS:
            ok, _ = brute_rationalizable(m, d)
            res = evaluate(m, d)
            assert res.rationalizable == ok, (m.name, d)
            if ok:
                assert res.revealed == brute_revealed(m, d), (m.name, d)


def test_sampled_four_equivalence():
    rng = np.random.default_rng(21)
    for _ in range(60):
        d = random_dataset(4, rng)
        for m in BASE_MODELS + AMENDED_MODELS:
            ok, _ = brute_rationalizable(m, d)
            res = evaluate(m, d)
            assert res.rationalizable == ok
            if ok:
                assert res.revealed == brute_revealed(m, d)


@pytest.mark.parametrize("model", [LA, LC, RSM, TRSM, NC2], ids=lambda m: m.name)
def test_sampled_filter_agents_pass(model):
    rng = np.random.default_rng(8)
    menus = complete_domain(4)
    for _ in range(10):
        f = sample_filter(model, 4, rng)
        assert filter_property_holds(model, f)
        order = [int(v) for v in rng.permutation(4)]
        d = ChoiceDataset.build([(b, min(f[b], key=order.index)) for b in menus], n=4)
        assert evaluate(model, d).rationalizable
        assert brute_rationalizable(model, d)[0]


def test_all_choice_functions_count():
    assert sum(1 for _ in all_choice_functions(complete_domain(3))) == 24
