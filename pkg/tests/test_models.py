import numpy as np
import pytest

from helpers import pure_sarp_dataset, random_datasets
from revpref import core
from revpref.constraints import Clause, pos, order
from revpref.core import ChoiceDataset
from revpref.errors import InapplicableModel, NotRationalizable
from revpref.models import (
    AMENDED_MODELS,
    BASE_MODELS,
    LA,
    LC,
    NC1,
    NC2,
    RATIONAL,
    REPORT_MODELS,
    RSM,
    TRSM,
    ModelSpec,
    build_system,
    evaluate,
    is_rationalizable,
    lower_contour,
    revealed,
    theorem_screen,
)
from revpref.oracle import brute_revealed

X, Y, Z = 0, 1, 2
CONSISTENCY = (LA, LC, RSM, TRSM)


# --- model names ----------------------------------------------------------------


@pytest.mark.parametrize("name", [m.name for m in REPORT_MODELS] + ["nc3", "la3"])
def test_parse_roundtrip(name):
    assert ModelSpec.parse(name).name == name


def test_report_models():
    assert [m.name for m in REPORT_MODELS] == [
        "rational", "nc1", "nc2", "la", "lc", "rsm", "trsm", "la2", "lc2", "rsm2", "trsm2",
    ]


@pytest.mark.parametrize("bad", ["foo", "rational2", "la1x", ""])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        ModelSpec.parse(bad)


def test_invalid_specs():
    with pytest.raises(ValueError):
        ModelSpec("nc", k=0)
    with pytest.raises(ValueError):
        ModelSpec("rational", amended_min_size=2)
    with pytest.raises(ValueError):
        ModelSpec("la", k=2)


# --- systems ------------------------------------------------------------------


def test_la_system_d_warp(d_warp):
    assert build_system(LA, d_warp).clauses == (Clause((pos(order(X, Z)),)),)


def test_lc_system_d_warp(d_warp):
    assert build_system(LC, d_warp).clauses == (Clause((pos(order(Y, X)),)),)


def test_nc2_system_d_sarp(d_sarp):
    clauses = set(build_system(NC2, d_sarp).clauses)
    assert clauses == {Clause((pos(order(a, b)),)) for a, b in [(X, Y), (Y, Z), (Z, X)]}


def test_nc1_system_is_empty(d_sarp):
    assert build_system(NC1, d_sarp).clauses == ()


# --- verdicts and revelation ------------------------------------------------------


def test_rsm_rationalizes_d_warp(d_warp):
    assert is_rationalizable(RSM, d_warp)


def test_nc2_rejects_d_sarp(d_sarp):
    assert not is_rationalizable(NC2, d_sarp)
    with pytest.raises(NotRationalizable):
        revealed(NC2, d_sarp)


def test_rational_d_rat(d_rat):
    assert is_rationalizable(RATIONAL, d_rat)
    assert revealed(RATIONAL, d_rat).revealed.pairs == {(0, 1), (0, 2), (1, 2)}


def test_revealed_d_warp(d_warp):
    assert revealed(LA, d_warp).revealed.pairs == {(X, Z)}
    assert revealed(LC, d_warp).revealed.pairs == {(Y, X)}
    assert revealed(RSM, d_warp).revealed.pairs == {(Y, X)}


def test_nc2_on_d_warp(d_warp):
    res = revealed(NC2, d_warp)
    assert res.revealed.pairs == {(Y, X), (X, Z), (Y, Z)}
    assert core.density(res.revealed, 3) == 1.0


def test_nc2_stc(d_stc):
    assert (X, Z) in revealed(NC2, d_stc).revealed


def test_lower_contours(d_warp, d_rat):
    assert lower_contour(LA, d_warp, X) == {Z}
    assert lower_contour(LA, d_warp, Y) == frozenset()
    for m in CONSISTENCY:
        for x in range(3):
            assert lower_contour(m, d_rat, x) == frozenset()


def test_single_doubleton():
    d = ChoiceDataset.build([("xy", "x")], labels=["x", "y"])
    assert revealed(RATIONAL, d).revealed.pairs == {(0, 1)}
    assert revealed(NC2, d).revealed.pairs == {(0, 1)}
    for m in CONSISTENCY:
        assert revealed(m, d).revealed.pairs == frozenset()


def test_d_sarp_consistency_models_reveal_nothing(d_sarp):
    for m in CONSISTENCY:
        assert revealed(m, d_sarp).revealed.pairs == frozenset()


# --- screens --------------------------------------------------------------------


def test_theorem_screen(d_warp, d_rat):
    assert theorem_screen(TRSM, d_warp) == {X, Y}
    assert theorem_screen(RSM, d_rat) == set()
    for m in (NC2, RATIONAL, AMENDED_MODELS[0]):
        with pytest.raises(InapplicableModel):
            theorem_screen(m, d_warp)


def test_screened_and_unscreened_agree():
    for d in random_datasets(150, seed=11, max_n=5):
        for m in CONSISTENCY:
            assert evaluate(m, d, screen=True).revealed == evaluate(m, d).revealed


# --- invariants on random datasets ----------------------------------------------------


@pytest.fixture(scope="module")
def corpus():
    data = random_datasets(200, seed=7)
    return [(d, {m.name: evaluate(m, d) for m in REPORT_MODELS}) for d in data]


@pytest.mark.parametrize("model", CONSISTENCY, ids=lambda m: m.name)
def test_screen_soundness(corpus, model):
    violations = []
    for d, res in corpus:
        r = res[model.name]
        if r.rationalizable:
            allowed = theorem_screen(model, d)
            violations += [(d, x) for x, low in r.lower_contours.items() if low and x not in allowed]
    assert violations == []


def test_trsm_screen_counterexample_is_exact():
    # 2 beats 1 in every TRSM rationalization although 2 is in no WARP pair
    d = ChoiceDataset.build([({0, 3}, 0), ({1, 2}, 2), ({0, 1, 3}, 3), ({0, 2, 3}, 0), ({1, 2, 3}, 2)], n=4)
    assert 2 not in core.warp_involved(d)
    assert (2, 1) in evaluate(TRSM, d).revealed
    assert (2, 1) in brute_revealed(TRSM, d)


def test_nesting(corpus):
    for d, res in corpus:
        ok = {k: r.rationalizable for k, r in res.items()}
        assert ok["trsm"] <= ok["rsm"] <= ok["lc"]
        assert ok["trsm"] <= ok["la"]
        assert ok["nc1"]
        for am in AMENDED_MODELS:
            assert ok[am.name] <= ok[am.base.name]


def test_amendment_monotone_revelation(corpus):
    for d, res in corpus:
        for am in AMENDED_MODELS:
            a, b = res[am.name], res[am.base.name]
            if a.rationalizable and b.rationalizable:
                assert b.revealed.pairs <= a.revealed.pairs


def test_no_sarp_means_nothing_revealed(corpus):
    for d, res in corpus:
        if not core.has_sarp_violation(d)[0]:
            for m in CONSISTENCY:
                assert res[m.name].revealed.pairs == frozenset()


def test_nc1_is_unrestricted(corpus):
    for d, res in corpus:
        assert res["nc1"].rationalizable and not res["nc1"].revealed.pairs


def test_revealed_is_strict_partial_order(corpus):
    for d, res in corpus:
        for r in res.values():
            if r.rationalizable:
                assert r.revealed.is_transitive()
                assert all(x != y for x, y in r.revealed.pairs)
                for x in range(d.n):
                    assert r.lower_contours[x] == {y for a, y in r.revealed.pairs if a == x}
                assert {x for x, low in r.lower_contours.items() if low} <= r.restricted


def test_rational_matches_closure(corpus):
    for d, res in corpus:
        found, _ = core.has_sarp_violation(d)
        assert res["rational"].rationalizable == (not found)
        if not found:
            assert res["rational"].revealed == core.rational_revealed(d)


def test_pure_sarp_reveals_nothing():
    rng = np.random.default_rng(3)
    for _ in range(80):
        d = pure_sarp_dataset(rng, int(rng.integers(3, 7)))
        for m in CONSISTENCY:
            r = evaluate(m, d)
            assert r.rationalizable
            assert r.revealed.pairs == frozenset()


def test_pure_sarp_only_alternatives_have_empty_contours(corpus):
    for d, res in corpus:
        for x in core.pure_sarp_only(d):
            for m in (LA, LC, RSM):
                r = res[m.name]
                if r.rationalizable:
                    assert r.lower_contours[x] == frozenset()


def test_budget_propagates(monkeypatch):
    from revpref.errors import BudgetExceeded
    from revpref.harness import default_menu_collection, simulate_random_subjects

    d = simulate_random_subjects(default_menu_collection(0), 1, seed=0).subjects[0].data
    monkeypatch.setenv("REVPREF_BUDGET", "0")
    with pytest.raises(BudgetExceeded):
        evaluate(LA, d)
    monkeypatch.delenv("REVPREF_BUDGET")
    assert evaluate(LA, d).rationalizable in (True, False)
