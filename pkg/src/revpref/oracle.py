"""Exhaustive ground truth for universes of at most four alternatives.

Filters are enumerated over every nonempty subset of the universe, not only
over the observed menus, so a verdict here genuinely quantifies over all
extensions of an incomplete dataset.  For each model, every admissible
filter is paired with every strict linear order and the induced choice on
every menu of size two or more is tabulated once; a dataset is then
rationalizable when some row of the table reproduces its observations, and
the revealed relation is the intersection of the orders of those rows.

The NC family has no cross-menu restrictions, so its filters factor menu by
menu and are never tabulated: an order works exactly when each observed
choice has enough alternatives ranked below it.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from math import prod

import numpy as np

from .core import ChoiceDataset, StrictRelation
from .errors import NotRationalizable, SpaceTooLarge, UniverseTooLarge
from .models import ModelSpec

MAX_UNIVERSE = 4
MAX_SPACE = 10**6

FilterTable = dict[frozenset[int], frozenset[int]]


def all_menus(n: int) -> list[frozenset[int]]:
    """Nonempty subsets of ``range(n)``, smallest first."""
    return [frozenset(c) for r in range(1, n + 1) for c in combinations(range(n), r)]


def _subsets(menu: frozenset[int], min_size: int = 1) -> list[frozenset[int]]:
    items = sorted(menu)
    return [frozenset(c) for r in range(max(min_size, 1), len(items) + 1) for c in combinations(items, r)]


def _check_universe(n: int) -> None:
    if n > MAX_UNIVERSE:
        raise UniverseTooLarge(f"the oracle handles at most {MAX_UNIVERSE} alternatives, got {n}")


# ---------------------------------------------------------------------------
# filter enumeration


def _relations(n: int, transitive: bool) -> Iterator[frozenset[tuple[int, int]]]:
    """Asymmetric relations whose maximal elements are nonempty on every menu (i.e. acyclic)."""
    pairs = list(combinations(range(n), 2))
    for dirs in product((0, 1, 2), repeat=len(pairs)):
        rel = set()
        for (x, y), d in zip(pairs, dirs):
            if d == 1:
                rel.add((x, y))
            elif d == 2:
                rel.add((y, x))
        if transitive and any((x, z) not in rel for x, y in rel for y2, z in rel if y2 == y and z != x):
            continue
        if _acyclic(n, rel):
            yield frozenset(rel)


def _acyclic(n: int, rel: set[tuple[int, int]]) -> bool:
    remaining = set(range(n))
    while remaining:
        sources = [x for x in remaining if not any((y, x) in rel for y in remaining)]
        if not sources:
            return False
        remaining -= set(sources)
    return True


def _maximal(menu: frozenset[int], rel: frozenset[tuple[int, int]]) -> frozenset[int]:
    return frozenset(x for x in menu if not any((y, x) in rel for y in menu))


def _attention(menus: list[frozenset[int]]) -> Iterator[FilterTable]:
    table: FilterTable = {}

    def rec(i: int) -> Iterator[FilterTable]:
        if i == len(menus):
            yield dict(table)
            return
        b = menus[i]
        if len(b) == 1:
            options = [b]
        else:
            # a filter that ignores x equals the filter of b without x
            options = [b] + sorted({table[b - {x}] for x in b}, key=sorted)
        for f in dict.fromkeys(options):
            if all(table[b - {x}] == f for x in b - f):
                table[b] = f
                yield from rec(i + 1)
        table.pop(b, None)

    yield from rec(0)


def _competition(menus: list[frozenset[int]]) -> Iterator[FilterTable]:
    table: FilterTable = {}

    def rec(i: int) -> Iterator[FilterTable]:
        if i == len(menus):
            yield dict(table)
            return
        b = menus[i]
        if len(b) == 1:
            options = [b]
        else:
            # survivors of b must survive in every menu one element smaller
            allowed = frozenset(y for y in b if all(y in table[b - {x}] for x in b if x != y))
            options = _subsets(allowed)
        for f in options:
            table[b] = f
            yield from rec(i + 1)
        table.pop(b, None)

    yield from rec(0)


def enumerate_filters(
    model: ModelSpec, n: int, menus: Sequence[frozenset[int]] | None = None
) -> Iterator[FilterTable]:
    """Stream every filter admitted by ``model`` on the universe ``range(n)``.

    For amended models the size bound is imposed on ``menus`` (all menus when
    omitted); elsewhere the base model's property governs every menu.
    """
    _check_universe(n)
    lattice = all_menus(n)
    v = model.variant
    if v == "rational":
        base: Iterator[FilterTable] = iter([{b: b for b in lattice}])
    elif v == "nc":
        choices = [_subsets(b, min(model.k, len(b))) for b in lattice]
        base = (dict(zip(lattice, combo)) for combo in product(*choices))
    elif v == "la":
        base = _attention(lattice)
    elif v == "lc":
        base = _competition(lattice)
    else:
        base = ({b: _maximal(b, rel) for b in lattice} for rel in _relations(n, v == "trsm"))
    if not model.amended:
        yield from base
        return
    k = model.amended_min_size
    bounded = [frozenset(b) for b in (lattice if menus is None else menus)]
    for f in base:
        if all(len(f[b]) >= min(k, len(b)) for b in bounded):
            yield f


def filter_property_holds(model: ModelSpec, f: FilterTable) -> bool:
    """Re-check the base model's defining property on every pair of menus."""
    menus = list(f)
    if any(not f[b] or not f[b] <= b for b in menus):
        return False
    v = model.variant
    if v == "rational":
        return all(f[b] == b for b in menus)
    if v == "nc":
        return all(len(f[b]) >= min(model.k, len(b)) for b in menus)
    if v == "la":
        return all(f[b] == f[b - {x}] for b in menus for x in b - f[b])
    if v == "lc":
        return all(f[b] & s <= f[s] for b in menus for s in menus if s <= b)
    doubletons = [b for b in menus if len(b) == 2]
    rel = set()
    for b in doubletons:
        if len(f[b]) == 1:
            (w,) = f[b]
            (l,) = b - f[b]
            rel.add((w, l))
    if v == "trsm" and any((x, z) not in rel for x, y in rel for y2, z in rel if y2 == y and z != x):
        return False
    frel = frozenset(rel)
    return all(f[b] == _maximal(b, frel) for b in menus)


# ---------------------------------------------------------------------------
# tabulation


@dataclass(frozen=True)
class _Table:
    menus: list[frozenset[int]]  # menus of size >= 2, in column order
    filters: list[FilterTable]
    orders: list[tuple[int, ...]]  # each order lists alternatives best first
    choice: np.ndarray  # rows: (filter, order) pairs; columns: menus
    size: np.ndarray  # |F(B)| per row and menu
    filter_id: np.ndarray
    order_id: np.ndarray


def _orders(n: int) -> list[tuple[int, ...]]:
    return list(permutations(range(n)))


@lru_cache(maxsize=None)
def _table(variant: str, n: int) -> _Table:
    model = ModelSpec(variant)
    filters = list(enumerate_filters(model, n))
    orders = _orders(n)
    menus = [b for b in all_menus(n) if len(b) >= 2]
    ranks = np.array([[o.index(x) for x in range(n)] for o in orders])  # rank 0 is best
    rows_c, rows_s = [], []
    for f in filters:
        masks = np.zeros((len(menus), n), dtype=bool)
        for j, b in enumerate(menus):
            masks[j, sorted(f[b])] = True
        # choice per (order, menu): the considered alternative with the best rank
        scored = np.where(masks[None, :, :], ranks[:, None, :], n + 1)
        rows_c.append(scored.argmin(axis=2))
        rows_s.append(np.broadcast_to(masks.sum(axis=1), (len(orders), len(menus))))
    choice = np.concatenate(rows_c).astype(np.int8)
    size = np.concatenate(rows_s).astype(np.int8)
    filter_id = np.repeat(np.arange(len(filters)), len(orders))
    order_id = np.tile(np.arange(len(orders)), len(filters))
    return _Table(menus, filters, orders, choice, size, filter_id, order_id)


def _observed_columns(table: _Table, d: ChoiceDataset) -> tuple[list[int], np.ndarray]:
    col = {b: j for j, b in enumerate(table.menus)}
    return [col[o.menu] for o in d.observations], np.array(d.choices, dtype=np.int8)


def _matching_rows(model: ModelSpec, d: ChoiceDataset) -> tuple[_Table, np.ndarray]:
    table = _table(model.variant, d.n)
    cols, want = _observed_columns(table, d)
    mask = (table.choice[:, cols] == want).all(axis=1)
    if model.amended:
        need = np.array([min(model.amended_min_size, len(o.menu)) for o in d.observations])
        mask &= (table.size[:, cols] >= need).all(axis=1)
    return table, np.flatnonzero(mask)


def _nc_orders(k: int, d: ChoiceDataset) -> list[tuple[int, ...]]:
    good = []
    for o in _orders(d.n):
        rank = {x: i for i, x in enumerate(o)}
        if all(
            sum(rank[y] > rank[ob.choice] for y in ob.menu) >= min(k, len(ob.menu)) - 1 for ob in d.observations
        ):
            good.append(o)
    return good


def _nc_witness(k: int, d: ChoiceDataset, o: tuple[int, ...]) -> FilterTable:
    rank = {x: i for i, x in enumerate(o)}
    f: FilterTable = {b: b for b in all_menus(d.n)}
    for ob in d.observations:
        below = sorted((y for y in ob.menu if rank[y] > rank[ob.choice]), key=rank.get)
        f[ob.menu] = frozenset([ob.choice] + below[: min(k, len(ob.menu)) - 1])
    return f


# ---------------------------------------------------------------------------
# public queries


def brute_rationalizable(model: ModelSpec, d: ChoiceDataset) -> tuple[bool, tuple[FilterTable, tuple[int, ...]] | None]:
    """Exhaustive rationalizability test, with a (filter, order) witness when one exists.

    The order in the witness lists alternatives from best to worst.
    """
    _check_universe(d.n)
    if model.variant in ("nc", "rational"):
        k = model.k if model.variant == "nc" else 10**9
        orders = _nc_orders(k, d)
        if not orders:
            return False, None
        return True, (_nc_witness(k, d, orders[0]), orders[0])
    table, rows = _matching_rows(model, d)
    if len(rows) == 0:
        return False, None
    r = rows[0]
    return True, (table.filters[table.filter_id[r]], table.orders[table.order_id[r]])


def _intersection(n: int, orders: list[tuple[int, ...]]) -> StrictRelation:
    common = None
    for o in orders:
        pairs = {(o[i], o[j]) for i in range(n) for j in range(i + 1, n)}
        common = pairs if common is None else common & pairs
    return StrictRelation(frozenset(common or ()))


def rationalizing_orders(model: ModelSpec, d: ChoiceDataset) -> list[tuple[int, ...]]:
    """Every order (best first) that pairs with some admissible filter to produce ``d``."""
    _check_universe(d.n)
    if model.variant in ("nc", "rational"):
        return _nc_orders(model.k if model.variant == "nc" else 10**9, d)
    table, rows = _matching_rows(model, d)
    return [table.orders[i] for i in sorted(set(table.order_id[rows].tolist()))]


def brute_revealed(model: ModelSpec, d: ChoiceDataset) -> StrictRelation:
    orders = rationalizing_orders(model, d)
    if not orders:
        raise NotRationalizable(f"no {model.name} rationalization exists")
    return _intersection(d.n, orders)


def exact_pass_probability(model: ModelSpec, menus: Sequence[frozenset[int]], n: int | None = None) -> float:
    """Share of all choice functions on ``menus`` that ``model`` rationalizes.

    This is the pass rate of a subject choosing uniformly at random from
    every menu.
    """
    menus = [frozenset(b) for b in menus]
    if n is None:
        n = 1 + max(max(b) for b in menus)
    space = prod(len(b) for b in menus)
    if space > MAX_SPACE:
        raise SpaceTooLarge(f"{space} choice functions exceed the enumeration cap of {MAX_SPACE}")
    _check_universe(n)
    if model.variant in ("nc", "rational"):
        k = model.k if model.variant == "nc" else 10**9
        sorted_menus = [sorted(b) for b in menus]
        grids = np.array(list(product(*sorted_menus)), dtype=np.int8).reshape(space, len(menus))
        ok = np.zeros(space, dtype=bool)
        for o in _orders(n):
            rank = np.empty(n, dtype=np.int64)
            rank[list(o)] = np.arange(n)
            fits = np.ones(space, dtype=bool)
            for j, b in enumerate(menus):
                below = np.array([sum(rank[y] > rank[c] for y in b) for c in range(n)])
                fits &= below[grids[:, j]] >= min(k, len(b)) - 1
            ok |= fits
        return int(ok.sum()) / space
    table = _table(model.variant, n)
    col = {b: j for j, b in enumerate(table.menus)}
    cols = [col[b] for b in menus]
    sub = table.choice[:, cols]
    if model.amended:
        need = np.array([min(model.amended_min_size, len(b)) for b in menus])
        sub = sub[(table.size[:, cols] >= need).all(axis=1)]
    # one integer per projected choice function, so unique runs on a flat array
    codes = (sub.astype(np.int64) * (n ** np.arange(len(cols), dtype=np.int64))).sum(axis=1)
    return len(np.unique(codes)) / space


def sample_filter(model: ModelSpec, n: int, rng: np.random.Generator) -> FilterTable:
    """A uniformly drawn admissible filter of the base model."""
    _check_universe(n)
    if model.variant == "nc":
        lattice = all_menus(n)
        out = {}
        for b in lattice:
            options = _subsets(b, min(model.k, len(b)))
            out[b] = options[rng.integers(len(options))]
        return out
    filters = _table(model.variant, n).filters
    return filters[rng.integers(len(filters))]


def complete_domain(n: int) -> list[frozenset[int]]:
    """Every menu with at least two alternatives."""
    return [b for b in all_menus(n) if len(b) >= 2]


def all_choice_functions(menus: Sequence[frozenset[int]]) -> Iterator[tuple[int, ...]]:
    return product(*(sorted(b) for b in menus))


__all__ = [
    "FilterTable",
    "all_choice_functions",
    "all_menus",
    "brute_rationalizable",
    "brute_revealed",
    "complete_domain",
    "enumerate_filters",
    "exact_pass_probability",
    "filter_property_holds",
    "rationalizing_orders",
    "sample_filter",
]


def complete_domain_datasets(n: int) -> Iterator[ChoiceDataset]:
    """Every choice function on the menus of size at least two, as datasets."""
    menus = complete_domain(n)
    for cf in all_choice_functions(menus):
        yield ChoiceDataset.build(list(zip(menus, cf)), n=n)


def random_dataset(n: int, rng: np.random.Generator, min_menus: int = 3, max_menus: int = 8) -> ChoiceDataset:
    """Uniform choices on a uniformly drawn set of distinct menus of size at least two."""
    lattice = complete_domain(n)
    count = int(rng.integers(min_menus, min(max_menus, len(lattice)) + 1))
    menus = [lattice[i] for i in sorted(rng.choice(len(lattice), size=count, replace=False))]
    return ChoiceDataset.build([(b, sorted(b)[rng.integers(len(b))]) for b in menus], n=n)
