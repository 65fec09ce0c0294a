"""Choice data and the observational diagnostics computed directly from it.

A dataset is a list of menus, each with the single alternative that was
chosen from it.  Everything here is read off the observations without any
model of the first stage: the direct revealed relation, WARP pairs, SARP
cycles, pivots and the rational-choice benchmark.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations, islice
from math import comb
from typing import Any, Union

import networkx as nx

from .errors import (
    BundleSumMismatch,
    ChoiceNotInMenu,
    DuplicateMenu,
    Irrational,
    MenuTooSmall,
    UnknownAlternative,
    ValidationError,
)

DEFAULT_BUNDLE_TOTAL = 2400

Pair = tuple[int, int]


@dataclass(frozen=True)
class Alternative:
    id: int
    label: str
    # installments paid in 1, 3 and 5 months
    payments: tuple[int, int, int] | None = None


@dataclass(frozen=True)
class Observation:
    menu: frozenset[int]
    choice: int


@dataclass(frozen=True)
class ChoiceDataset:
    """A subject's observations over a fixed universe of alternatives.

    Construction checks the structural invariants (menu sizes, choice
    membership, one observation per menu, known alternatives).  Payment
    totals are only checked by :func:`validate_dataset`, since the expected
    total is a property of the experiment rather than of the data.
    """

    universe: tuple[Alternative, ...]
    observations: tuple[Observation, ...]

    def __post_init__(self) -> None:
        for i, alt in enumerate(self.universe):
            if alt.id != i:
                raise ValidationError(f"alternative ids must be dense 0..n-1, got {alt.id} at position {i}")
        n = len(self.universe)
        seen: set[frozenset[int]] = set()
        for obs in self.observations:
            unknown = [x for x in obs.menu if not 0 <= x < n]
            if unknown or not 0 <= obs.choice < n:
                raise UnknownAlternative(f"menu {sorted(obs.menu)} references alternatives outside 0..{n - 1}")
            if len(obs.menu) < 2:
                raise MenuTooSmall(f"menu {sorted(obs.menu)} has fewer than two alternatives")
            if obs.choice not in obs.menu:
                raise ChoiceNotInMenu(f"choice {obs.choice} is not in menu {sorted(obs.menu)}")
            if obs.menu in seen:
                raise DuplicateMenu(f"menu {sorted(obs.menu)} is observed more than once")
            seen.add(obs.menu)

    @classmethod
    def build(
        cls,
        observations: Iterable[tuple[Iterable[Any], Any]],
        labels: Sequence[str] | None = None,
        n: int | None = None,
    ) -> ChoiceDataset:
        """Build a dataset from ``(menu, choice)`` pairs.

        With ``labels`` given, menus and choices may use labels instead of ids
        (``[("xy", "y"), ("xyz", "x")]`` works for single-character labels).
        """
        if labels is None:
            obs_list = [(frozenset(menu), choice) for menu, choice in observations]
            if n is None:
                n = 1 + max((max(m) for m, _ in obs_list if m), default=-1)
            labels = [str(i) for i in range(n)]
            index = {i: i for i in range(n)}
        else:
            index = {lab: i for i, lab in enumerate(labels)}
            index.update({i: i for i in range(len(labels))})
            obs_list = list(observations)

        def resolve(x: Any) -> int:
            try:
                return index[x]
            except KeyError:
                raise UnknownAlternative(f"unknown alternative {x!r}") from None

        universe = tuple(Alternative(i, lab) for i, lab in enumerate(labels))
        obs = tuple(
            Observation(frozenset(resolve(x) for x in menu), resolve(choice)) for menu, choice in obs_list
        )
        return cls(universe, obs)

    @property
    def n(self) -> int:
        return len(self.universe)

    @property
    def menus(self) -> list[frozenset[int]]:
        return [o.menu for o in self.observations]

    @property
    def choices(self) -> list[int]:
        return [o.choice for o in self.observations]

    def label(self, x: int) -> str:
        return self.universe[x].label

    def __len__(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class StrictRelation:
    """An asymmetric binary relation; ``(x, y)`` in ``pairs`` means x above y."""

    pairs: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        for x, y in self.pairs:
            if x == y or (y, x) in self.pairs:
                raise ValueError(f"relation is not asymmetric at ({x}, {y})")

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def lower_contour(self, x: int) -> frozenset[int]:
        return frozenset(y for a, y in self.pairs if a == x)

    def is_transitive(self) -> bool:
        succ: dict[int, set[int]] = {}
        for x, y in self.pairs:
            succ.setdefault(x, set()).add(y)
        return all((x, z) in self.pairs for x, y in self.pairs for z in succ.get(y, ()))

    def is_linear_order(self, n: int) -> bool:
        return len(self.pairs) == comb(n, 2) and self.is_transitive()


@dataclass(frozen=True)
class ViolationReport:
    warp_pairs: list[tuple[int, int]]
    sarp_cycles: list[tuple[int, ...]]
    involved: frozenset[int]
    directly_involved: frozenset[int]
    pure_sarp_only: frozenset[int]


# ---------------------------------------------------------------------------
# ingestion


def validate_dataset(raw: Mapping[str, Any], bundle_total: int = DEFAULT_BUNDLE_TOTAL) -> ChoiceDataset:
    """Turn a parsed mapping into a validated :class:`ChoiceDataset`.

    ``raw`` holds ``alternatives`` (objects with ``id``, ``label`` and an
    optional ``payments`` triple) and ``observations`` (objects with ``menu``
    and ``choice``).  Ids, not labels, are used inside observations.
    """
    alternatives = []
    for i, entry in enumerate(raw.get("alternatives", [])):
        payments = entry.get("payments")
        if payments is not None:
            payments = tuple(int(p) for p in payments)
            if len(payments) != 3:
                raise ValidationError(f"alternative {entry.get('id', i)} needs exactly three payments")
            if sum(payments) != bundle_total:
                raise BundleSumMismatch(
                    f"alternative {entry.get('id', i)} pays {sum(payments)} in total, expected {bundle_total}"
                )
        alternatives.append(Alternative(int(entry.get("id", i)), str(entry.get("label", i)), payments))
    alternatives.sort(key=lambda a: a.id)
    observations = tuple(
        Observation(frozenset(int(x) for x in o["menu"]), int(o["choice"])) for o in raw.get("observations", [])
    )
    return ChoiceDataset(tuple(alternatives), observations)


# ---------------------------------------------------------------------------
# direct revelation and consistency violations


def direct_relation(d: ChoiceDataset) -> set[Pair]:
    """Pairs ``(c(B), y)`` for every observed menu B and unchosen y in B.

    The result may contain both ``(x, y)`` and ``(y, x)``.
    """
    return {(o.choice, y) for o in d.observations for y in o.menu if y != o.choice}


def _is_warp_pair(a: Observation, b: Observation) -> bool:
    common = a.menu & b.menu
    return a.choice != b.choice and a.choice in common and b.choice in common


def find_warp_pairs(d: ChoiceDataset) -> list[tuple[int, int]]:
    obs = d.observations
    return [(i, j) for i, j in combinations(range(len(obs)), 2) if _is_warp_pair(obs[i], obs[j])]


def _choice_graph(d: ChoiceDataset) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(d.n))
    g.add_edges_from(sorted(direct_relation(d)))
    return g


def _edge_menu(d: ChoiceDataset, x: int, y: int) -> int:
    """Index of the first menu in which x was chosen while y was available."""
    return next(i for i, o in enumerate(d.observations) if o.choice == x and y in o.menu)


def _cycle_to_menus(d: ChoiceDataset, cycle: Sequence[int]) -> tuple[int, ...]:
    k = len(cycle)
    return tuple(_edge_menu(d, cycle[i], cycle[(i + 1) % k]) for i in range(k))


def has_sarp_violation(d: ChoiceDataset) -> tuple[bool, tuple[int, ...] | None]:
    """Whether the chosen-over digraph has a cycle, with one menu-index witness.

    The witness lists menus ``B_1..B_k`` such that the choice from each
    ``B_i`` is chosen over the choice from ``B_{i+1}`` (cyclically).
    """
    try:
        edges = nx.find_cycle(_choice_graph(d))
    except nx.NetworkXNoCycle:
        return False, None
    cycle = [u for u, _ in edges]
    start = cycle.index(min(cycle))
    cycle = cycle[start:] + cycle[:start]
    return True, _cycle_to_menus(d, cycle)


def sarp_cycles(d: ChoiceDataset, max_cycles: int = 10_000) -> list[tuple[int, ...]]:
    """Enumerate simple choice cycles (as menu-index tuples), at most ``max_cycles``."""
    g = _choice_graph(d)
    cycles = islice(nx.simple_cycles(g, length_bound=d.n), max_cycles)
    return [_cycle_to_menus(d, c) for c in cycles]


def warp_involved(d: ChoiceDataset) -> set[int]:
    """Alternatives chosen in a menu overlapping a WARP pair they both contain.

    x qualifies when there are menus T, S, Q with (T, S) a WARP pair,
    x in all three, c(Q) = x, and Q meeting S or T outside x.
    """
    obs = d.observations
    pairs = find_warp_pairs(d)
    out: set[int] = set()
    for q in obs:
        x = q.choice
        if x in out:
            continue
        rest = q.menu - {x}
        for i, j in pairs:
            t, s = obs[i].menu, obs[j].menu
            if x in t and x in s and (rest & s or rest & t):
                out.add(x)
                break
    return out


def warp_directly_involved(d: ChoiceDataset) -> set[int]:
    """Alternatives that are themselves one of the two choices of a WARP pair."""
    obs = d.observations
    out: set[int] = set()
    for i, j in find_warp_pairs(d):
        out.add(obs[i].choice)
        out.add(obs[j].choice)
    return out


def _on_long_cycle(succ: Mapping[int, set[int]], x: int) -> bool:
    # DFS over (node, visited-mask) states: is there a simple cycle through x of length >= 3?
    stack = [(x, 1 << x, 1)]
    seen = set()
    while stack:
        v, mask, length = stack.pop()
        for w in succ.get(v, ()):
            if w == x:
                if length >= 3:
                    return True
                continue
            if mask >> w & 1:
                continue
            state = (w, mask | 1 << w)
            if state in seen:
                continue
            seen.add(state)
            stack.append((w, mask | 1 << w, length + 1))
    return False


def pure_sarp_only(d: ChoiceDataset) -> set[int]:
    """Chosen alternatives on a choice cycle of length >= 3 but on no WARP pair."""
    chosen = set(d.choices)
    succ: dict[int, set[int]] = {}
    for x, y in direct_relation(d):
        if y in chosen:
            succ.setdefault(x, set()).add(y)
    direct = warp_directly_involved(d)
    return {x for x in sorted(chosen - direct) if _on_long_cycle(succ, x)}


def violation_report(d: ChoiceDataset, max_cycles: int = 10_000) -> ViolationReport:
    return ViolationReport(
        warp_pairs=find_warp_pairs(d),
        sarp_cycles=sarp_cycles(d, max_cycles),
        involved=frozenset(warp_involved(d)),
        directly_involved=frozenset(warp_directly_involved(d)),
        pure_sarp_only=frozenset(pure_sarp_only(d)),
    )


def observed_pivots(d: ChoiceDataset) -> tuple[set[int], set[int]]:
    """Chosen alternatives (type 1) and observed unchosen pivots (type 2).

    An unchosen p in S is a type 2 pivot when S minus p is also observed and
    the choice differs between the two menus.
    """
    by_menu = {o.menu: o.choice for o in d.observations}
    type1 = set(by_menu.values())
    type2 = set()
    for menu, choice in by_menu.items():
        for p in menu:
            if p == choice:
                continue
            smaller = by_menu.get(menu - {p})
            if smaller is not None and smaller != choice:
                type2.add(p)
    return type1, type2


def distinct_chosen(d: ChoiceDataset) -> int:
    return len(set(d.choices))


# ---------------------------------------------------------------------------
# rational benchmark


def transitive_closure(pairs: Iterable[Pair]) -> set[Pair]:
    g = nx.DiGraph(list(pairs))
    return {(u, v) for u, v in nx.transitive_closure(g, reflexive=False).edges() if u != v}


def rational_revealed(d: ChoiceDataset) -> StrictRelation:
    """Transitive closure of the direct relation; raises :class:`Irrational` on a cycle."""
    found, witness = has_sarp_violation(d)
    if found:
        raise Irrational("choices contain a cycle", witness or ())
    return StrictRelation(frozenset(transitive_closure(direct_relation(d))))


def density(rel: Union[StrictRelation, Iterable[Pair]], n: int) -> float:
    """Share of the C(n, 2) unordered pairs that ``rel`` compares."""
    if n < 2:
        raise ValueError("density needs at least two alternatives")
    pairs = rel.pairs if isinstance(rel, StrictRelation) else rel
    compared = {frozenset(p) for p in pairs}
    return len(compared) / comb(n, 2)
