"""Boolean constraints over comparison atoms, and a small SAT solver for them.

Four atom families exist:

* ``order(x, y)``: x is ranked above y by the preference (second stage);
* ``stage1(x, y)``: x eliminates y in the first stage;
* ``consider(b, x)``: x survives the first stage in observed menu ``b``;
* ``rank(x, y)``: an auxiliary linear order that contains ``stage1``,
  present only to keep the first-stage relation acyclic.

A :class:`ConstraintSystem` is an immutable bundle of clauses plus axiom
flags (linear-order axioms for ``order``, asymmetry/transitivity/acyclicity
for ``stage1``).  Axiom clauses are generated when the system is compiled.

The solver is a conflict-driven DPLL: unit propagation over two watched
literals per clause, first-UIP clause learning and activity-ordered
branching.  Initial activities are occurrence counts, so the most
constrained variables are tried first; ties go to the lower variable index.
It supports solving under assumptions, which is how entailment queries are
answered incrementally.
"""

from __future__ import annotations

import heapq
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import NamedTuple

from .errors import BudgetExceeded, UnknownAtomFamily, UnsatisfiableSystem

ORDER = "order"
STAGE1 = "stage1"
CONSIDER = "consider"
RANK = "rank"
_FAMILY_RANK = {ORDER: 0, STAGE1: 1, CONSIDER: 2, RANK: 3}

ORDER_TOTAL = "order-total"
ORDER_TRANSITIVE = "order-transitive"
STAGE1_ASYMMETRIC = "stage1-asymmetric"
STAGE1_TRANSITIVE = "stage1-transitive"
STAGE1_ACYCLIC = "stage1-acyclic"
_AXIOM_FAMILY = {
    ORDER_TOTAL: ORDER,
    ORDER_TRANSITIVE: ORDER,
    STAGE1_ASYMMETRIC: STAGE1,
    STAGE1_TRANSITIVE: STAGE1,
    STAGE1_ACYCLIC: RANK,
}

DEFAULT_BUDGET = 2_000_000


def default_budget() -> int:
    """Conflict budget per solver call; ``REVPREF_BUDGET`` overrides it."""
    raw = os.environ.get("REVPREF_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


class Atom(NamedTuple):
    kind: str
    a: int
    b: int

    def __str__(self) -> str:
        if self.kind == ORDER:
            return f"{self.a}>{self.b}"
        if self.kind == STAGE1:
            return f"{self.a}>1{self.b}"
        if self.kind == RANK:
            return f"{self.a}>r{self.b}"
        return f"{self.b}@B{self.a}"


def order(x: int, y: int) -> Atom:
    return Atom(ORDER, x, y)


def stage1(x: int, y: int) -> Atom:
    return Atom(STAGE1, x, y)


def consider(menu: int, x: int) -> Atom:
    return Atom(CONSIDER, menu, x)


def rank(x: int, y: int) -> Atom:
    return Atom(RANK, x, y)


class Literal(NamedTuple):
    atom: Atom
    positive: bool = True

    def __invert__(self) -> Literal:
        return Literal(self.atom, not self.positive)

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"~{self.atom}"


def pos(atom: Atom) -> Literal:
    return Literal(atom, True)


def neg(atom: Atom) -> Literal:
    return Literal(atom, False)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals with duplicates removed.

    Use :func:`clause` to build one; it returns ``None`` for tautologies.
    """

    literals: tuple[Literal, ...]

    def __post_init__(self) -> None:
        if not self.literals:
            raise ValueError("a clause needs at least one literal")
        lits = tuple(dict.fromkeys(self.literals))
        if any(~lit in lits for lit in lits):
            raise ValueError("clause contains both polarities of an atom")
        object.__setattr__(self, "literals", lits)

    def __iter__(self):
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)


def clause(*literals: Literal | Atom) -> Clause | None:
    """Normalize literals into a :class:`Clause`; bare atoms count as positive."""
    lits = tuple(dict.fromkeys(lit if isinstance(lit, Literal) else pos(lit) for lit in literals))
    if any(~lit in lits for lit in lits):
        return None
    return Clause(lits)


# ---------------------------------------------------------------------------
# axioms


@lru_cache(maxsize=32)
def order_axioms(n: int) -> tuple[Clause, ...]:
    """Strict linear order over ``range(n)``: exactly one direction per pair, plus transitivity."""
    out: list[Clause] = []
    for x in range(n):
        for y in range(x + 1, n):
            out.append(Clause((pos(order(x, y)), pos(order(y, x)))))
            out.append(Clause((neg(order(x, y)), neg(order(y, x)))))
    out.extend(_transitivity(order, n))
    return tuple(out)


@lru_cache(maxsize=32)
def stage1_axioms(n: int, transitive: bool = False) -> tuple[Clause, ...]:
    out = [Clause((neg(stage1(x, y)), neg(stage1(y, x)))) for x in range(n) for y in range(x + 1, n)]
    if transitive:
        out.extend(_transitivity(stage1, n))
    return tuple(out)


@lru_cache(maxsize=32)
def acyclicity_axioms(n: int) -> tuple[Clause, ...]:
    """``stage1`` is contained in the linear order ``rank``, hence has no cycle."""
    out = []
    for x in range(n):
        for y in range(x + 1, n):
            out.append(Clause((pos(rank(x, y)), pos(rank(y, x)))))
            out.append(Clause((neg(rank(x, y)), neg(rank(y, x)))))
    out.extend(_transitivity(rank, n))
    out.extend(Clause((neg(stage1(x, y)), pos(rank(x, y)))) for x, y in permutations(range(n), 2))
    return tuple(out)


def _transitivity(make, n: int) -> list[Clause]:
    return [
        Clause((neg(make(x, y)), neg(make(y, z)), pos(make(x, z))))
        for x, y, z in permutations(range(n), 3)
    ]


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class ConstraintSystem:
    n: int
    families: frozenset[str] = frozenset({ORDER})
    clauses: tuple[Clause, ...] = ()
    axioms: frozenset[str] = frozenset({ORDER_TOTAL, ORDER_TRANSITIVE})

    def __post_init__(self) -> None:
        object.__setattr__(self, "families", frozenset(self.families))
        object.__setattr__(self, "axioms", frozenset(self.axioms))
        object.__setattr__(self, "clauses", tuple(self.clauses))
        for ax in self.axioms:
            if ax not in _AXIOM_FAMILY:
                raise ValueError(f"unknown axiom flag {ax!r}")
            if _AXIOM_FAMILY[ax] not in self.families:
                raise UnknownAtomFamily(f"axiom {ax} needs the {_AXIOM_FAMILY[ax]} family")
        for c in self.clauses:
            self._check(c)

    def _check(self, c: Clause) -> None:
        for lit in c:
            atom = lit.atom
            if atom.kind not in self.families:
                raise UnknownAtomFamily(f"atom {atom} belongs to undeclared family {atom.kind!r}")
            if atom.kind in (ORDER, STAGE1, RANK):
                if atom.a == atom.b or not (0 <= atom.a < self.n and 0 <= atom.b < self.n):
                    raise ValueError(f"bad relational atom {atom}")

    def add_clause(self, c: Clause | Iterable[Literal | Atom] | None) -> ConstraintSystem:
        """Return a new system with ``c`` appended (tautologies are dropped)."""
        if c is not None and not isinstance(c, Clause):
            c = clause(*c)
        if c is None:
            return self
        self._check(c)
        return ConstraintSystem(self.n, self.families, self.clauses + (c,), self.axioms)

    def add_clauses(self, cs: Iterable[Clause | None]) -> ConstraintSystem:
        kept = tuple(c for c in cs if c is not None)
        for c in kept:
            self._check(c)
        return ConstraintSystem(self.n, self.families, self.clauses + kept, self.axioms)

    def axiom_clauses(self) -> tuple[Clause, ...]:
        out: tuple[Clause, ...] = ()
        if ORDER_TOTAL in self.axioms and ORDER_TRANSITIVE in self.axioms:
            out += order_axioms(self.n)
        elif ORDER_TOTAL in self.axioms:
            out += order_axioms(self.n)[: self.n * (self.n - 1)]
        elif ORDER_TRANSITIVE in self.axioms:
            out += tuple(_transitivity(order, self.n))
        if STAGE1_ASYMMETRIC in self.axioms:
            out += stage1_axioms(self.n, STAGE1_TRANSITIVE in self.axioms)
        elif STAGE1_TRANSITIVE in self.axioms:
            out += tuple(_transitivity(stage1, self.n))
        if STAGE1_ACYCLIC in self.axioms:
            out += acyclicity_axioms(self.n)
        return out

    def atoms(self) -> list[Atom]:
        """All atoms of the system, in variable-index order."""
        found: set[Atom] = set()
        n = self.n
        if ORDER in self.families:
            found.update(order(x, y) for x in range(n) for y in range(n) if x != y)
        if STAGE1 in self.families:
            found.update(stage1(x, y) for x in range(n) for y in range(n) if x != y)
        if RANK in self.families:
            found.update(rank(x, y) for x in range(n) for y in range(n) if x != y)
        for c in self.clauses:
            found.update(lit.atom for lit in c)
        return sorted(found, key=lambda a: (_FAMILY_RANK[a.kind], a.a, a.b))

    def compile(self) -> Cnf:
        return Cnf.from_system(self)

    def to_dimacs(self) -> str:
        """DIMACS text with a ``c`` comment line mapping variables to atoms."""
        cnf = self.compile()
        lines = [f"p cnf {len(cnf.atoms)} {len(cnf.clauses)}"]
        lines += [f"c {i + 1} {atom}" for i, atom in enumerate(cnf.atoms)]
        for c in cnf.clauses:
            lines.append(" ".join(str(-(l >> 1) - 1 if l & 1 else (l >> 1) + 1) for l in c) + " 0")
        return "\n".join(lines) + "\n"


@dataclass
class Cnf:
    """Integer form of a system: literal ``2v`` is atom v, ``2v + 1`` its negation."""

    atoms: list[Atom]
    index: dict[Atom, int]
    clauses: list[list[int]] = field(default_factory=list)

    @classmethod
    def from_system(cls, sys: ConstraintSystem) -> Cnf:
        atoms = sys.atoms()
        index = {a: i for i, a in enumerate(atoms)}
        cnf = cls(atoms, index)
        for c in sys.axiom_clauses() + sys.clauses:
            cnf.clauses.append([cnf.lit(lit) for lit in c])
        return cnf

    def lit(self, lit: Literal) -> int:
        return 2 * self.index[lit.atom] + (0 if lit.positive else 1)


# ---------------------------------------------------------------------------
# solver


class Solver:
    """Incremental CDCL solver over a compiled :class:`Cnf`.

    One instance may answer many :meth:`solve` calls with different
    assumptions; learned clauses are consequences of the base clauses only,
    so they stay valid across calls.
    """

    def __init__(self, cnf: Cnf, budget: int | None = None):
        self.cnf = cnf
        self.budget = default_budget() if budget is None else budget
        nv = len(cnf.atoms)
        self.nvars = nv
        self.lv = [-1] * (2 * nv)  # literal values: -1 unassigned, 0 false, 1 true
        self.level = [0] * nv
        self.reason: list[int | None] = [None] * nv
        self.phase = [1] * nv  # saved polarity: 1 means try the negative literal
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * nv)]
        self.activity = [0.0] * nv
        self.inc = 1.0
        self.unsat = False
        self.conflicts = 0
        self._seen = [False] * nv
        units = []
        for raw in cnf.clauses:
            c = list(dict.fromkeys(raw))
            if not c:
                self.unsat = True
                continue
            for l in c:
                self.activity[l >> 1] += 1.0
            if len(c) == 1:
                units.append(c[0])
            else:
                self._attach(c)
        self.heap = [(-self.activity[v], v) for v in range(nv)]
        heapq.heapify(self.heap)
        for l in units:
            if self.lv[l] == 0:
                self.unsat = True
            elif self.lv[l] == -1:
                self._assign(l, None)
        if not self.unsat and self._propagate() is not None:
            self.unsat = True

    # -- bookkeeping --------------------------------------------------------

    def _attach(self, c: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(c)
        self.watches[c[0]].append(ci)
        self.watches[c[1]].append(ci)
        return ci

    def _assign(self, l: int, reason: int | None) -> None:
        v = l >> 1
        self.lv[l] = 1
        self.lv[l ^ 1] = 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(l)

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        lv, phase, heap, act = self.lv, self.phase, self.heap, self.activity
        stop = self.trail_lim[lvl]
        for l in reversed(self.trail[stop:]):
            v = l >> 1
            lv[l] = -1
            lv[l ^ 1] = -1
            phase[v] = l & 1
            self.reason[v] = None
            heapq.heappush(heap, (-act[v], v))
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        if len(heap) > 8 * self.nvars + 64:
            self.heap = [(-act[u], u) for u in range(self.nvars) if lv[2 * u] == -1]
            heapq.heapify(self.heap)

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.inc
        if act[v] > 1e100:
            for i in range(self.nvars):
                act[i] *= 1e-100
            self.inc *= 1e-100
            self.heap = [(-act[u], u) for u in range(self.nvars) if self.lv[2 * u] == -1]
            heapq.heapify(self.heap)
        elif self.lv[2 * v] == -1:
            heapq.heappush(self.heap, (-act[v], v))

    # -- propagation and learning -------------------------------------------

    def _propagate(self) -> int | None:
        lv, clauses, watches, trail = self.lv, self.clauses, self.watches, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                if lv[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    if lv[c[k]] != 0:
                        c[1], c[k] = c[k], false_lit
                        watches[c[1]].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if lv[first] == 0:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return ci
                    self._assign(first, ci)
            del ws[j:]
        return None

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen, level, reason, trail = self._seen, self.level, self.reason, self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        counter = 0
        p = -1
        idx = len(trail) - 1
        ci: int | None = confl
        while True:
            c = self.clauses[ci]
            for q in c if p == -1 else c[1:]:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = False
            counter -= 1
            if counter == 0:
                break
            ci = reason[v]
        learnt[0] = p ^ 1
        for q in learnt[1:]:
            seen[q >> 1] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _pick(self) -> int | None:
        heap, lv = self.heap, self.lv
        while heap:
            _, v = heapq.heappop(heap)
            if lv[2 * v] == -1:
                return v
        return None

    # -- public -------------------------------------------------------------

    def solve(self, assumptions: Sequence[int] = ()) -> list[bool] | None:
        """Return a model (truth value per variable) or ``None`` if unsatisfiable.

        ``assumptions`` are integer literals that must hold; ``None`` then
        means no model satisfies them together with the clauses.
        """
        if self.unsat:
            return None
        self._backtrack(0)
        budget_end = self.conflicts + self.budget
        n_assume = len(assumptions)
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    self.unsat = True
                    return None
                if self.conflicts > budget_end:
                    self._backtrack(0)
                    raise BudgetExceeded(f"solver exceeded its budget of {self.budget} conflicts")
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self._assign(learnt[0], self._attach(learnt))
                self.inc /= 0.95
                continue
            dl = len(self.trail_lim)
            if dl < n_assume:
                a = assumptions[dl]
                if self.lv[a] == 0:
                    self._backtrack(0)
                    return None
                self.trail_lim.append(len(self.trail))
                if self.lv[a] == -1:
                    self._assign(a, None)
                continue
            v = self._pick()
            if v is None:
                model = [self.lv[2 * u] == 1 for u in range(self.nvars)]
                self._backtrack(0)
                return model
            self.trail_lim.append(len(self.trail))
            self._assign(2 * v + self.phase[v], None)

    def fixed(self) -> dict[int, bool]:
        """Variables assigned at decision level 0 (implied by the clauses alone)."""
        self._backtrack(0)
        return {l >> 1: not (l & 1) for l in self.trail}


# ---------------------------------------------------------------------------
# queries


def satisfiable(sys: ConstraintSystem, budget: int | None = None) -> dict[Atom, bool] | None:
    """A satisfying assignment of every atom of ``sys``, or ``None`` if there is none."""
    cnf = sys.compile()
    model = Solver(cnf, budget).solve()
    if model is None:
        return None
    return dict(zip(cnf.atoms, model))


def entails(sys: ConstraintSystem, atom: Atom, budget: int | None = None) -> bool:
    """True iff every satisfying assignment of ``sys`` makes ``atom`` true."""
    cnf = sys.compile()
    solver = Solver(cnf, budget)
    if solver.solve() is None:
        raise UnsatisfiableSystem("entailment asked of an unsatisfiable system")
    if atom not in cnf.index:
        return False
    return solver.solve([cnf.lit(neg(atom))]) is None
