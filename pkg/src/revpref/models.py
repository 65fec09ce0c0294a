"""Two-stage models as constraint systems, and revealed preference under them.

Each model turns a dataset into a :class:`~revpref.constraints.ConstraintSystem`
whose solutions are the rationalizations of the data.  The revealed
preference relation is then the set of order atoms entailed by that system,
i.e. the pairs ranked the same way by every rationalizing preference.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations

from . import constraints as cs
from .constraints import ConstraintSystem, Literal, Solver, consider, neg, order, pos, stage1
from .core import ChoiceDataset, StrictRelation, find_warp_pairs, warp_directly_involved, warp_involved
from .errors import InapplicableModel, NotRationalizable

VARIANTS = ("rational", "nc", "la", "lc", "rsm", "trsm")
_CONSISTENCY = ("la", "lc", "rsm", "trsm")


@dataclass(frozen=True)
class ModelSpec:
    """Which two-stage model to test.

    ``k`` is the minimum consideration-set size of the NC family.  For LA,
    LC, RSM and TRSM, ``amended_min_size`` adds the requirement that every
    observed menu has at least that many alternatives considered.
    """

    variant: str
    k: int = 1
    amended_min_size: int | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}")
        if self.k < 1:
            raise ValueError("minimum consideration size must be at least 1")
        if self.variant != "nc" and self.k != 1:
            raise ValueError("k only applies to the NC family")
        if self.amended_min_size is not None:
            if self.variant not in _CONSISTENCY:
                raise ValueError(f"{self.variant} has no amended version")
            if self.amended_min_size < 2:
                raise ValueError("amendment needs a minimum size of at least 2")

    @classmethod
    def parse(cls, name: str) -> ModelSpec:
        """Parse names such as ``rational``, ``nc2``, ``la``, ``rsm2``."""
        m = re.fullmatch(r"(rational|nc|la|lc|rsm|trsm)(\d*)", name.strip().lower())
        if not m:
            raise ValueError(f"cannot parse model name {name!r}")
        variant, num = m.group(1), m.group(2)
        if variant == "rational":
            if num:
                raise ValueError("rational takes no size suffix")
            return cls("rational")
        if variant == "nc":
            return cls("nc", k=int(num or 1))
        if num and int(num) > 1:
            return cls(variant, amended_min_size=int(num))
        return cls(variant)

    @property
    def name(self) -> str:
        if self.variant == "nc":
            return f"nc{self.k}"
        if self.amended_min_size:
            return f"{self.variant}{self.amended_min_size}"
        return self.variant

    @property
    def base(self) -> ModelSpec:
        return ModelSpec(self.variant, self.k)

    @property
    def amended(self) -> bool:
        return self.amended_min_size is not None

    def __str__(self) -> str:
        return self.name


RATIONAL = ModelSpec("rational")
NC1 = ModelSpec("nc", 1)
NC2 = ModelSpec("nc", 2)
LA = ModelSpec("la")
LC = ModelSpec("lc")
RSM = ModelSpec("rsm")
TRSM = ModelSpec("trsm")
BASE_MODELS = (RATIONAL, NC1, NC2, LA, LC, RSM, TRSM)
AMENDED_MODELS = tuple(ModelSpec(v, amended_min_size=2) for v in _CONSISTENCY)
# the eleven configurations of the replication report
REPORT_MODELS = BASE_MODELS + AMENDED_MODELS


@dataclass(frozen=True)
class RevealedResult:
    rationalizable: bool
    revealed: StrictRelation = field(default_factory=StrictRelation)
    lower_contours: dict[int, frozenset[int]] = field(default_factory=dict)
    restricted: frozenset[int] = frozenset()


# ---------------------------------------------------------------------------
# system construction


def _at_least(lits: list[Literal], m: int) -> list[cs.Clause]:
    # every (len - m + 1)-subset holds a true literal; menus are small, so no auxiliaries
    if m <= 0:
        return []
    width = len(lits) - m + 1
    if width <= 0:
        raise ValueError("cardinality bound exceeds the number of literals")
    return [cs.Clause(tuple(sub)) for sub in combinations(lits, width)]


def _rational(d: ChoiceDataset) -> list[cs.Clause]:
    return [cs.Clause((pos(order(o.choice, y)),)) for o in d.observations for y in sorted(o.menu) if y != o.choice]


def _nc(d: ChoiceDataset, k: int) -> tuple[list[cs.Clause], bool]:
    if k == 1:
        return [], False
    if k == 2:
        return [
            cs.Clause(tuple(pos(order(o.choice, y)) for y in sorted(o.menu) if y != o.choice))
            for o in d.observations
        ], False
    return _consideration(d, k), True


def _consideration(d: ChoiceDataset, k: int) -> list[cs.Clause]:
    """Consideration atoms per observed menu: choice considered, others below it, size >= k."""
    out = []
    for b, o in enumerate(d.observations):
        c = o.choice
        out.append(cs.Clause((pos(consider(b, c)),)))
        others = [y for y in sorted(o.menu) if y != c]
        for y in others:
            out.append(cs.Clause((neg(consider(b, y)), pos(order(c, y)))))
        out.extend(_at_least([pos(consider(b, y)) for y in others], min(k, len(o.menu)) - 1))
    return out


def _la(d: ChoiceDataset) -> list[cs.Clause]:
    obs = d.observations
    out = []
    for i, j in find_warp_pairs(d):
        s, t = obs[i], obs[j]
        lits = [pos(order(s.choice, z)) for z in sorted(s.menu - t.menu)]
        lits += [pos(order(t.choice, z)) for z in sorted(t.menu - s.menu)]
        out.append(cs.Clause(tuple(lits)))
    return out


def _lc(d: ChoiceDataset) -> list[cs.Clause]:
    obs = d.observations
    out = []
    for s in obs:
        for t in obs:
            if s.menu < t.menu and t.choice in s.menu and s.choice != t.choice:
                out.append(cs.Clause((pos(order(s.choice, t.choice)),)))
    return out


def _shortlist(d: ChoiceDataset) -> list[cs.Clause]:
    """The chosen alternative survives stage 1; every other one is eliminated or ranked below it."""
    out = []
    for o in d.observations:
        c = o.choice
        for z in sorted(o.menu):
            if z != c:
                out.append(cs.Clause((neg(stage1(z, c)),)))
        for y in sorted(o.menu):
            if y == c:
                continue
            lits = [pos(stage1(z, y)) for z in sorted(o.menu) if z != y]
            out.append(cs.Clause(tuple(lits) + (pos(order(c, y)),)))
    return out


def _la_lattice(d: ChoiceDataset) -> list[cs.Clause]:
    # if neither menu attends to anything outside the overlap, both equal the
    # filter of the overlap and so consider the same alternatives
    obs = d.observations
    out = []
    for i, j in combinations(range(len(obs)), 2):
        s, t = obs[i].menu, obs[j].menu
        common = s & t
        if not common:
            continue
        escape = [pos(consider(i, z)) for z in sorted(s - t)] + [pos(consider(j, z)) for z in sorted(t - s)]
        for w in sorted(common):
            out.append(cs.Clause(tuple(escape) + (neg(consider(i, w)), pos(consider(j, w)))))
            out.append(cs.Clause(tuple(escape) + (pos(consider(i, w)), neg(consider(j, w)))))
    return out


def _lc_lattice(d: ChoiceDataset) -> list[cs.Clause]:
    obs = d.observations
    out = []
    for i, big in enumerate(obs):
        for j, small in enumerate(obs):
            if small.menu < big.menu:
                for y in sorted(small.menu):
                    out.append(cs.Clause((neg(consider(i, y)), pos(consider(j, y)))))
    return out


def _relational_lattice(d: ChoiceDataset) -> list[cs.Clause]:
    out = []
    for b, o in enumerate(d.observations):
        for y in sorted(o.menu):
            beaters = [z for z in sorted(o.menu) if z != y]
            for z in beaters:
                out.append(cs.Clause((neg(consider(b, y)), neg(stage1(z, y)))))
            out.append(cs.Clause(tuple(pos(stage1(z, y)) for z in beaters) + (pos(consider(b, y)),)))
    return out


def build_system(model: ModelSpec, d: ChoiceDataset) -> ConstraintSystem:
    """Constraint system whose solutions are the model's rationalizations of ``d``."""
    families = {cs.ORDER}
    axioms = {cs.ORDER_TOTAL, cs.ORDER_TRANSITIVE}
    v = model.variant
    if v == "rational":
        clauses = _rational(d)
    elif v == "nc":
        clauses, uses_consider = _nc(d, model.k)
        if uses_consider:
            families.add(cs.CONSIDER)
    elif v == "la":
        clauses = _la(d)
    elif v == "lc":
        clauses = _lc(d)
    else:
        families.add(cs.STAGE1)
        axioms.add(cs.STAGE1_ASYMMETRIC)
        if v == "trsm":
            axioms.add(cs.STAGE1_TRANSITIVE)
        else:
            # an elimination cycle would leave some unobserved menu with nothing to choose
            families.add(cs.RANK)
            axioms.add(cs.STAGE1_ACYCLIC)
        clauses = _shortlist(d)
    if model.amended:
        families.add(cs.CONSIDER)
        clauses = clauses + _consideration(d, model.amended_min_size)
        if v == "la":
            clauses += _la_lattice(d)
        elif v == "lc":
            clauses += _lc_lattice(d)
        else:
            clauses += _relational_lattice(d)
    return ConstraintSystem(d.n, frozenset(families), tuple(clauses), frozenset(axioms))


# ---------------------------------------------------------------------------
# verdicts and revealed preference


def is_rationalizable(model: ModelSpec, d: ChoiceDataset, budget: int | None = None) -> bool:
    return cs.satisfiable(build_system(model, d), budget) is not None


def theorem_screen(model: ModelSpec, d: ChoiceDataset) -> set[int]:
    """Alternatives that can have a nonempty lower contour set at all.

    TRSM only needs choice over a pivot, so involvement in a WARP violation
    is the bound; LA, LC and RSM need choice over a chosen alternative, so
    the bound is direct involvement.

    The TRSM bound holds on complete domains but not on every incomplete
    one: transitivity of the first-stage relation can carry information
    from menus that do not contain x.  :func:`evaluate` therefore does not
    prune TRSM with it.
    """
    if model.amended or model.variant not in _CONSISTENCY:
        raise InapplicableModel(f"no screening result applies to {model.name}")
    if model.variant == "trsm":
        return warp_involved(d)
    return warp_directly_involved(d)


def _order_pairs(cnf: cs.Cnf, assignment: list[bool]) -> set[tuple[int, int]]:
    return {(a.a, a.b) for a, val in zip(cnf.atoms, assignment) if val and a.kind == cs.ORDER}


def evaluate(
    model: ModelSpec, d: ChoiceDataset, screen: bool = False, budget: int | None = None
) -> RevealedResult:
    """Rationalizability verdict plus, when it holds, the revealed relation.

    Every ordered pair true in the first witness is a candidate; each
    candidate is refuted by a witness that ranks it the other way, or
    confirmed when no such witness exists.  Fresh witnesses prune the
    remaining candidates.  With ``screen`` set, LA, LC and RSM candidates
    are first limited to the alternatives allowed by :func:`theorem_screen`.
    """
    sys = build_system(model, d)
    cnf = sys.compile()
    solver = Solver(cnf, budget)
    first = solver.solve()
    if first is None:
        return RevealedResult(False)
    candidates = _order_pairs(cnf, first)
    # the involvement screen fails for TRSM on incomplete data (see theorem_screen), so it only prunes the others
    if screen and not model.amended and model.variant in ("la", "lc", "rsm"):
        allowed = theorem_screen(model, d)
        candidates = {(x, y) for x, y in candidates if x in allowed}
    fixed = solver.fixed()
    revealed: set[tuple[int, int]] = set()
    for x, y in sorted(candidates):
        if (x, y) not in candidates:
            continue
        var = cnf.index[order(x, y)]
        if fixed.get(var) or any((x, z) in revealed and (z, y) in revealed for z in range(d.n)):
            revealed.add((x, y))
            continue
        witness = solver.solve([2 * var + 1])
        if witness is None:
            revealed.add((x, y))
        else:
            candidates &= _order_pairs(cnf, witness)
    relation = StrictRelation(frozenset(revealed))
    contours = {x: relation.lower_contour(x) for x in range(d.n)}
    return RevealedResult(True, relation, contours, _restricted(sys, cnf, fixed, contours))


def _restricted(sys: ConstraintSystem, cnf: cs.Cnf, fixed: dict[int, bool], contours) -> frozenset[int]:
    """Alternatives whose lower contour set is touched by a residual model clause."""
    out = {x for x, low in contours.items() if low}
    for c in sys.clauses:
        live = []
        satisfied = False
        for lit in c:
            val = fixed.get(cnf.index[lit.atom])
            if val is None:
                live.append(lit)
            elif val == lit.positive:
                satisfied = True
                if lit.atom.kind == cs.ORDER:
                    out.add(lit.atom.a if lit.positive else lit.atom.b)
        if satisfied:
            continue
        for lit in live:
            if lit.atom.kind == cs.ORDER:
                out.add(lit.atom.a if lit.positive else lit.atom.b)
    return frozenset(out)


def revealed(model: ModelSpec, d: ChoiceDataset, screen: bool = False, budget: int | None = None) -> RevealedResult:
    result = evaluate(model, d, screen, budget)
    if not result.rationalizable:
        raise NotRationalizable(f"data is not rationalizable by {model.name}")
    return result


def lower_contour(model: ModelSpec, d: ChoiceDataset, x: int) -> frozenset[int]:
    return revealed(model, d).lower_contours[x]
