"""Subject pools, synthetic agents and the replication metrics.

A pool is a shared menu collection plus one choice per menu for each
subject.  The metrics are the pass rate of a model, its predictive success
index against uniformly random choosers, the average density of the
revealed relation over passing subjects, and the distributions of the three
welfare indicators (distinct chosen alternatives, WARP involvement, direct
WARP involvement).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from math import comb, sqrt
from pathlib import Path
from typing import Any

import numpy as np

from . import core
from .core import Alternative, ChoiceDataset, Observation
from .errors import (
    BudgetExceeded,
    MenuMismatch,
    NoPassingSubjects,
    ParseError,
    SchemaError,
    ValidationError,
)
from .models import REPORT_MODELS, ModelSpec, RevealedResult, evaluate, is_rationalizable
from .oracle import sample_filter

log = logging.getLogger(__name__)

DATA_SCHEMA = "revpref-data/1"
REPORT_SCHEMA = "revpref-report/1"

# payments in yen at 1, 3 and 5 months; each bundle totals 2400
TABLE1_PAYMENTS = [
    (450, 800, 1150),
    (800, 800, 800),
    (1150, 800, 450),
    (450, 450, 1500),
    (450, 1500, 450),
    (800, 1150, 450),
    (850, 0, 1550),
    (1200, 0, 1200),
    (1550, 0, 850),
    (500, 0, 1900),
]
TABLE1 = tuple(Alternative(i, f"x{i + 1}", p) for i, p in enumerate(TABLE1_PAYMENTS))

# number of menus of each size in the experiment's collection of 20
MENU_SIZES = {2: 6, 3: 2, 4: 3, 5: 2, 6: 3, 7: 3, 8: 1}

RATIONAL_SHARE = 0.34


@dataclass(frozen=True)
class Subject:
    id: str
    data: ChoiceDataset


@dataclass(frozen=True)
class SubjectPool:
    universe: tuple[Alternative, ...]
    menus: tuple[frozenset[int], ...]
    subjects: tuple[Subject, ...]

    def __post_init__(self) -> None:
        for s in self.subjects:
            if tuple(s.data.menus) != self.menus:
                raise SchemaError(f"subject {s.id} does not cover exactly the shared menus")

    @property
    def n(self) -> int:
        return len(self.universe)

    def __len__(self) -> int:
        return len(self.subjects)

    def subject(self, sid: str) -> Subject:
        for s in self.subjects:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def to_json(self) -> dict[str, Any]:
        alts = []
        for a in self.universe:
            entry: dict[str, Any] = {"id": a.id, "label": a.label}
            if a.payments is not None:
                entry["payments"] = list(a.payments)
            alts.append(entry)
        return {
            "schema": DATA_SCHEMA,
            "alternatives": alts,
            "menus": [sorted(b) for b in self.menus],
            "subjects": [{"id": s.id, "choices": s.data.choices} for s in self.subjects],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def make_pool(
    universe: Sequence[Alternative], menus: Sequence[frozenset[int]], choices: Iterable[tuple[str, Sequence[int]]]
) -> SubjectPool:
    universe = tuple(universe)
    menus = tuple(frozenset(b) for b in menus)
    subjects = []
    for sid, row in choices:
        data = ChoiceDataset(universe, tuple(Observation(b, int(c)) for b, c in zip(menus, row)))
        subjects.append(Subject(str(sid), data))
    return SubjectPool(universe, menus, tuple(subjects))


# ---------------------------------------------------------------------------
# loading


def parse_pool(raw: Any, bundle_total: int = core.DEFAULT_BUNDLE_TOTAL) -> SubjectPool:
    if not isinstance(raw, dict):
        raise SchemaError("pool file must hold a JSON object")
    schema = raw.get("schema", DATA_SCHEMA)
    if schema != DATA_SCHEMA:
        raise SchemaError(f"unsupported schema {schema!r}")
    for key in ("alternatives", "menus", "subjects"):
        if not isinstance(raw.get(key), list):
            raise SchemaError(f"missing or malformed {key!r} block")
    try:
        universe = core.validate_dataset({"alternatives": raw["alternatives"]}, bundle_total).universe
        menus = [frozenset(int(x) for x in b) for b in raw["menus"]]
    except ValidationError as exc:
        raise SchemaError(f"invalid universe: {exc}") from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise SchemaError(f"malformed alternatives or menus: {exc}") from exc

    problems: list[tuple[str, str]] = []
    subjects = []
    for entry in raw["subjects"]:
        sid = str(entry.get("id", f"#{len(subjects) + len(problems)}"))
        row = entry.get("choices")
        if not isinstance(row, list) or len(row) != len(menus):
            problems.append((sid, f"expected {len(menus)} choices, got {len(row) if isinstance(row, list) else row!r}"))
            continue
        try:
            obs = tuple(Observation(b, int(c)) for b, c in zip(menus, row))
            subjects.append(Subject(sid, ChoiceDataset(universe, obs)))
        except (ValidationError, TypeError, ValueError) as exc:
            problems.append((sid, str(exc)))
    if problems:
        detail = "; ".join(f"{sid}: {msg}" for sid, msg in problems[:5])
        raise SchemaError(f"{len(problems)} subject(s) failed validation ({detail})", problems)
    return SubjectPool(universe, tuple(menus), tuple(subjects))


def _read_csv_pool(path: Path, menus_path: Path | None) -> dict[str, Any]:
    menus_path = menus_path or path.with_suffix(".menus.json")
    try:
        side = json.loads(menus_path.read_text())
    except FileNotFoundError as exc:
        raise ParseError(f"missing menus sidecar {menus_path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{menus_path}: {exc}") from exc
    rows: dict[str, dict[int, int]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"subject_id", "menu_index", "choice_id"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise SchemaError(f"CSV needs columns {sorted(need)}")
        for line in reader:
            try:
                rows.setdefault(line["subject_id"], {})[int(line["menu_index"])] = int(line["choice_id"])
            except ValueError as exc:
                raise ParseError(f"{path}: bad row {line}") from exc
    n_menus = len(side.get("menus", []))
    subjects = []
    for sid, by_menu in rows.items():
        if sorted(by_menu) != list(range(n_menus)):
            subjects.append({"id": sid, "choices": [by_menu.get(i) for i in sorted(by_menu)]})
        else:
            subjects.append({"id": sid, "choices": [by_menu[i] for i in range(n_menus)]})
    return {**side, "schema": DATA_SCHEMA, "subjects": subjects}


def load_pool(path: str | Path, format: str | None = None, menus_path: str | Path | None = None) -> SubjectPool:
    """Read a pool from JSON, or from long-format CSV with a JSON menus sidecar."""
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    if fmt == "json":
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    elif fmt == "csv":
        raw = _read_csv_pool(path, Path(menus_path) if menus_path else None)
    else:
        raise ValueError(f"unknown pool format {fmt!r}")
    return parse_pool(raw)


def save_pool(pool: SubjectPool, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pool.to_json(), indent=1) + "\n")


# ---------------------------------------------------------------------------
# menus and synthetic subjects


def default_menu_collection(seed: int = 0, n: int = 10, sizes: dict[int, int] | None = None) -> list[frozenset[int]]:
    """Distinct menus with the experiment's size composition, covering every alternative.

    Each size class is drawn uniformly without replacement; the whole draw is
    repeated until every alternative appears in some menu.
    """
    sizes = MENU_SIZES if sizes is None else sizes
    rng = np.random.default_rng(seed)
    while True:
        menus: list[frozenset[int]] = []
        for size, count in sorted(sizes.items()):
            drawn: list[frozenset[int]] = []
            while len(drawn) < count:
                b = frozenset(int(x) for x in rng.choice(n, size=size, replace=False))
                if b not in drawn:
                    drawn.append(b)
            menus.extend(sorted(drawn, key=sorted))
        if set().union(*menus) == set(range(n)):
            return menus


Chooser = Callable[[frozenset[int]], int]


def _ranking(n: int, rng: np.random.Generator) -> dict[int, int]:
    return {int(x): i for i, x in enumerate(rng.permutation(n))}  # 0 is best


def _best(menu: Iterable[int], rank: dict[int, int]) -> int:
    return min(menu, key=rank.__getitem__)


def rational_agent(n: int, rng: np.random.Generator) -> Chooser:
    rank = _ranking(n, rng)
    return lambda b: _best(b, rank)


def _salience_agent(n: int, rng: np.random.Generator, ks: Sequence[int]) -> Chooser:
    # consider the k most salient alternatives of each menu; attention and competition filter at once
    salience = _ranking(n, rng)
    rank = _ranking(n, rng)
    k = int(ks[rng.integers(len(ks))])

    def choose(b: frozenset[int]) -> int:
        shortlist = sorted(b, key=salience.__getitem__)[:k]
        return _best(shortlist, rank)

    return choose


def _relational_agent(
    n: int, rng: np.random.Generator, menus: Sequence[frozenset[int]], transitive: bool, min_size: int | None
) -> Chooser:
    rank = _ranking(n, rng)
    if transitive:
        # a semiorder: x eliminates y when its score beats y's by more than a margin
        score = rng.random(n)
        margin = float(rng.uniform(0.1, 0.6))

        def relation(m: float) -> set[tuple[int, int]]:
            return {(x, y) for x in range(n) for y in range(n) if score[x] > score[y] + m}

        rel = relation(margin)
        while min_size and any(len(_survivors(b, rel)) < min(min_size, len(b)) for b in menus):
            margin += 0.05
            rel = relation(margin)
    else:
        order = [int(x) for x in rng.permutation(n)]
        p = float(rng.uniform(0.15, 0.5))
        rel = {(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p}
        if min_size:
            for b in menus:
                while len(_survivors(b, rel)) < min(min_size, len(b)):
                    inside = sorted((x, y) for x, y in rel if x in b and y in b)
                    rel.discard(inside[rng.integers(len(inside))])

    def choose(b: frozenset[int]) -> int:
        return _best(_survivors(b, rel), rank)

    return choose


def _survivors(b: frozenset[int], rel: set[tuple[int, int]]) -> list[int]:
    return [y for y in b if not any((x, y) in rel for x in b)]


def _nc_agent(n: int, rng: np.random.Generator, k: int) -> Chooser:
    rank = _ranking(n, rng)
    memo: dict[frozenset[int], int] = {}

    def choose(b: frozenset[int]) -> int:
        if b not in memo:
            items = sorted(b)
            size = int(rng.integers(min(k, len(items)), len(items) + 1))
            shortlist = [items[i] for i in rng.choice(len(items), size=size, replace=False)]
            memo[b] = _best(shortlist, rank)
        return memo[b]

    return choose


def filter_agent(model: ModelSpec, n: int, rng: np.random.Generator) -> Chooser:
    """A uniformly sampled admissible filter of a base model plus a random order (n <= 4)."""
    f = sample_filter(model, n, rng)
    rank = _ranking(n, rng)
    return lambda b: _best(f[frozenset(b)], rank)


def model_agent(model: ModelSpec, n: int, rng: np.random.Generator, menus: Sequence[frozenset[int]]) -> Chooser:
    """A two-stage agent whose choices the given model can always explain."""
    v = model.variant
    if v == "rational":
        return rational_agent(n, rng)
    if v == "nc":
        return _nc_agent(n, rng, model.k)
    if v in ("la", "lc"):
        return _salience_agent(n, rng, (2, 3) if model.amended else (1, 2, 3))
    return _relational_agent(n, rng, menus, v == "trsm", model.amended_min_size)


# two-stage agents filling the non-rational part of the mixture preset
MIXTURE_AGENTS = ("la2", "rsm", "trsm", "nc2", "lc2", "rsm2", "trsm2", "la")


def generate_pool(
    preset: str,
    count: int,
    seed: int,
    menus: Sequence[frozenset[int]] | None = None,
    universe: Sequence[Alternative] = TABLE1,
) -> SubjectPool:
    """Synthetic subjects on the shared menus.

    ``preset`` is ``rational``, ``mixture`` (a 34% rational share, the rest
    cycling through :data:`MIXTURE_AGENTS`), ``random`` or ``model:<name>``.
    """
    n = len(universe)
    if menus is None:
        menus = default_menu_collection(seed, n)
    menus = [frozenset(b) for b in menus]
    if preset == "random":
        return simulate_random_subjects(menus, count, seed, universe)
    rng = np.random.default_rng(seed)
    if preset == "rational":
        kinds = ["rational"] * count
    elif preset == "mixture":
        n_rational = round(RATIONAL_SHARE * count)
        kinds = ["rational"] * n_rational + [MIXTURE_AGENTS[i % len(MIXTURE_AGENTS)] for i in range(count - n_rational)]
    elif preset.startswith("model:"):
        kinds = [preset.split(":", 1)[1]] * count
    else:
        raise ValueError(f"unknown preset {preset!r}")
    rows = []
    for i, kind in enumerate(kinds):
        agent = model_agent(ModelSpec.parse(kind), n, rng, menus)
        rows.append((f"s{i + 1:03d}", [agent(b) for b in menus]))
    return make_pool(universe, menus, rows)


def simulate_random_subjects(
    menus: Sequence[frozenset[int]], count: int, seed: int, universe: Sequence[Alternative] | None = None
) -> SubjectPool:
    """Subjects who pick uniformly and independently from every menu."""
    if count < 1:
        raise ValueError("need at least one random subject")
    menus = [frozenset(b) for b in menus]
    if universe is None:
        n = 1 + max(max(b) for b in menus)
        universe = tuple(Alternative(i, str(i)) for i in range(n))
    rng = np.random.default_rng(seed)
    items = [sorted(b) for b in menus]
    picks = [rng.integers(len(b), size=count) for b in items]
    rows = [(f"rand{i + 1:04d}", [items[j][picks[j][i]] for j in range(len(menus))]) for i in range(count)]
    return make_pool(universe, menus, rows)


# ---------------------------------------------------------------------------
# analysis


@dataclass
class PoolAnalysis:
    """Per-subject results of one model on one pool; budget failures kept aside."""

    model: ModelSpec
    results: dict[str, RevealedResult] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def passing(self) -> list[str]:
        return [sid for sid, r in self.results.items() if r.rationalizable]


def analyze_pool(
    model: ModelSpec, pool: SubjectPool, reveal: bool = True, budget: int | None = None, strict: bool = False
) -> PoolAnalysis:
    """Run one model over every subject.

    Budget failures are kept in ``errors`` unless ``strict`` is set, in which
    case they propagate with the subject id attached.
    """
    out = PoolAnalysis(model)
    for s in pool.subjects:
        try:
            if reveal:
                out.results[s.id] = evaluate(model, s.data, screen=True, budget=budget)
            else:
                out.results[s.id] = RevealedResult(is_rationalizable(model, s.data, budget))
        except BudgetExceeded as exc:
            if strict:
                raise BudgetExceeded(f"subject {s.id}: {exc}") from exc
            log.warning("subject %s, model %s: %s", s.id, model.name, exc)
            out.errors[s.id] = str(exc)
    return out


def pass_rate(model: ModelSpec, pool: SubjectPool, budget: int | None = None) -> float:
    """Share of subjects the model rationalizes."""
    analysis = analyze_pool(model, pool, reveal=False, budget=budget, strict=True)
    return len(analysis.passing) / len(analysis.results)


def psi(model: ModelSpec, real: SubjectPool, random: SubjectPool, budget: int | None = None) -> float:
    """Pass rate on real subjects minus pass rate on random ones."""
    if real.menus != random.menus:
        raise MenuMismatch("real and random pools must share the menu collection")
    if model.variant == "nc" and model.k == 1:
        return 0.0
    return pass_rate(model, real, budget) - pass_rate(model, random, budget)


def avg_density(model: ModelSpec, pool: SubjectPool, budget: int | None = None) -> float:
    """Mean revealed-relation density over the subjects the model rationalizes."""
    analysis = analyze_pool(model, pool, reveal=True, budget=budget, strict=True)
    passing = analysis.passing
    if not passing:
        raise NoPassingSubjects(f"no subject passes {model.name}")
    return float(np.mean([core.density(analysis.results[sid].revealed, pool.n) for sid in passing]))


def indicator_distributions(pool: SubjectPool) -> dict[str, list[int]]:
    """Histograms over 0..n of the three welfare indicators."""
    n = pool.n
    hists = {key: [0] * (n + 1) for key in ("distinct_chosen", "warp_involved", "warp_directly_involved")}
    for s in pool.subjects:
        hists["distinct_chosen"][core.distinct_chosen(s.data)] += 1
        hists["warp_involved"][len(core.warp_involved(s.data))] += 1
        hists["warp_directly_involved"][len(core.warp_directly_involved(s.data))] += 1
    return hists


# ---------------------------------------------------------------------------
# reports


@dataclass
class ModelReport:
    pass_rate: float
    random_pass_rate: float
    random_pass_rate_sigma: float
    psi: float
    avg_density: float | None
    avg_comparisons: float | None
    density_histogram: list[int]
    n_pass: int
    n_subjects: int
    errors: dict[str, str] = field(default_factory=dict)


@dataclass
class ReportBundle:
    models: dict[str, ModelReport]
    indicators: dict[str, list[int]]
    provenance: dict[str, Any]


def build_report(
    real: SubjectPool,
    random: SubjectPool,
    models: Sequence[ModelSpec] = REPORT_MODELS,
    seed: int | None = None,
    budget: int | None = None,
) -> ReportBundle:
    if real.menus != random.menus:
        raise MenuMismatch("real and random pools must share the menu collection")
    n = real.n
    pairs = comb(n, 2)
    out: dict[str, ModelReport] = {}
    for model in models:
        log.info("analysing %s", model.name)
        ra = analyze_pool(model, real, reveal=True, budget=budget)
        rr = analyze_pool(model, random, reveal=False, budget=budget)
        real_rate = len(ra.passing) / max(len(ra.results), 1)
        rand_rate = len(rr.passing) / max(len(rr.results), 1)
        counts = [len({frozenset(p) for p in ra.results[sid].revealed.pairs}) for sid in ra.passing]
        hist = [0] * (pairs + 1)
        for c in counts:
            hist[c] += 1
        dens = float(np.mean(counts)) / pairs if counts else None
        out[model.name] = ModelReport(
            pass_rate=real_rate,
            random_pass_rate=rand_rate,
            random_pass_rate_sigma=sqrt(rand_rate * (1 - rand_rate) / max(len(rr.results), 1)),
            psi=0.0 if (model.variant == "nc" and model.k == 1) else real_rate - rand_rate,
            avg_density=dens,
            avg_comparisons=float(np.mean(counts)) if counts else None,
            density_histogram=hist,
            n_pass=len(ra.passing),
            n_subjects=len(ra.results),
            errors={**{f"real:{k}": v for k, v in ra.errors.items()}, **{f"random:{k}": v for k, v in rr.errors.items()}},
        )
    provenance = {
        "seed": seed,
        "models": [m.name for m in models],
        "dataset_digest": real.digest(),
        "random_digest": random.digest(),
        "n_subjects": len(real),
        "n_random": len(random),
        "n_alternatives": n,
        "n_menus": len(real.menus),
        "max_comparisons": pairs,
    }
    return ReportBundle(out, indicator_distributions(real), provenance)


def _round(value: Any) -> Any:
    if isinstance(value, float):
        return round(value, 4)
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round(v) for v in value]
    return value


def report_to_json(bundle: ReportBundle) -> str:
    doc = {
        "schema": REPORT_SCHEMA,
        "provenance": bundle.provenance,
        "indicators": bundle.indicators,
        "models": {name: vars(r) for name, r in bundle.models.items()},
    }
    return json.dumps(_round(doc), sort_keys=True, indent=2) + "\n"


def report_to_csv(bundle: ReportBundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "metric", "value"])
    for name in sorted(bundle.models):
        r = bundle.models[name]
        for metric in ("pass_rate", "random_pass_rate", "random_pass_rate_sigma", "psi", "avg_density", "avg_comparisons"):
            value = getattr(r, metric)
            w.writerow([name, metric, "" if value is None else f"{value:.4f}"])
        w.writerow([name, "n_pass", r.n_pass])
        w.writerow([name, "n_subjects", r.n_subjects])
        w.writerow([name, "errors", len(r.errors)])
        for c, count in enumerate(r.density_histogram):
            if count:
                w.writerow([name, f"density_hist_{c}", count])
    for key in sorted(bundle.indicators):
        for k, count in enumerate(bundle.indicators[key]):
            w.writerow(["pool", f"{key}_{k}", count])
    return buf.getvalue()


def write_report(bundle: ReportBundle, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    if fmt == "json":
        text = report_to_json(bundle)
    elif fmt == "csv":
        text = report_to_csv(bundle)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.write_text(text)


def replicate(
    pool: SubjectPool,
    n_random: int = 1000,
    seed: int = 0,
    models: Sequence[ModelSpec] = REPORT_MODELS,
    budget: int | None = None,
) -> ReportBundle:
    """The whole pipeline: random benchmark pool, per-model metrics, indicators."""
    random = simulate_random_subjects(pool.menus, n_random, seed, pool.universe)
    return build_report(pool, random, models, seed, budget)
