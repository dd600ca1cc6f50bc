"""Reference optimizers the learned policies are compared against.

All baselines work on static portfolios (price multipliers as generated, no
drift) and share a single evaluation path: :func:`portfolio_objectives` for
quality and the full constraint check for feasibility.  Every baseline keeps
an archive of *all* feasible portfolios it evaluated and reports that
archive's non-dominated subset, so results are comparable to the learned
archive on equal terms.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .constraints import ConstraintRegistry, check, penalty
from .domain import (
    CityInstance,
    InvalidArgumentError,
    ObjectiveVector,
    PortfolioState,
    normalize,
)
from .metrics import hypervolume_exact, nondominated_mask
from .rewards import DEFAULT_PARAMS, RewardParams, portfolio_objectives


@dataclass(frozen=True)
class BaselineResult:
    method: str
    portfolios: tuple[tuple[int, ...], ...]   # non-dominated archive
    objectives: tuple[ObjectiveVector, ...]
    evaluations: int
    seconds: float

    def hypervolume(self, city: CityInstance) -> float:
        return hypervolume_exact(
            [normalize(o, city.objective_bounds) for o in self.objectives])

    def to_text(self, city: CityInstance) -> str:
        header = {"schema_version": 1, "kind": "front", "method": self.method,
                  "city": city.name, "evaluations": self.evaluations,
                  "seconds": round(self.seconds, 3)}
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        for ids, obj in zip(self.portfolios, self.objectives):
            lines.append(json.dumps({
                "portfolio": list(ids),
                "objectives": list(obj),
                "normalized": list(normalize(obj, city.objective_bounds)),
            }, sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def save(self, city: CityInstance, path: str | Path) -> None:
        Path(path).write_text(self.to_text(city), encoding="utf-8")


class _Evaluator:
    """Cached feasibility + objective evaluation over frozen dynamics."""

    def __init__(self, city: CityInstance, registry: ConstraintRegistry,
                 params: RewardParams):
        self.city = city
        self.registry = registry
        self.params = params
        self.empty = PortfolioState(selected=(), effective_costs=(), step_index=0,
                                    dyn_snapshot=city.arrays().dyn.copy(),
                                    capacity=city.portfolio_capacity)
        self._cache: dict[tuple[int, ...], tuple[bool, ObjectiveVector, float]] = {}
        self.evaluations = 0
        self.feasible_archive: list[tuple[tuple[int, ...], ObjectiveVector]] = []

    def __call__(self, ids: Sequence[int]) -> tuple[bool, ObjectiveVector, float]:
        key = tuple(sorted(ids))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.evaluations += 1
        feasible = check(self.empty, list(key), self.registry, mode="full").feasible
        obj = portfolio_objectives(self.city, key, params=self.params)
        pen = 0.0 if feasible else penalty(self.empty, list(key), self.registry)
        result = (feasible, obj, pen)
        self._cache[key] = result
        if feasible:
            self.feasible_archive.append((key, obj))
        return result

    def result(self, method: str, seconds: float) -> BaselineResult:
        pts = (np.array([tuple(o) for _, o in self.feasible_archive])
               if self.feasible_archive else np.zeros((0, 4)))
        keep = nondominated_mask(pts)
        kept = [p for p, k in zip(self.feasible_archive, keep) if k]
        return BaselineResult(
            method=method,
            portfolios=tuple(ids for ids, _ in kept),
            objectives=tuple(o for _, o in kept),
            evaluations=self.evaluations,
            seconds=seconds)


def enumerate_true_front(city: CityInstance, registry: ConstraintRegistry,
                         params: RewardParams = DEFAULT_PARAMS) -> BaselineResult:
    """Exhaustive enumeration of every feasible portfolio; exact Pareto front.

    Only tractable on toy instances (C(n, k) small); used as an oracle.
    """
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    for combo in itertools.combinations(range(city.n), city.portfolio_capacity):
        ev(combo)
    return ev.result("exhaustive", time.perf_counter() - tic)


def random_feasible(city: CityInstance, registry: ConstraintRegistry, samples: int,
                    seed: int, params: RewardParams = DEFAULT_PARAMS,
                    max_tries: int | None = None) -> BaselineResult:
    """Rejection sampling of uniform-random portfolios until ``samples``
    feasible ones are found (or the try budget runs out)."""
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    rng = np.random.default_rng(np.random.PCG64(seed))
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    tries = max_tries if max_tries is not None else samples * 1000
    found = 0
    for _ in range(tries):
        ids = _random_portfolio(rng, city.n, city.portfolio_capacity)
        feasible, _, _ = ev(ids)
        if feasible:
            found += 1
            if found >= samples:
                break
    return ev.result("random-feasible", time.perf_counter() - tic)


def greedy_cost_beam(city: CityInstance, registry: ConstraintRegistry,
                     width: int = 50,
                     params: RewardParams = DEFAULT_PARAMS) -> BaselineResult:
    """Cost-greedy beam search: grow portfolios one parcel at a time, keeping
    the ``width`` cheapest feasible-so-far prefixes."""
    if width < 1:
        raise InvalidArgumentError("width must be >= 1")
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    arr = city.arrays()
    ok = registry.per_parcel_ok
    order = np.argsort(arr.base_cost, kind="stable")
    beam: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    for _ in range(city.portfolio_capacity):
        grown: list[tuple[float, tuple[int, ...]]] = []
        seen: set[tuple[int, ...]] = set()
        for cost, prefix in beam:
            taken = set(prefix)
            added = 0
            for pid in order:
                pid = int(pid)
                if pid in taken or not ok[pid]:
                    continue
                new_cost = cost + float(arr.base_cost[pid])
                if new_cost > city.budget_total:
                    break
                key = tuple(sorted(prefix + (pid,)))
                if key in seen:
                    continue
                seen.add(key)
                grown.append((new_cost, prefix + (pid,)))
                added += 1
                if added >= width:
                    break
        grown.sort(key=lambda item: (item[0], item[1]))
        beam = grown[:width]
        if not beam:
            break
    for _, ids in beam:
        ev(ids)
    return ev.result("greedy-cost", time.perf_counter() - tic)


def _random_portfolio(rng: np.random.Generator, n: int, k: int) -> tuple[int, ...]:
    return tuple(int(v) for v in rng.choice(n, size=k, replace=False))


def _crossover(rng: np.random.Generator, a: tuple[int, ...], b: tuple[int, ...],
               n: int) -> tuple[int, ...]:
    """Uniform swap: each slot takes a gene from either parent; duplicate
    genes are re-drawn uniformly."""
    k = len(a)
    child: list[int] = []
    used: set[int] = set()
    for ga, gb in zip(a, b):
        gene = ga if rng.random() < 0.5 else gb
        if gene in used:
            continue
        used.add(gene)
        child.append(gene)
    while len(child) < k:
        gene = int(rng.integers(n))
        if gene not in used:
            used.add(gene)
            child.append(gene)
    return tuple(child)


def _mutate(rng: np.random.Generator, ids: tuple[int, ...], n: int,
            rate: float = 0.2) -> tuple[int, ...]:
    """Replace one parcel with a uniform random outsider, with probability
    ``rate`` per offspring."""
    if rng.random() >= rate:
        return ids
    out = list(ids)
    slot = int(rng.integers(len(out)))
    used = set(out)
    for _ in range(16):
        gene = int(rng.integers(n))
        if gene not in used:
            out[slot] = gene
            break
    return tuple(out)


def _crowding_distance(points: np.ndarray) -> np.ndarray:
    m = points.shape[0]
    dist = np.zeros(m)
    if m <= 2:
        dist[:] = np.inf
        return dist
    for j in range(points.shape[1]):
        order = np.argsort(points[:, j], kind="stable")
        span = points[order[-1], j] - points[order[0], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span <= 0:
            continue
        dist[order[1:-1]] += (points[order[2:], j] - points[order[:-2], j]) / span
    return dist


def _fast_nondominated_sort(points: np.ndarray) -> list[np.ndarray]:
    m = points.shape[0]
    remaining = np.arange(m)
    fronts: list[np.ndarray] = []
    while remaining.size:
        sub = points[remaining]
        keep = nondominated_mask(sub)
        fronts.append(remaining[keep])
        remaining = remaining[~keep]
    return fronts


def nsga2(city: CityInstance, registry: ConstraintRegistry, pop_size: int,
          generations: int, seed: int, params: RewardParams = DEFAULT_PARAMS,
          death_penalty: bool = False) -> BaselineResult:
    """Elitist non-dominated sorting GA with crowding-distance truncation.

    With ``death_penalty`` off (the default), infeasible individuals survive
    selection but rank behind every feasible one, ordered by constraint
    penalty; with it on they are discarded outright.
    """
    if pop_size < 4 or generations < 1:
        raise InvalidArgumentError("need pop_size >= 4 and generations >= 1")
    rng = np.random.default_rng(np.random.PCG64(seed))
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    pop = [_random_portfolio(rng, city.n, city.portfolio_capacity)
           for _ in range(pop_size)]
    for _ in range(generations):
        children = []
        for _ in range(pop_size):
            a, b = (pop[int(rng.integers(len(pop)))] for _ in range(2))
            children.append(_mutate(rng, _crossover(rng, a, b, city.n), city.n))
        merged = pop + children
        evals = [ev(ids) for ids in merged]
        feas_idx = [i for i, (f, _, _) in enumerate(evals) if f]
        infeas = [(i, evals[i][2]) for i in range(len(merged)) if i not in set(feas_idx)]
        survivors: list[int] = []
        if feas_idx:
            pts = np.array([tuple(evals[i][1]) for i in feas_idx])
            for front in _fast_nondominated_sort(pts):
                ids_front = [feas_idx[i] for i in front]
                if len(survivors) + len(ids_front) <= pop_size:
                    survivors.extend(ids_front)
                else:
                    crowd = _crowding_distance(pts[front])
                    order = np.argsort(-crowd, kind="stable")
                    need = pop_size - len(survivors)
                    survivors.extend(ids_front[i] for i in order[:need])
                if len(survivors) >= pop_size:
                    break
        if not death_penalty and len(survivors) < pop_size:
            infeas.sort(key=lambda item: item[1])
            survivors.extend(i for i, _ in infeas[:pop_size - len(survivors)])
        while len(survivors) < pop_size:
            pop_extra = _random_portfolio(rng, city.n, city.portfolio_capacity)
            ev(pop_extra)
            merged.append(pop_extra)
            survivors.append(len(merged) - 1)
        pop = [merged[i] for i in survivors]
    return ev.result("nsga2", time.perf_counter() - tic)


def _simplex_lattice(divisions: int) -> np.ndarray:
    """All 4-part compositions of ``divisions``, scaled to the simplex."""
    rows = []
    for a in range(divisions + 1):
        for b in range(divisions + 1 - a):
            for c in range(divisions + 1 - a - b):
                rows.append((a, b, c, divisions - a - b - c))
    return np.array(rows, dtype=np.float64) / divisions


def moead(city: CityInstance, registry: ConstraintRegistry, divisions: int,
          generations: int, seed: int, params: RewardParams = DEFAULT_PARAMS,
          neighborhood: int = 10) -> BaselineResult:
    """Decomposition with Tchebycheff scalarization over a simplex-lattice
    weight set; each subproblem mates within its weight neighborhood."""
    if divisions < 1 or generations < 1:
        raise InvalidArgumentError("need divisions >= 1 and generations >= 1")
    rng = np.random.default_rng(np.random.PCG64(seed))
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    weights = _simplex_lattice(divisions)
    m = weights.shape[0]
    t = min(neighborhood, m)
    dists = np.linalg.norm(weights[:, None, :] - weights[None, :, :], axis=-1)
    neighbors = np.argsort(dists, axis=1, kind="stable")[:, :t]
    bounds = city.objective_bounds

    def fitness(ids: tuple[int, ...], w: np.ndarray) -> float:
        feasible, obj, pen = ev(ids)
        norm = np.array(tuple(normalize(obj, bounds)))
        # Tchebycheff distance to the ideal point (1,...,1); smaller is better
        score = float(np.max(np.maximum(w, 1e-6) * (1.0 - norm)))
        return score + (10.0 + pen if not feasible else 0.0)

    pop = [_random_portfolio(rng, city.n, city.portfolio_capacity)
           for _ in range(m)]
    fit = [fitness(pop[i], weights[i]) for i in range(m)]
    for _ in range(generations):
        for i in range(m):
            j, k = neighbors[i][rng.integers(t)], neighbors[i][rng.integers(t)]
            child = _mutate(rng, _crossover(rng, pop[j], pop[k], city.n), city.n)
            for idx in neighbors[i]:
                f = fitness(child, weights[idx])
                if f < fit[idx]:
                    pop[idx] = child
                    fit[idx] = f
    return ev.result("moead", time.perf_counter() - tic)


def single_policy_morl(city: CityInstance, registry: ConstraintRegistry,
                       cfg, seed: int,
                       params: RewardParams = DEFAULT_PARAMS) -> BaselineResult:
    """Single-policy ablation: one network trained on the uniform preference;
    its evaluated feasible portfolios form the archive."""
    from dataclasses import replace as _replace

    from .domain import PreferenceVector
    from .ppo import train_population

    single = _replace(cfg, population=1)
    uniform = PreferenceVector((0.25, 0.25, 0.25, 0.25))
    result = train_population(city, registry, single, seed, params=params,
                              preferences=[uniform])
    ev = _Evaluator(city, registry, params)
    tic = time.perf_counter()
    for rec in result.archive.records:
        ev(rec.portfolio)
    return ev.result("single-policy", time.perf_counter() - tic)
