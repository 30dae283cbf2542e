"""
MP-Viz NSGA-II

Elitist multi-objective GA over the surrogate: binary tournament on
(rank, crowding), simulated binary crossover, polynomial mutation and
(mu + lambda) survival. Every evaluated design is archived; the archive is the
candidate set handed to the embedding tools.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .dataset import CandidateSet
from .errors import ConfigError
from .surrogate import PARAM_NAMES, POINT_OBJECTIVES, ConstraintThresholds, SurrogateProblem

logger = logging.getLogger(__name__)

SBX_ETA = 15.0
SBX_PROB = 0.9
SBX_VAR_PROB = 0.5
MUTATION_ETA = 20.0
MUTATION_PROB = 1.0 / 7.0


@dataclass(frozen=True)
class Batch:
    ids: Tuple[str, ...]
    params: np.ndarray
    objectives: np.ndarray


@dataclass(frozen=True)
class Population:
    """Survivors of one generation plus the designs evaluated in it."""

    generation: int
    members: Batch
    ranks: np.ndarray
    crowding: np.ndarray
    offspring: Batch

    def __len__(self) -> int:
        return len(self.members.ids)

    def rows(self) -> Iterator[Tuple[np.ndarray, np.ndarray, int, float]]:
        for i in range(len(self)):
            yield (
                self.members.params[i],
                self.members.objectives[i],
                int(self.ranks[i]),
                float(self.crowding[i]),
            )


# -- Pareto machinery ----------------------------------------------------------


def _as_minimization(objs: np.ndarray, senses: Sequence[str]) -> np.ndarray:
    F = np.atleast_2d(np.asarray(objs, dtype=np.float64))
    if len(senses) != F.shape[1]:
        raise ConfigError(f"{len(senses)} senses for {F.shape[1]} objectives")
    sign = np.array([-1.0 if s == "max" else 1.0 for s in senses])
    return F * sign


def dominates(a: Sequence[float], b: Sequence[float], senses: Sequence[str]) -> bool:
    """a is at least as good as b everywhere and strictly better somewhere."""
    F = _as_minimization(np.vstack([a, b]), senses)
    return bool(np.all(F[0] <= F[1]) and np.any(F[0] < F[1]))


def dominance_matrix(objs: np.ndarray, senses: Sequence[str]) -> np.ndarray:
    """dom[i, j] is True when i dominates j."""
    F = _as_minimization(objs, senses)
    n = F.shape[0]
    no_worse = np.ones((n, n), dtype=bool)
    better = np.zeros((n, n), dtype=bool)
    for m in range(F.shape[1]):
        col = F[:, m]
        no_worse &= col[:, None] <= col[None, :]
        better |= col[:, None] < col[None, :]
    return no_worse & better


def non_dominated_sort(objs: np.ndarray, senses: Sequence[str]) -> List[List[int]]:
    """Fronts of row indices, front 0 first; indices ascending within a front."""
    dom = dominance_matrix(objs, senses)
    n = dom.shape[0]
    if n == 0:
        raise ConfigError("non_dominated_sort needs at least one point")
    counts = dom.sum(axis=0)
    assigned = np.zeros(n, dtype=bool)
    fronts: List[List[int]] = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        assigned[current] = True
        counts = counts - dom[current].sum(axis=0)
        current = np.flatnonzero((counts == 0) & ~assigned)
    return fronts


def crowding_distance(front: np.ndarray) -> np.ndarray:
    """Normalized neighbour-gap sum per point; boundaries get +inf."""
    F = np.atleast_2d(np.asarray(front, dtype=np.float64))
    n = F.shape[0]
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for m in range(F.shape[1]):
        col = F[:, m]
        span = col.max() - col.min()
        if span == 0:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        dist[order[1:-1]] += (col[order[2:]] - col[order[:-2]]) / span
    return dist


def rank_and_crowd(objs: np.ndarray, senses: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    fronts = non_dominated_sort(objs, senses)
    ranks = np.empty(len(objs), dtype=np.int64)
    crowding = np.empty(len(objs))
    for r, front in enumerate(fronts):
        ranks[front] = r
        crowding[front] = crowding_distance(objs[front])
    return ranks, crowding


def pareto_fraction(candidates: CandidateSet) -> float:
    """Share of candidates on the first front under the column senses."""
    if candidates.n == 0:
        return 0.0
    dom = dominance_matrix(candidates.objectives, candidates.senses)
    return float(np.count_nonzero(~dom.any(axis=0))) / candidates.n


# -- variation -----------------------------------------------------------------


def repair_commutation(params: np.ndarray) -> np.ndarray:
    """Swap turn-on/turn-off where needed so that turn_on < turn_off."""
    p = np.array(params, dtype=np.float64, copy=True)
    on, off = p[:, 5].copy(), p[:, 6].copy()
    p[:, 5], p[:, 6] = np.minimum(on, off), np.maximum(on, off)
    tied = p[:, 5] == p[:, 6]
    for i in np.flatnonzero(tied):
        if p[i, 6] < 1.0:
            p[i, 6] = np.nextafter(p[i, 6], 1.0)
        else:
            p[i, 5] = np.nextafter(p[i, 5], 0.0)
    return p


def _tournament(rng: np.random.Generator, ranks: np.ndarray, crowding: np.ndarray, count: int) -> np.ndarray:
    n = ranks.size
    picks = rng.integers(n, size=(count, 2))
    a, b = picks[:, 0], picks[:, 1]
    prefer_b = (ranks[b] < ranks[a]) | ((ranks[b] == ranks[a]) & (crowding[b] > crowding[a]))
    return np.where(prefer_b, b, a)


def sbx_crossover(
    rng: np.random.Generator, p1: np.ndarray, p2: np.ndarray, eta: float = SBX_ETA
) -> Tuple[np.ndarray, np.ndarray]:
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() >= SBX_PROB:
        return c1, c2
    u = rng.random(p1.size)
    swap = rng.random(p1.size) < SBX_VAR_PROB
    active = swap & (np.abs(p1 - p2) > 1e-14)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
    )
    child1 = 0.5 * ((1 + beta) * p1 + (1 - beta) * p2)
    child2 = 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)
    c1[active] = child1[active]
    c2[active] = child2[active]
    return np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)


def polynomial_mutation(
    rng: np.random.Generator, x: np.ndarray, eta: float = MUTATION_ETA, prob: float = MUTATION_PROB
) -> np.ndarray:
    u = rng.random(x.size)
    hit = rng.random(x.size) < prob
    delta = np.where(
        u < 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0,
        1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0)),
    )
    return np.clip(np.where(hit, x + delta, x), 0.0, 1.0)


def _ids(generation: int, count: int) -> Tuple[str, ...]:
    return tuple(f"g{generation:03d}-{serial:04d}" for serial in range(count))


def _survivors(objs: np.ndarray, senses: Sequence[str], size: int) -> np.ndarray:
    chosen: List[int] = []
    for front in non_dominated_sort(objs, senses):
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
            continue
        crowd = crowding_distance(objs[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(np.asarray(front)[order[: size - len(chosen)]].tolist())
        break
    return np.array(chosen, dtype=np.intp)


def nsga2_evolve(
    problem: SurrogateProblem, pop_size: int, generations: int, seed: int
) -> Iterator[Population]:
    """Yield the population after each generation; generation 0 is the random start."""
    if pop_size < 4 or pop_size % 2:
        raise ConfigError(f"pop_size must be even and >= 4, got {pop_size}")
    if generations < 0:
        raise ConfigError(f"generations must be >= 0, got {generations}")
    rng = np.random.default_rng(seed)
    senses = problem.senses()

    params = repair_commutation(rng.random((pop_size, problem.n_params)))
    members = Batch(_ids(0, pop_size), params, problem.evaluate(params))
    ranks, crowding = rank_and_crowd(members.objectives, senses)
    yield Population(0, members, ranks, crowding, members)

    for gen in range(1, generations + 1):
        parents = _tournament(rng, ranks, crowding, pop_size)
        children = []
        for a, b in zip(parents[0::2], parents[1::2]):
            c1, c2 = sbx_crossover(rng, members.params[a], members.params[b])
            children.append(polynomial_mutation(rng, c1))
            children.append(polynomial_mutation(rng, c2))
        child_params = repair_commutation(np.vstack(children))
        offspring = Batch(_ids(gen, pop_size), child_params, problem.evaluate(child_params))

        pool_ids = members.ids + offspring.ids
        pool_params = np.vstack([members.params, offspring.params])
        pool_objs = np.vstack([members.objectives, offspring.objectives])
        keep = _survivors(pool_objs, senses, pop_size)
        members = Batch(tuple(pool_ids[i] for i in keep), pool_params[keep], pool_objs[keep])
        ranks, crowding = rank_and_crowd(members.objectives, senses)
        logger.debug("generation %d: %d on front 0", gen, int(np.count_nonzero(ranks == 0)))
        yield Population(gen, members, ranks, crowding, offspring)


def feasibility_mask(candidates: CandidateSet, thresholds: ConstraintThresholds) -> np.ndarray:
    labels = [op.label for op in candidates.operating_points]
    mask = np.ones(candidates.n, dtype=bool)
    checks = (thresholds.efficiency_min, thresholds.ripple_max, thresholds.torque_margin)
    if all(c is None for c in checks):
        return mask
    point = thresholds.resolve_point(labels)
    if thresholds.efficiency_min is not None:
        mask &= candidates.column(f"{point}.efficiency") >= thresholds.efficiency_min
    if thresholds.ripple_max is not None:
        mask &= candidates.column(f"{point}.ripple") <= thresholds.ripple_max
    if thresholds.torque_margin is not None:
        for op in candidates.operating_points:
            mask &= candidates.column(f"{op.label}.torque") >= thresholds.torque_margin * op.torque
    return mask


def constraint_filter(
    candidates: CandidateSet, thresholds: ConstraintThresholds
) -> Tuple[CandidateSet, float]:
    """Candidates meeting every threshold, and the share that survived."""
    mask = feasibility_mask(candidates, thresholds)
    kept = candidates.subset(mask)
    ratio = kept.n / candidates.n if candidates.n else 0.0
    logger.info("constraint filter kept %d of %d (ratio %.3f)", kept.n, candidates.n, ratio)
    return kept, ratio


def nsga2_generate(
    problem: SurrogateProblem, pop_size: int = 20, generations: int = 50, seed: int = 42
) -> CandidateSet:
    """Run NSGA-II and return every evaluated design, de-duplicated by parameter bits."""
    seen = set()
    ids: List[str] = []
    rows: List[np.ndarray] = []
    objs: List[np.ndarray] = []
    evaluated = 0
    for population in nsga2_evolve(problem, pop_size, generations, seed):
        batch = population.offspring
        evaluated += len(batch.ids)
        for cid, p, f in zip(batch.ids, batch.params, batch.objectives):
            key = p.tobytes()
            if key in seen:
                continue
            seen.add(key)
            ids.append(cid)
            rows.append(p)
            objs.append(f)

    candidates = CandidateSet(
        ids=tuple(ids),
        objectives=np.vstack(objs),
        column_names=tuple(problem.column_names()),
        params=np.vstack(rows),
        param_names=PARAM_NAMES,
        senses=tuple(problem.senses()),
        operating_points=problem.operating_points,
        objectives_per_point=len(POINT_OBJECTIVES),
        global_objectives=1,
    )
    candidates = replace(candidates, feasible=feasibility_mask(candidates, problem.thresholds))
    logger.info(
        "NSGA-II: %d evaluated, %d unique, %d feasible", evaluated, candidates.n,
        int(candidates.feasible.sum()),
    )
    return candidates
