"""Clonal-selection classifier with immunological memory cells.

Candidate solutions ("antibodies") are weight vectors plus a firing
threshold, scored by how many training samples they classify correctly.
Evolution combines hypermutation (small perturbations) and receptor
editing (weight swaps) over elite pools, with annealed acceptance and
periodic diversity reseeding. Converged elites are crowded into clusters
whose central antibodies become per-category memory cells used for
recognition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NormalizationError, StateError


@dataclass(eq=False)
class Antibody:
    weights: np.ndarray
    threshold: float
    cached_affinity: int | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.threshold):
            raise ConfigError("antibody weights and threshold must be finite")


@dataclass(eq=False)
class TrainingSet:
    samples: np.ndarray   # (tr_num, k)
    targets: np.ndarray   # (tr_num,) of 0/1

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ConfigError("training set needs at least one sample")
        if self.targets.shape != (self.samples.shape[0],):
            raise DimensionError("targets must align with samples")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("training samples must be finite")
        if not np.all((self.targets == 0) | (self.targets == 1)):
            raise ConfigError("targets must be 0 or 1")

    @property
    def tr_num(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class CsaimConfig:
    """Knobs of the clonal-selection run.

    ``pool_size``/``elite_count`` size the population, ``clone_factor``
    scales per-pool clone counts, ``mutation_constant`` steers the
    hypermutation-vs-receptor-editing split, ``anneal_alpha`` the
    acceptance temperature, and ``replace_beta``/``replace_period`` the
    periodic reseeding of the worst pools. ``firing_margin`` is the
    distance from threshold at which an antibody fires.
    """

    pool_size: int = 50
    elite_count: int = 10
    clone_factor: float = 20.0
    mutation_constant: float = 1.0
    anneal_alpha: float = 5.0
    replace_beta: float = 0.2
    replace_period: int = 5
    max_generations: int = 200
    firing_margin: float = 0.1
    step_w: float = 0.2
    step_theta: float = 0.2
    n_subregions: int = 1
    invert_clone_allocation: bool = False

    def __post_init__(self):
        if not 1 <= self.elite_count <= self.pool_size:
            raise ConfigError("need 1 <= elite_count <= pool_size")
        if self.clone_factor < 1:
            raise ConfigError("clone_factor must be >= 1")
        if self.mutation_constant <= 0:
            raise ConfigError("mutation_constant must be > 0")
        if not 0 < self.replace_beta < 1:
            raise ConfigError("replace_beta must be in (0, 1)")
        if self.replace_period < 1:
            raise ConfigError("replace_period must be >= 1")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if self.step_w <= 0 or self.step_theta <= 0:
            raise ConfigError("mutation step bounds must be > 0")
        if self.n_subregions < 1:
            raise ConfigError("n_subregions must be >= 1")

    def subregion_labels(self, dim: int) -> np.ndarray:
        """Annotation only: weight indices partitioned into contiguous
        sub-regions. Affinity always sums over every index."""
        return np.minimum(np.arange(dim) * self.n_subregions // max(dim, 1),
                          self.n_subregions - 1)


@dataclass(eq=False)
class MemoryCell:
    center: Antibody
    category: int
    crowd_size: int

    def __post_init__(self):
        if self.crowd_size < 1:
            raise ConfigError("crowd_size must be >= 1")


@dataclass(frozen=True)
class MemoryConfig:
    initial_categories: int = 1
    response_threshold_mode: str = "abs_sum"
    crowd_radius_scale: float = 0.5
    max_retry: int = 3

    def __post_init__(self):
        if self.initial_categories < 1:
            raise ConfigError("initial_categories must be >= 1")
        if self.response_threshold_mode != "abs_sum":
            raise ConfigError(
                f"unknown response_threshold_mode {self.response_threshold_mode!r}")
        if self.crowd_radius_scale <= 0:
            raise ConfigError("crowd_radius_scale must be > 0")
        if self.max_retry < 0:
            raise ConfigError("max_retry must be >= 0")


def _round_half_up(x: float) -> int:
    # round-half-away-from-zero for non-negative x
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# affinity and mutation operators

def affinity(ab: Antibody, data: TrainingSet, firing_margin: float) -> int:
    """Number of samples classified correctly: the antibody fires when its
    weighted sum is at least ``firing_margin`` away from the threshold, and
    a sample counts when firing matches its 0/1 target."""
    if ab.weights.shape[0] != data.dim:
        raise DimensionError(
            f"antibody dim {ab.weights.shape[0]} != sample dim {data.dim}")
    fired = np.abs(data.samples @ ab.weights - ab.threshold) >= firing_margin
    return int(np.sum(fired.astype(np.int64) == data.targets))


def hypermutate(ab: Antibody, cfg: CsaimConfig, rng: np.random.Generator) -> Antibody:
    """Perturb one uniformly chosen weight by U(-step_w, step_w) and the
    threshold by U(-1, step_theta)."""
    weights = ab.weights.copy()
    i = int(rng.integers(weights.shape[0]))
    weights[i] += rng.uniform(-cfg.step_w, cfg.step_w)
    theta = ab.threshold + rng.uniform(-1.0, cfg.step_theta)
    return Antibody(weights=weights, threshold=theta)


def receptor_edit(ab: Antibody, rng: np.random.Generator) -> Antibody:
    """Swap two distinct weight positions; threshold and the weight
    multiset are preserved."""
    k = ab.weights.shape[0]
    if k < 2:
        raise DimensionError("receptor editing needs at least 2 weights")
    i, j = sorted(int(v) for v in rng.choice(k, size=2, replace=False))
    weights = ab.weights.copy()
    weights[i], weights[j] = weights[j], weights[i]
    return Antibody(weights=weights, threshold=ab.threshold)


def clone_counts(n: int, q: float) -> list[int]:
    """Clones per elite pool i=1..n: round((n-i)/n * q), half away from
    zero. Non-increasing; the last pool always gets 0."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    if q < 1:
        raise ConfigError("q must be >= 1")
    return [_round_half_up((n - i) / n * q) for i in range(1, n + 1)]


def mutation_rates(d: float, a: float) -> tuple[float, float]:
    """(P_hm, P_re) = (a/D, (D-a)/D), inversely proportional to the parent
    affinity D. D <= 0 or D < a clamps to pure hypermutation."""
    if d <= 0:
        return 1.0, 0.0
    p_hm = min(1.0, a / d)
    return p_hm, 1.0 - p_hm


# ---------------------------------------------------------------------------
# RECSA evolution loop

def _random_antibody(dim: int, rng: np.random.Generator) -> Antibody:
    return Antibody(weights=rng.uniform(-1.0, 1.0, dim),
                    threshold=float(rng.uniform(0.0, 1.0)))


def _sorted_ascending(pools: list[Antibody]) -> list[Antibody]:
    return sorted(pools, key=lambda ab: ab.cached_affinity)


def recsa_generation(pools: list[Antibody], data: TrainingSet, cfg: CsaimConfig,
                     gen: int, rng: np.random.Generator) -> list[Antibody]:
    """One generation over elite pools sorted ascending by affinity.

    Each pool clones, mutates (hypermutation or receptor editing per the
    parent's rates), and keeps the best clone. A strictly better clone
    always replaces its parent; the first (lowest) pool otherwise never
    accepts, and the remaining pools accept an equal-or-worse clone with
    annealed probability exp((D_best - D_parent) / anneal_alpha). Every
    ``replace_period`` generations the worst pools are reseeded randomly,
    keeping at least the single best pool intact.
    """
    if not pools:
        raise StateError("elite pools are empty")
    n = len(pools)
    counts = clone_counts(n, cfg.clone_factor)
    if cfg.invert_clone_allocation:
        counts = counts[::-1]
    streams = rng.spawn(n + 1)

    updated: list[Antibody] = []
    for idx, (parent, stream, n_clones) in enumerate(zip(pools, streams, counts)):
        if n_clones == 0:
            updated.append(parent)
            continue
        p_hm, _ = mutation_rates(parent.cached_affinity, cfg.mutation_constant)
        best_clone = None
        for _ in range(n_clones):
            if stream.uniform() < p_hm:
                clone = hypermutate(parent, cfg, stream)
            else:
                clone = receptor_edit(parent, stream)
            clone.cached_affinity = affinity(clone, data, cfg.firing_margin)
            if best_clone is None or clone.cached_affinity > best_clone.cached_affinity:
                best_clone = clone
        if best_clone.cached_affinity > parent.cached_affinity:
            accept = True
        elif idx == 0:
            accept = False
        else:
            gap = best_clone.cached_affinity - parent.cached_affinity
            accept = stream.uniform() < math.exp(gap / cfg.anneal_alpha)
        updated.append(best_clone if accept else parent)

    if gen >= 1 and gen % cfg.replace_period == 0:
        # keep at least the best pool so the population maximum never drops
        n_replace = min(_round_half_up(cfg.replace_beta * n), n - 1)
        if n_replace > 0:
            reseed = streams[n]
            updated = _sorted_ascending(updated)
            for i in range(n_replace):
                fresh = _random_antibody(data.dim, reseed)
                fresh.cached_affinity = affinity(fresh, data, cfg.firing_margin)
                updated[i] = fresh
    return _sorted_ascending(updated)


def run_recsa(data: TrainingSet, cfg: CsaimConfig,
              rng: np.random.Generator) -> tuple[Antibody, list[Antibody]]:
    """Full evolution: random initial pool, elite selection, then
    ``max_generations`` rounds. Returns the highest-affinity antibody ever
    observed and the final elite pools (ascending)."""
    streams = rng.spawn(cfg.max_generations + 1)
    init = streams[0]
    population = [_random_antibody(data.dim, init) for _ in range(cfg.pool_size)]
    for ab in population:
        ab.cached_affinity = affinity(ab, data, cfg.firing_margin)
    pools = _sorted_ascending(population)[-cfg.elite_count:]

    best = pools[-1]
    for gen in range(1, cfg.max_generations + 1):
        pools = recsa_generation(pools, data, cfg, gen, streams[gen])
        if pools[-1].cached_affinity > best.cached_affinity:
            best = pools[-1]
    return best, pools


# ---------------------------------------------------------------------------
# memory cells

def normalize_to_antibody(d: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Rescale sample ``d`` onto the antibody's range: every component with
    d_i != 0 and h_i != 0 is multiplied by h_j/d_j, where j indexes the
    smallest such sample component; other components pass through."""
    d = np.asarray(d, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if d.shape != h.shape:
        raise DimensionError(f"sample dim {d.shape} != antibody dim {h.shape}")
    valid = (d != 0.0) & (h != 0.0)
    if not valid.any():
        raise NormalizationError("no component with both sample and antibody nonzero")
    candidates = np.flatnonzero(valid)
    j = candidates[np.argmin(d[candidates])]
    return np.where(valid, d * (h[j] / d[j]), d)


def response_threshold(d_prime: np.ndarray, mcfg: MemoryConfig) -> float:
    # "abs_sum" is the only mode: sum of the normalized sample's magnitudes
    return float(np.sum(np.abs(d_prime)))


def responds(cell: MemoryCell, d: np.ndarray, mcfg: MemoryConfig) -> bool:
    d_prime = normalize_to_antibody(d, cell.center.weights)
    dist = float(np.linalg.norm(d_prime - cell.center.weights))
    return dist < response_threshold(d_prime, mcfg)


def classify(cells: list[MemoryCell], d: np.ndarray,
             mcfg: MemoryConfig | None = None) -> int | None:
    """Category of the responding cell with the smallest normalized
    distance (ties to the smallest category label), or None when no cell
    responds. Cells the sample cannot be normalized against are treated
    as non-responding."""
    mcfg = mcfg or MemoryConfig()
    best: tuple[float, int] | None = None
    for cell in cells:
        try:
            d_prime = normalize_to_antibody(d, cell.center.weights)
        except NormalizationError:
            continue
        dist = float(np.linalg.norm(d_prime - cell.center.weights))
        if dist >= response_threshold(d_prime, mcfg):
            continue
        key = (dist, cell.category)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def _crowd_components(antibodies: list[Antibody], radius_scale: float) -> list[list[int]]:
    """Single-linkage crowds: two antibodies share a crowd iff their weight
    distance is below radius_scale x mean pairwise distance."""
    n = len(antibodies)
    if n == 1:
        return [[0]]
    weights = np.stack([ab.weights for ab in antibodies])
    diff = weights[:, None, :] - weights[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    radius = radius_scale * float(dist[np.triu_indices(n, k=1)].mean())
    adjacent = dist < radius
    seen = [False] * n
    components = []
    for start in range(n):
        if seen[start]:
            continue
        queue, comp = [start], []
        seen[start] = True
        while queue:
            u = queue.pop()
            comp.append(u)
            for v in range(n):
                if not seen[v] and adjacent[u, v]:
                    seen[v] = True
                    queue.append(v)
        components.append(sorted(comp))
    return components


def _cells_from_pools(pools: list[Antibody], category: int,
                      mcfg: MemoryConfig) -> list[MemoryCell]:
    cells = []
    for comp in _crowd_components(pools, mcfg.crowd_radius_scale):
        weights = np.stack([pools[i].weights for i in comp])
        centroid = weights.mean(axis=0)
        dists = np.linalg.norm(weights - centroid, axis=1)
        center = pools[comp[int(np.argmin(dists))]]
        cells.append(MemoryCell(center=center, category=category, crowd_size=len(comp)))
    return cells


def build_memory_cells(samples: np.ndarray, labels: np.ndarray, cfg: CsaimConfig,
                       mcfg: MemoryConfig, rng: np.random.Generator) -> list[MemoryCell]:
    """Train one-vs-rest RECSA per category and crowd the elites into
    memory cells. Samples the resulting cells misrecognize trigger up to
    ``max_retry`` additional RECSA rounds on the misclassified subsets.
    Categories that never converge simply contribute fewer cells."""
    samples = np.asarray(samples, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if samples.ndim != 2 or labels.shape != (samples.shape[0],):
        raise DimensionError("labels must align with samples")
    categories = sorted(int(c) for c in np.unique(labels))

    cells: list[MemoryCell] = []
    round_streams = rng.spawn(mcfg.max_retry + 1)
    for round_no in range(mcfg.max_retry + 1):
        if round_no == 0:
            focus = np.ones(samples.shape[0], dtype=bool)
        else:
            # retries target samples no cell responds to at all
            focus = np.array([classify(cells, x, mcfg) is None for x in samples])
            if not focus.any():
                break
        cat_streams = round_streams[round_no].spawn(len(categories))
        for category, stream in zip(categories, cat_streams):
            target_mask = focus & (labels == category)
            rest_mask = labels != category
            if not target_mask.any():
                continue
            keep = target_mask | rest_mask
            ts = TrainingSet(samples=samples[keep],
                             targets=target_mask[keep].astype(np.int64))
            _, pools = run_recsa(ts, cfg, stream)
            cells.extend(_cells_from_pools(pools, category, mcfg))
    return cells


# ---------------------------------------------------------------------------
# memory-cell store

CELL_STORE_FORMAT = "memory-cells/1"


def dump_cells(cells: list[MemoryCell]) -> str:
    doc = {
        "format": CELL_STORE_FORMAT,
        "cells": [
            {
                "category": cell.category,
                "weights": [float(w) for w in cell.center.weights],
                "threshold": float(cell.center.threshold),
                "crowd_size": cell.crowd_size,
            }
            for cell in cells
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_cells(text: str) -> list[MemoryCell]:
    doc = json.loads(text)
    if doc.get("format") != CELL_STORE_FORMAT:
        raise ConfigError(f"unexpected cell store format {doc.get('format')!r}")
    return [
        MemoryCell(
            center=Antibody(weights=np.asarray(raw["weights"], dtype=np.float64),
                            threshold=float(raw["threshold"])),
            category=int(raw["category"]),
            crowd_size=int(raw["crowd_size"]),
        )
        for raw in doc["cells"]
    ]
