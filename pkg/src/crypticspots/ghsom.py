"""Growing hierarchical self-organizing map with interactive re-expansion.

Maps start 2x2 and grow in breadth (row/column insertion next to the
highest-error unit) until their mean quantization error drops below a
fraction of the parent unit's, or a single unit dominates the map's
error. Units that still hold too much error and enough samples stratify
into child maps. Unit addresses use bracket path labels rooted at "[R]".
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyUnitError, PathError, StateError


@dataclass(frozen=True)
class GhsomConfig:
    """Growth thresholds and training schedule.

    ``tau1`` stops breadth growth (map mqe vs parent mqe), ``tau2`` gates
    stratification depth (unit qe vs the layer-0 qe), ``alpha`` is the
    fraction of all inputs below which a unit stops stratifying, ``beta``
    scales the single-unit insertion trigger.
    """

    tau1: float = 0.6
    tau2: float = 0.03
    alpha: float = 0.05
    beta: float = 1.0
    epochs: int = 30
    lr0: float = 0.5
    radius0: float | None = None
    max_depth: int = 5

    def __post_init__(self):
        if not 0 < self.tau1 < 1 or not 0 < self.tau2 < 1:
            raise ConfigError("tau1 and tau2 must be in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")
        if self.beta <= 0:
            raise ConfigError("beta must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be > 0")
        if self.radius0 is not None and self.radius0 <= 0:
            raise ConfigError("radius0 must be > 0")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")


@dataclass(eq=False)
class SomUnit:
    """Read view of one unit: weight vector, mapped sample ids, summed
    quantization error and the optional child map."""

    row: int
    col: int
    weight: np.ndarray
    mapped: list
    qe: float
    child: "SomMap | None"

    @property
    def n_mapped(self) -> int:
        return len(self.mapped)


class SomMap:
    def __init__(self, rows: int, cols: int, weights: np.ndarray):
        if rows < 2 or cols < 2:
            raise ConfigError("maps are at least 2x2")
        self.rows = rows
        self.cols = cols
        self.weights = np.asarray(weights, dtype=np.float64)  # (rows*cols, dim)
        self.mapped: list[list[str]] = [[] for _ in range(rows * cols)]
        self.qe = np.zeros(rows * cols)
        self.children: dict[tuple[int, int], SomMap] = {}

    @property
    def n_units(self) -> int:
        return self.rows * self.cols

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise PathError(f"unit ({col},{row}) outside {self.cols}x{self.rows} map")
        return row * self.cols + col

    def unit(self, row: int, col: int) -> SomUnit:
        i = self.index(row, col)
        return SomUnit(row=row, col=col, weight=self.weights[i],
                       mapped=self.mapped[i], qe=float(self.qe[i]),
                       child=self.children.get((row, col)))

    def units(self) -> list[SomUnit]:
        return [self.unit(r, c) for r in range(self.rows) for c in range(self.cols)]

    def grid_coords(self) -> np.ndarray:
        rows, cols = np.indices((self.rows, self.cols))
        return np.column_stack([rows.ravel(), cols.ravel()]).astype(np.float64)

    def total_mapped(self) -> int:
        return sum(len(m) for m in self.mapped)

    def mqe(self) -> float:
        """Mean quantization error per mapped sample."""
        n = self.total_mapped()
        return float(self.qe.sum() / n) if n else 0.0


@dataclass(eq=False)
class GhsomTree:
    root: SomMap
    config: GhsomConfig
    sample_store: dict = field(default_factory=dict)
    qe_root: float = 0.0
    n_total: int = 0


def new_map(rows: int, cols: int, X: np.ndarray, rng: np.random.Generator) -> SomMap:
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    weights = rng.uniform(lo, hi, size=(rows * cols, X.shape[1]))
    return SomMap(rows, cols, weights)


# ---------------------------------------------------------------------------
# training

def _assign(som: SomMap, ids: list[str], X: np.ndarray) -> None:
    som.mapped = [[] for _ in range(som.n_units)]
    som.qe = np.zeros(som.n_units)
    for sid, x in zip(ids, X):
        d = np.linalg.norm(som.weights - x, axis=1)
        w = int(np.argmin(d))
        som.mapped[w].append(sid)
        som.qe[w] += float(d[w])


def train_map(som: SomMap, ids: list[str], X: np.ndarray, cfg: GhsomConfig,
              rng: np.random.Generator | None = None) -> SomMap:
    """Sequential SOM passes with Gaussian neighborhood; learning rate
    decays linearly lr0 -> 0.01*lr0 and radius radius0 -> 0.5 across
    epochs. Samples are visited in their given (stable) order, so a
    trained map is a pure function of (weights, samples, config)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise StateError("train_map needs at least one sample")
    if X.shape[1] != som.dim:
        raise StateError(f"sample dim {X.shape[1]} != map dim {som.dim}")
    del rng  # maps are created initialized; kept for interface symmetry
    coords = som.grid_coords()
    radius0 = cfg.radius0 if cfg.radius0 is not None else max(som.rows, som.cols) / 2.0
    steps = max(cfg.epochs - 1, 1)
    for epoch in range(cfg.epochs):
        frac = epoch / steps if cfg.epochs > 1 else 0.0
        lr = cfg.lr0 + (0.01 * cfg.lr0 - cfg.lr0) * frac
        sigma = radius0 + (0.5 - radius0) * frac
        denom = 2.0 * sigma * sigma
        for x in X:
            d = np.linalg.norm(som.weights - x, axis=1)
            winner = int(np.argmin(d))
            grid_d2 = np.sum((coords - coords[winner]) ** 2, axis=1)
            h = np.exp(-grid_d2 / denom)
            som.weights += (lr * h)[:, None] * (x - som.weights)
    _assign(som, ids, X)
    return som


# ---------------------------------------------------------------------------
# growth rules

def stratification_blocked(n_k: int, n_input_total: int, alpha: float) -> bool:
    """Too-few-samples stop rule: n_k <= alpha * n_I."""
    return n_k <= alpha * n_input_total


def insert_rule(qe_k: float, qe_total: float, beta: float, tau1: float) -> bool:
    """Single-unit insertion trigger: qe_k >= beta * tau1 * sum of map qe
    (inclusive >=)."""
    return qe_k >= beta * tau1 * qe_total


def should_insert(unit: SomUnit, som: SomMap, cfg: GhsomConfig) -> bool:
    qe_total = float(som.qe.sum())
    # a zero-error map never grows, whatever the literal inequality says
    return qe_total > 0.0 and insert_rule(unit.qe, qe_total, cfg.beta, cfg.tau1)


def should_stratify(unit: SomUnit, n_input_total: int, cfg: GhsomConfig,
                    qe_reference: float) -> bool:
    if unit.n_mapped == 0:
        return False
    if stratification_blocked(unit.n_mapped, n_input_total, cfg.alpha):
        return False
    return unit.qe > cfg.tau2 * qe_reference


def _distinct_vector_count(som: SomMap, unit_idx: int, X_by_id: dict) -> int:
    seen = set()
    for sid in som.mapped[unit_idx]:
        seen.add(tuple(X_by_id[sid]))
    return len(seen)


def insert_between_error_unit(som: SomMap) -> tuple[str, int]:
    """Insert a full row or column between the highest-error unit and its
    most dissimilar grid neighbor; new weights are the mean of the two
    flanking lines at insertion time. Returns ('row'|'col', index)."""
    err = int(np.argmax(som.qe))
    er, ec = divmod(err, som.cols)
    neighbors = [(er + dr, ec + dc) for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
                 if 0 <= er + dr < som.rows and 0 <= ec + dc < som.cols]
    dis = [float(np.linalg.norm(som.weights[som.index(r, c)] - som.weights[err]))
           for r, c in neighbors]
    nr, nc = neighbors[int(np.argmax(dis))]

    grid = som.weights.reshape(som.rows, som.cols, som.dim)
    if nr == er:  # insert a column between ec and nc
        at = min(ec, nc) + 1
        line = (grid[:, at - 1, :] + grid[:, at, :]) / 2.0
        grid = np.insert(grid, at, line, axis=1)
        som.cols += 1
        kind = "col"
    else:  # insert a row between er and nr
        at = min(er, nr) + 1
        line = (grid[at - 1, :, :] + grid[at, :, :]) / 2.0
        grid = np.insert(grid, at, line, axis=0)
        som.rows += 1
        kind = "row"
    som.weights = grid.reshape(som.rows * som.cols, som.dim)
    som.mapped = [[] for _ in range(som.n_units)]
    som.qe = np.zeros(som.n_units)
    return kind, at


def grow_breadth(som: SomMap, ids: list[str], X: np.ndarray, cfg: GhsomConfig) -> SomMap:
    insert_between_error_unit(som)
    return train_map(som, ids, X, cfg)


_MAX_BREADTH_STEPS = 32  # safety valve against runaway insertion


def _grow_map(ids: list[str], X: np.ndarray, cfg: GhsomConfig, parent_mqe: float,
              depth: int, qe_layer0: float, n_total: int,
              X_by_id: dict, rng: np.random.Generator) -> SomMap:
    som = train_map(new_map(2, 2, X, rng.spawn(1)[0]), ids, X, cfg)
    unit_cap = min(64, max(4, len(ids)))
    steps = 0
    while steps < _MAX_BREADTH_STEPS and som.n_units < unit_cap:
        needs_breadth = som.mqe() > cfg.tau1 * parent_mqe
        needs_insert = any(should_insert(u, som, cfg) for u in som.units())
        if not (needs_breadth or needs_insert):
            break
        grow_breadth(som, ids, X, cfg)
        steps += 1

    # stop-stratification override: a blocked unit that could still
    # classify (>= 2 distinct vectors) buys its map one extra insertion pass
    blocked = [
        u for u in som.units()
        if u.n_mapped and u.qe > cfg.tau2 * qe_layer0
        and stratification_blocked(u.n_mapped, n_total, cfg.alpha)
        and _distinct_vector_count(som, som.index(u.row, u.col), X_by_id) >= 2
    ]
    if blocked and som.n_units < unit_cap:
        grow_breadth(som, ids, X, cfg)

    if depth < cfg.max_depth:
        for unit in som.units():
            if should_stratify(unit, n_total, cfg, qe_layer0):
                child_ids = list(som.mapped[som.index(unit.row, unit.col)])
                child_X = np.stack([X_by_id[s] for s in child_ids])
                child = _grow_map(child_ids, child_X, cfg,
                                  parent_mqe=unit.qe / unit.n_mapped,
                                  depth=depth + 1, qe_layer0=qe_layer0,
                                  n_total=n_total, X_by_id=X_by_id,
                                  rng=rng.spawn(1)[0])
                som.children[(unit.row, unit.col)] = child
    return som


def grow_hierarchy(ids: list[str], X: np.ndarray, cfg: GhsomConfig,
                   rng: np.random.Generator) -> GhsomTree:
    """Build the full tree: 2x2 root, breadth growth per map, recursive
    stratification down to ``max_depth``. Deterministic for a fixed seed."""
    X = np.asarray(X, dtype=np.float64)
    if len(ids) != X.shape[0]:
        raise StateError("ids must align with samples")
    if X.shape[0] < 4:
        raise StateError("hierarchy needs at least 4 samples")
    if len(set(ids)) != len(ids):
        raise StateError("sample ids must be unique")
    qe0 = float(np.linalg.norm(X - X.mean(axis=0), axis=1).sum())
    X_by_id = {sid: X[i] for i, sid in enumerate(ids)}
    root = _grow_map(ids, X, cfg, parent_mqe=qe0 / X.shape[0], depth=1,
                     qe_layer0=qe0, n_total=X.shape[0], X_by_id=X_by_id, rng=rng)
    return GhsomTree(root=root, config=cfg, sample_store=dict(X_by_id),
                     qe_root=qe0, n_total=X.shape[0])


# ---------------------------------------------------------------------------
# path labels

_BRACKET = re.compile(r"\[([^\[\]]*)\]")


def _format_hop(col: int, row: int) -> str:
    if 0 <= col <= 9 and 0 <= row <= 9:
        return f"[{col}{row}]"
    return f"[{col},{row}]"


def format_path(hops: tuple) -> str:
    """Bracket label of a map or unit path: '[R]' plus one '[cr]' hop per
    level (column first, then row)."""
    return "[R]" + "".join(_format_hop(c, r) for c, r in hops)


def format_unit_label(hops: tuple, count: int) -> str:
    return format_path(hops) + f":{count}"


def parse_path(label: str) -> tuple[tuple, int | None]:
    """Inverse of format_path/format_unit_label: returns (hops, count).

    Accepts the compact two-digit form '[01]' and the comma form '[10,2]'
    used when an index exceeds 9.
    """
    body, count = label, None
    if ":" in label:
        body, _, tail = label.partition(":")
        if not tail.isdigit():
            raise PathError(f"bad sample count in {label!r}")
        count = int(tail)
    parts = _BRACKET.findall(body)
    if "".join(f"[{p}]" for p in parts) != body or not parts or parts[0] != "R":
        raise PathError(f"malformed path label {label!r}")
    hops = []
    for part in parts[1:]:
        if "," in part:
            cs, _, rs = part.partition(",")
        elif len(part) == 2:
            cs, rs = part[0], part[1]
        else:
            raise PathError(f"malformed hop [{part}] in {label!r}")
        if not (cs.isdigit() and rs.isdigit()):
            raise PathError(f"malformed hop [{part}] in {label!r}")
        hops.append((int(cs), int(rs)))
    return tuple(hops), count


def path_label(tree: GhsomTree, map_path: tuple, unit: tuple | None,
               count: int | None = None) -> str:
    """Label for a map (unit=None) or a unit within it; validates that the
    path resolves in ``tree``."""
    som = resolve_map(tree, map_path)
    if unit is None:
        return format_path(map_path)
    col, row = unit
    idx = som.index(row, col)
    n = count if count is not None else len(som.mapped[idx])
    return format_unit_label(map_path + ((col, row),), n)


def resolve_map(tree: GhsomTree, map_path: tuple) -> SomMap:
    som = tree.root
    for col, row in map_path:
        som.index(row, col)  # bounds check, raises PathError
        child = som.children.get((row, col))
        if child is None:
            raise PathError(f"no child map under {format_path(map_path)}")
        som = child
    return som


def resolve_unit(tree: GhsomTree, path: tuple) -> tuple[SomMap, int, int]:
    """Unit path = map path + final (col, row) hop."""
    if not path:
        raise PathError("unit path must have at least one hop")
    som = resolve_map(tree, tuple(path[:-1]))
    col, row = path[-1]
    som.index(row, col)
    return som, row, col


# ---------------------------------------------------------------------------
# interactive expansion

def expand_unit(tree: GhsomTree, path: tuple,
                rng: np.random.Generator) -> tuple[GhsomTree, list[str]]:
    """Drop the unit's subtree and regrow it from the unit's samples with
    a fresh seed split, bypassing the too-few-samples stop for this unit
    only. Sibling subtrees are untouched. Returns the tree and the list
    of changed paths (the expanded unit's subtree root)."""
    som, row, col = resolve_unit(tree, tuple(path))
    idx = som.index(row, col)
    ids = list(som.mapped[idx])
    if not ids:
        raise EmptyUnitError(f"unit {format_path(tuple(path))} has no samples")
    depth = len(path) + 1  # the new child map's level
    if depth > tree.config.max_depth:
        raise StateError(
            f"expansion at {format_path(tuple(path))} would exceed max_depth")
    X = np.stack([tree.sample_store[s] for s in ids])
    unit_qe = float(som.qe[idx])
    child = _grow_map(ids, X, tree.config, parent_mqe=unit_qe / len(ids),
                      depth=depth, qe_layer0=tree.qe_root, n_total=tree.n_total,
                      X_by_id={s: tree.sample_store[s] for s in ids}, rng=rng)
    som.children[(row, col)] = child
    return tree, [format_path(tuple(path))]


# ---------------------------------------------------------------------------
# export / import / rendering

TREE_FORMAT = "ghsom-tree/1"


def _export_map(som: SomMap, hops: tuple) -> dict:
    units = []
    for unit in som.units():
        unit_hops = hops + ((unit.col, unit.row),)
        child = som.children.get((unit.row, unit.col))
        units.append({
            "row": unit.row,
            "col": unit.col,
            "label": format_unit_label(unit_hops, unit.n_mapped),
            "weight": [float(v) for v in unit.weight],
            "qe": float(unit.qe),
            "sample_ids": list(unit.mapped),
            "child": _export_map(child, unit_hops) if child is not None else None,
        })
    return {"path": format_path(hops), "rows": som.rows, "cols": som.cols,
            "units": units}


def export_tree(tree: GhsomTree) -> dict:
    return {
        "format": TREE_FORMAT,
        "dim": tree.root.dim,
        "n_samples": tree.n_total,
        "qe_layer0": tree.qe_root,
        "root": _export_map(tree.root, ()),
    }


def _import_map(doc: dict) -> SomMap:
    rows, cols = doc["rows"], doc["cols"]
    dim = len(doc["units"][0]["weight"])
    som = SomMap(rows, cols, np.zeros((rows * cols, dim)))
    for u in doc["units"]:
        i = som.index(u["row"], u["col"])
        som.weights[i] = np.asarray(u["weight"], dtype=np.float64)
        som.mapped[i] = list(u["sample_ids"])
        som.qe[i] = float(u["qe"])
        if u.get("child") is not None:
            som.children[(u["row"], u["col"])] = _import_map(u["child"])
    return som


def import_tree(doc: dict, config: GhsomConfig | None = None) -> GhsomTree:
    """Rebuild a read-only tree from an export document (sample vectors are
    not part of the export, so the sample_store starts empty)."""
    if doc.get("format") != TREE_FORMAT:
        raise ConfigError(f"unexpected tree format {doc.get('format')!r}")
    return GhsomTree(root=_import_map(doc["root"]), config=config or GhsomConfig(),
                     sample_store={}, qe_root=float(doc["qe_layer0"]),
                     n_total=int(doc["n_samples"]))


def dump_tree(tree: GhsomTree) -> str:
    return json.dumps(export_tree(tree), indent=2, sort_keys=True)


def render_text(tree: GhsomTree) -> str:
    """Indented one-unit-per-line rendering with path labels and counts."""
    lines = []

    def walk(som: SomMap, hops: tuple, indent: int):
        for unit in som.units():
            unit_hops = hops + ((unit.col, unit.row),)
            lines.append("  " * indent + format_unit_label(unit_hops, unit.n_mapped))
            child = som.children.get((unit.row, unit.col))
            if child is not None:
                walk(child, unit_hops, indent + 1)

    lines.append("[R]")
    walk(tree.root, (), 1)
    return "\n".join(lines) + "\n"
