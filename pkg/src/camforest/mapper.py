"""Compile a trained forest into stored-range rows and packed tiles.

Each root-to-leaf path becomes one row of per-feature acceptance ranges
(wildcards where the path never tests a feature). Columns and rows can be
reordered to concentrate occupied cells, then the map is packed into H x W
tiles per feature group; a row is written into a group's tiles only where
it has at least one occupied cell, and matches implicitly elsewhere.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .device import ThresholdRange
from .errors import InvariantError, ModelFormatError
from .forest import Forest

PLAN_FORMAT = "camforest-plan"
PLAN_VERSION = 1


@dataclass(frozen=True)
class MapRow:
    """One root-to-leaf path: acceptance ranges, its class, its tree."""

    ranges: tuple
    class_label: int
    tree_index: int

    def occupied(self) -> np.ndarray:
        return np.array([not r.wildcard for r in self.ranges])


@dataclass(frozen=True)
class ThresholdMap:
    rows: tuple
    n_features: int

    def __post_init__(self):
        for row in self.rows:
            if len(row.ranges) != self.n_features:
                raise InvariantError("row length differs from n_features")

    def occupancy(self) -> np.ndarray:
        """Count of non-wildcard cells per column."""
        counts = np.zeros(self.n_features, dtype=int)
        for row in self.rows:
            counts += row.occupied()
        return counts

    def bound_arrays(self) -> tuple:
        """(lo, hi) arrays of shape (rows, F) with infinities at wildcards."""
        lo = np.array([[r.lo for r in row.ranges] for row in self.rows])
        hi = np.array([[r.hi for r in row.ranges] for row in self.rows])
        return lo, hi


def extract_paths(forest: Forest) -> ThresholdMap:
    """One map row per leaf; left branches tighten hi, right branches lo."""
    rows = []
    for t_idx, tree in enumerate(forest.trees):
        def walk(node, lo, hi):
            if node.is_leaf:
                ranges = tuple(ThresholdRange(a, b) for a, b in zip(lo, hi))
                rows.append(MapRow(ranges, node.label, t_idx))
                return
            f, th = node.feature, node.threshold
            if not min(hi[f], th) > lo[f]:
                raise InvariantError(
                    f"tree {t_idx}: contradictory path on feature {f}")
            if not hi[f] > max(lo[f], th):
                raise InvariantError(
                    f"tree {t_idx}: contradictory path on feature {f}")
            walk(node.left, lo, hi[:f] + [min(hi[f], th)] + hi[f + 1:])
            walk(node.right, lo[:f] + [max(lo[f], th)] + lo[f + 1:], hi)

        inf = math.inf
        walk(tree.root, [-inf] * forest.n_features, [inf] * forest.n_features)
    return ThresholdMap(rows=tuple(rows), n_features=forest.n_features)


def map_matches(tmap: ThresholdMap, X) -> np.ndarray:
    """Ideal range semantics: (samples, rows) boolean match matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lo, hi = tmap.bound_arrays()
    return np.all((X[:, None, :] > lo) & (X[:, None, :] <= hi), axis=2)


def map_votes(tmap: ThresholdMap, matched: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.array([row.class_label for row in tmap.rows])
    onehot = np.zeros((len(tmap.rows), n_classes), dtype=int)
    onehot[np.arange(len(tmap.rows)), labels] = 1
    return matched.astype(int) @ onehot


def map_predict(tmap: ThresholdMap, X, n_classes: int) -> np.ndarray:
    """Software evaluation of the map itself (used as the semantic oracle)."""
    return np.argmax(map_votes(tmap, map_matches(tmap, X), n_classes), axis=1)


def _leftmost_group(occ: np.ndarray, group_width: int, n_groups: int) -> int:
    hits = np.nonzero(occ)[0]
    if hits.size == 0:
        return n_groups  # fully-wildcard rows sort last
    return int(hits[0]) // group_width


def reorder(tmap: ThresholdMap, group_width: int | None = None) -> tuple:
    """Concentrate occupied cells: returns (col_perm, row_perm, new map).

    Columns sort by descending occupancy (stable). Rows then sort by the
    leftmost feature group holding an occupied cell, ties by descending
    occupancy, then by original index. col_perm[i] is the original feature
    shown in column i, so inference permutes its inputs the same way.
    """
    counts = tmap.occupancy()
    col_perm = np.argsort(-counts, kind="stable")
    w = group_width if group_width is not None else 1
    n_groups = max(1, math.ceil(tmap.n_features / w))
    keys = []
    for i, row in enumerate(tmap.rows):
        occ = row.occupied()[col_perm]
        keys.append((_leftmost_group(occ, w, n_groups), -int(occ.sum()), i))
    row_perm = np.array([k[2] for k in sorted(keys)])
    new_rows = tuple(
        MapRow(
            ranges=tuple(tmap.rows[r].ranges[c] for c in col_perm),
            class_label=tmap.rows[r].class_label,
            tree_index=tmap.rows[r].tree_index,
        )
        for r in row_perm
    )
    return col_perm, row_perm, ThresholdMap(new_rows, tmap.n_features)


def apply_permutations(tmap: ThresholdMap, col_perm, row_perm) -> ThresholdMap:
    """Rebuild a map under explicit permutations (inverses undo reorder)."""
    new_rows = tuple(
        MapRow(
            ranges=tuple(tmap.rows[r].ranges[c] for c in col_perm),
            class_label=tmap.rows[r].class_label,
            tree_index=tmap.rows[r].tree_index,
        )
        for r in row_perm
    )
    return ThresholdMap(new_rows, tmap.n_features)


def raw_cells(tmap: ThresholdMap) -> int:
    """Cell count of the unpacked map: rows times features."""
    return len(tmap.rows) * tmap.n_features


@dataclass(frozen=True)
class TiledPlan:
    """Packed layout: per feature group, tiles listing map-row ids."""

    tmap: ThresholdMap          # column-permuted map the tiles index into
    tile_h: int
    tile_w: int
    col_perm: tuple             # column -> original feature index
    groups: tuple               # groups[g] = tuple of tiles; tile = row ids

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_tiles(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def memory_cells(self) -> int:
        return self.n_tiles * self.tile_h * self.tile_w

    def group_columns(self, g: int) -> range:
        start = g * self.tile_w
        return range(start, min(start + self.tile_w, self.tmap.n_features))


def pack_tiles(tmap: ThresholdMap, tile_h: int, tile_w: int,
               col_perm=None) -> TiledPlan:
    """Greedy top-to-bottom sweep: a row joins a group's current tile iff
    it has an occupied cell in that group's columns."""
    if tile_h < 1 or tile_w < 1:
        raise ValueError("tile dimensions must be positive")
    if col_perm is None:
        col_perm = tuple(range(tmap.n_features))
    else:
        col_perm = tuple(int(c) for c in col_perm)
        if sorted(col_perm) != list(range(tmap.n_features)):
            raise InvariantError("col_perm is not a permutation")
    n_groups = math.ceil(tmap.n_features / tile_w)
    occ = np.array([row.occupied() for row in tmap.rows]) \
        if tmap.rows else np.zeros((0, tmap.n_features), dtype=bool)
    groups = []
    for g in range(n_groups):
        cols = slice(g * tile_w, min((g + 1) * tile_w, tmap.n_features))
        tiles, current = [], []
        for r in range(len(tmap.rows)):
            if occ[r, cols].any():
                current.append(r)
                if len(current) == tile_h:
                    tiles.append(tuple(current))
                    current = []
        if current:
            tiles.append(tuple(current))
        groups.append(tuple(tiles))
    return TiledPlan(tmap=tmap, tile_h=tile_h, tile_w=tile_w,
                     col_perm=col_perm, groups=tuple(groups))


@dataclass(frozen=True)
class RowSchedule:
    """Tile coordinates to AND together for one map row, plus the groups
    where the row matches implicitly (no occupied cell there)."""

    coords: tuple           # (group, tile, slot) triples
    implicit_groups: tuple


def plan_inference_row_sets(plan: TiledPlan) -> tuple:
    """Per-row AND schedule; verifies no row was lost or duplicated."""
    n_rows = len(plan.tmap.rows)
    coords = [[] for _ in range(n_rows)]
    for g, tiles in enumerate(plan.groups):
        for t, tile in enumerate(tiles):
            for slot, r in enumerate(tile):
                coords[r].append((g, t, slot))
    occ = np.array([row.occupied() for row in plan.tmap.rows]) \
        if n_rows else np.zeros((0, plan.tmap.n_features), dtype=bool)
    schedules = []
    for r in range(n_rows):
        implicit = []
        for g in range(plan.n_groups):
            cols = slice(g * plan.tile_w,
                         min((g + 1) * plan.tile_w, plan.tmap.n_features))
            has = bool(occ[r, cols].any())
            placed = sum(1 for c in coords[r] if c[0] == g)
            if has and placed != 1:
                raise InvariantError(
                    f"row {r} appears {placed} times in group {g}")
            if not has:
                if placed:
                    raise InvariantError(
                        f"wildcard row {r} was written into group {g}")
                implicit.append(g)
        schedules.append(RowSchedule(coords=tuple(coords[r]),
                                     implicit_groups=tuple(implicit)))
    return tuple(schedules)


def _range_to_obj(r: ThresholdRange):
    return {"lo": None if math.isinf(r.lo) else r.lo,
            "hi": None if math.isinf(r.hi) else r.hi}


def _range_from_obj(obj) -> ThresholdRange:
    try:
        lo, hi = obj["lo"], obj["hi"]
    except (TypeError, KeyError):
        raise ModelFormatError("range must carry lo and hi") from None
    return ThresholdRange(-math.inf if lo is None else float(lo),
                          math.inf if hi is None else float(hi))


def plan_to_json(plan: TiledPlan, feature_bounds=None, programming=None) -> str:
    """Serialize a plan; optionally embed bounds and encoded conductances."""
    obj = {
        "format": PLAN_FORMAT,
        "version": PLAN_VERSION,
        "tile_h": plan.tile_h,
        "tile_w": plan.tile_w,
        "n_features": plan.tmap.n_features,
        "col_perm": list(plan.col_perm),
        "rows": [
            {
                "ranges": [_range_to_obj(r) for r in row.ranges],
                "class": row.class_label,
                "tree": row.tree_index,
            }
            for row in plan.tmap.rows
        ],
        "groups": [[list(tile) for tile in tiles] for tiles in plan.groups],
        "memory_cells": plan.memory_cells,
    }
    if feature_bounds is not None:
        obj["feature_bounds"] = [list(map(float, b)) for b in feature_bounds]
    if programming is not None:
        obj["programming"] = programming
    return json.dumps(obj, sort_keys=True, indent=1)


def plan_from_json(text: str) -> tuple:
    """Returns (TiledPlan, feature_bounds or None)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or obj.get("format") != PLAN_FORMAT:
        raise ModelFormatError("missing plan format tag")
    if obj.get("version") != PLAN_VERSION:
        raise ModelFormatError(f"unsupported plan version {obj.get('version')!r}")
    try:
        n_features = int(obj["n_features"])
        rows = tuple(
            MapRow(
                ranges=tuple(_range_from_obj(r) for r in row["ranges"]),
                class_label=int(row["class"]),
                tree_index=int(row["tree"]),
            )
            for row in obj["rows"]
        )
        tmap = ThresholdMap(rows, n_features)
        plan = pack_tiles(tmap, int(obj["tile_h"]), int(obj["tile_w"]),
                          obj["col_perm"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed plan: {exc!r}") from None
    if [[list(t) for t in g] for g in plan.groups] != obj["groups"]:
        raise ModelFormatError("stored tile layout disagrees with packing")
    if plan.memory_cells != obj.get("memory_cells"):
        raise ModelFormatError("stored memory_cells disagrees with packing")
    fb = obj.get("feature_bounds")
    bounds = tuple((float(a), float(b)) for a, b in fb) if fb else None
    return plan, bounds


def compile_forest(forest: Forest, tile_h: int, tile_w: int,
                   reorder_map: bool = True) -> TiledPlan:
    """extract_paths + optional reorder + pack_tiles in one call."""
    tmap = extract_paths(forest)
    if reorder_map:
        col_perm, _, tmap = reorder(tmap, group_width=tile_w)
        return pack_tiles(tmap, tile_h, tile_w, col_perm)
    return pack_tiles(tmap, tile_h, tile_w)
