# How a decision tree becomes a table of acceptance ranges.
#
# Every root-to-leaf path is a conjunction of threshold tests, so each
# path collapses into one range per feature: left turns tighten the
# upper bound, right turns tighten the lower bound. Features a path
# never tests stay wildcards ("always match"). The resulting table is
# the intermediate representation the hardware mapper packs into tiles.

import numpy as np

from camforest import load_iris, train_tree, extract_paths, compile_forest

X, y = load_iris()
model = train_tree(X, y, max_depth=3)
tree = model.trees[0]
print(f"trained one tree: {tree.n_leaves()} leaves on {X.shape[1]} features")

tmap = extract_paths(model)
print(f"\nthreshold map: {len(tmap.rows)} rows x {tmap.n_features} features")
print("row | ranges (lo, hi) per feature, * = wildcard            | class")
for i, row in enumerate(tmap.rows):
    cells = []
    for r in row.ranges:
        if r.wildcard:
            cells.append("      *      ")
        else:
            lo = " -inf" if np.isinf(r.lo) else f"{r.lo:5.2f}"
            hi = " inf " if np.isinf(r.hi) else f"{r.hi:5.2f}"
            cells.append(f"({lo},{hi})")
    print(f"{i:3d} | {' '.join(cells)} | {row.class_label}")

# Wildcards dominate: each path only touches max_depth of the features.
occ = tmap.occupancy()
print(f"\nper-feature occupancy (non-wildcard cells): {occ.tolist()}")
print(f"occupied fraction: {occ.sum() / (len(tmap.rows) * tmap.n_features):.2f}")

# The compiler permutes dense columns first, sorts rows so their used
# columns cluster, then packs rows into fixed tiles, dropping tiles that
# hold only wildcards.
plan = compile_forest(model, tile_h=4, tile_w=2)
print(f"\npacked into {plan.n_tiles} tiles of 4x2 "
      f"({plan.memory_cells} physical cells vs {len(tmap.rows) * tmap.n_features} raw)")
print(f"column order after permutation: {list(plan.col_perm)}")
for g, tiles in enumerate(plan.groups):
    print(f"feature group {g} -> {len(tiles)} tiles: {[list(t) for t in tiles]}")
