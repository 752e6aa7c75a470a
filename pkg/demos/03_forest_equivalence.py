# End-to-end check: the simulated hardware reproduces the software
# forest exactly when programming is ideal.
#
# The pipeline is train -> extract ranges -> pack tiles -> program
# conductances -> run the analog match + vote readout. With no
# programming noise and no quantization there is no approximation
# anywhere in that chain, so predictions must be identical, including
# vote ties (broken toward the lower class index on both sides).

import numpy as np

from camforest import (
    grid_classification, off_grid_inputs, train_forest, program_forest,
    infer_batch, infer,
)

Xg, yg = grid_classification(300, 12, 3, seed=8)
forest = train_forest(Xg, yg, n_trees=11, max_depth=5, seed=8)
arch = program_forest(forest)

plan = arch.plan
print(f"forest: 11 trees, {len(plan.tmap.rows)} leaf rows, 12 features")
print(f"layout: {plan.n_groups} feature groups, {plan.n_tiles} tiles of "
      f"{plan.tile_h}x{plan.tile_w}, {plan.memory_cells} cells")
print(f"decision latency: {arch.cycles_per_decision} clock cycles "
      f"({arch.n_active_arrays} active arrays, 3 cycles each, 1 vote read)")

# Fresh inputs drawn off the training grid so every comparison is an
# honest generalization case, not a memorized sample.
Xe = off_grid_inputs(500, 12, seed=99)
hw = infer_batch(arch, Xe)
sw = forest.predict(Xe)
print(f"\nhardware vs software on {len(Xe)} unseen samples: "
      f"{int(np.sum(hw != sw))} mismatches")
assert np.array_equal(hw, sw)

# Drill into one sample and watch the intermediate signals.
trace = infer(arch, Xe[0])
print(f"\nsample 0 trace:")
print(f"  match rows: {np.flatnonzero(trace.row_matches).tolist()} "
      f"(one per tree)")
print(f"  vote currents (uA): "
      f"{np.array2string(trace.vote_currents * 1e6, precision=3)}")
print(f"  predicted class: {trace.predicted} (software: {int(sw[0])})")

# Per-tree accounting: every sample lands in exactly one leaf per tree.
tree_of_row = np.array([r.tree_index for r in plan.tmap.rows])
matched_trees = np.sort(tree_of_row[trace.row_matches])
print(f"  trees asserting a row: {matched_trees.tolist()}")
