"""End-to-end behavioral inference on the programmed arrays.

Programming turns every stored range into a conductance pair (optionally
quantized and noised), tile by tile; padding slots hold wildcards. Inference
drives the permuted feature voltages on each group's DLs, integrates every
row's discharge current over the clock window, senses the surviving match
lines, ANDs each original row across its groups, and reads the majority
vote as per-class currents through a conductance matrix.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cell import CellParams, Parasitics, row_total_current
from .device import (
    DeviceModel,
    build_calibration,
    feature_to_voltage,
    inject_noise,
    reference_current,
    snap_to_levels,
    V_DL_MAX,
    V_DL_MIN,
)
from .errors import ConfigError, DataError
from .forest import Forest
from .mapper import TiledPlan, compile_forest, plan_inference_row_sets

SWEEP_VARIABLES = ("sigma", "n_bits", "t_clk", "tile_h", "tile_w")


@dataclass(frozen=True)
class ArchConfig:
    """Electrical operating point of the match and vote arrays."""

    params: CellParams = CellParams()
    parasitics: Parasitics = Parasitics()
    t_clk: float = 1e-6
    v_ml0: float = 0.8
    v_sa: float = 0.4
    v_read: float = 0.2
    vote_sigma: float = 0.0

    def __post_init__(self):
        if self.t_clk <= 0:
            raise ConfigError("t_clk must be positive")
        if not 0 < self.v_sa < self.v_ml0:
            raise ConfigError("need 0 < v_sa < v_ml0")
        if self.v_read <= 0 or self.vote_sigma < 0:
            raise ConfigError("v_read must be positive, vote_sigma >= 0")


@dataclass(frozen=True)
class ProgrammedArchitecture:
    """Immutable programmed state shared read-only by inference."""

    plan: TiledPlan
    config: ArchConfig
    device: DeviceModel
    n_classes: int
    feature_bounds: tuple     # original feature order
    cells_m1: tuple           # per group: (tiles, H, W) conductances
    cells_m2: tuple
    vote_matrix: np.ndarray   # (rows, n_classes)
    n_bits: int | None
    sigma_rel: float

    @property
    def n_active_arrays(self) -> int:
        return sum(1 for tiles in self.plan.groups if tiles)

    @property
    def cycles_per_decision(self) -> int:
        # Pre-charge, evaluate, latch per array, then one vote read.
        return 3 * self.n_active_arrays + 1


@dataclass(frozen=True)
class InferenceTrace:
    """Single-sample record of every intermediate decision signal."""

    ml_outputs: dict          # (group, tile) -> (H,) match booleans
    ml_voltages: dict         # (group, tile) -> (H,) volts at sense time
    row_matches: np.ndarray   # (rows,) AND-combined results
    vote_currents: np.ndarray  # (n_classes,) amperes
    predicted: int
    cycles: int


def _group_feature_bounds(plan: TiledPlan, feature_bounds, g: int):
    """Per-column (lo, hi, wildcard-pad) for one group, in map column order."""
    cols = plan.group_columns(g)
    lo = np.empty(plan.tile_w)
    hi = np.empty(plan.tile_w)
    lo[:] = 0.0
    hi[:] = 1.0  # padding columns: any valid bounds, cells are wildcards
    for k, c in enumerate(cols):
        b = feature_bounds[plan.col_perm[c]]
        lo[k], hi[k] = float(b[0]), float(b[1])
    return lo, hi


def _encode_group(plan, feature_bounds, device, cal, g, n_bits):
    """Vectorized conductance grids (tiles, H, W) for one feature group."""
    tiles = plan.groups[g]
    h, w = plan.tile_h, plan.tile_w
    lo = np.full((len(tiles), h, w), -math.inf)
    hi = np.full((len(tiles), h, w), math.inf)
    cols = plan.group_columns(g)
    for t, tile in enumerate(tiles):
        for slot, r in enumerate(tile):
            ranges = plan.tmap.rows[r].ranges
            for k, c in enumerate(cols):
                lo[t, slot, k] = ranges[c].lo
                hi[t, slot, k] = ranges[c].hi
    b_lo, b_hi = _group_feature_bounds(plan, feature_bounds, g)
    if n_bits is not None:
        widen = (b_hi - b_lo) / 2 ** (n_bits + 1)
        lo = snap_to_levels(lo, n_bits, b_lo, b_hi) - widen
        hi = snap_to_levels(hi, n_bits, b_lo, b_hi) + widen
    scale = (V_DL_MAX - V_DL_MIN) / (b_hi - b_lo)
    v_lo = V_DL_MIN + (lo - b_lo) * scale
    v_hi = V_DL_MIN + (hi - b_lo) * scale
    g_m1 = np.where(np.isinf(lo), device.g_hrs, cal.g_for_lower(v_lo))
    g_m2 = np.where(np.isinf(hi), device.g_lrs, cal.g_for_upper(v_hi))
    return g_m1, g_m2


def program(plan: TiledPlan, device: DeviceModel, config: ArchConfig,
            feature_bounds, n_classes: int, n_bits: int | None = None,
            sigma_rel: float | None = None, seed=0) -> ProgrammedArchitecture:
    """Encode the plan's ranges into conductances and build the vote matrix.

    ``sigma_rel`` overrides the device's programming-noise setting; noise
    applies to the CAM cells only (the vote array is treated as ideal).
    Deterministic for a fixed seed.
    """
    if len(feature_bounds) != plan.tmap.n_features:
        raise DataError("feature_bounds length differs from plan features")
    sigma = device.sigma_rel if sigma_rel is None else float(sigma_rel)
    noisy_device = replace(device, sigma_rel=sigma)
    i_ref = reference_current(config.parasitics.ml_capacitance(plan.tile_w),
                              config.v_ml0, config.v_sa, config.t_clk)
    cal = build_calibration(config.params, device, i_ref)
    rng = np.random.default_rng(seed)
    m1, m2 = [], []
    for g in range(plan.n_groups):
        g_m1, g_m2 = _encode_group(plan, feature_bounds, device, cal, g, n_bits)
        m1.append(inject_noise(g_m1, noisy_device, rng))
        m2.append(inject_noise(g_m2, noisy_device, rng))
    labels = np.array([row.class_label for row in plan.tmap.rows], dtype=int)
    if labels.size and labels.max() >= n_classes:
        raise DataError("row class exceeds n_classes")
    vote = np.full((labels.size, n_classes), device.g_hrs)
    vote[np.arange(labels.size), labels] = device.g_lrs
    return ProgrammedArchitecture(
        plan=plan, config=config, device=device, n_classes=n_classes,
        feature_bounds=tuple(tuple(map(float, b)) for b in feature_bounds),
        cells_m1=tuple(m1), cells_m2=tuple(m2), vote_matrix=vote,
        n_bits=n_bits, sigma_rel=sigma)


def program_forest(forest: Forest, device: DeviceModel = DeviceModel(),
                   config: ArchConfig = ArchConfig(), tile_h: int = 16,
                   tile_w: int = 16, reorder_map: bool = True,
                   n_bits: int | None = None, sigma_rel: float | None = None,
                   seed=0) -> ProgrammedArchitecture:
    """Compile and program a trained forest in one step."""
    plan = compile_forest(forest, tile_h, tile_w, reorder_map)
    return program(plan, device, config, forest.feature_bounds,
                   forest.n_classes, n_bits, sigma_rel, seed)


def _input_voltages(arch: ProgrammedArchitecture, X) -> list:
    """Per-group (samples, W) DL voltages, columns in map order."""
    X = np.asarray(X, dtype=float)
    plan = arch.plan
    v_all = np.empty_like(X)
    for j, b in enumerate(arch.feature_bounds):
        v_all[:, j] = feature_to_voltage(X[:, j], b)
    mid = 0.5 * (V_DL_MIN + V_DL_MAX)
    out = []
    for g in range(plan.n_groups):
        v = np.full((X.shape[0], plan.tile_w), mid)
        for k, c in enumerate(plan.group_columns(g)):
            v[:, k] = v_all[:, plan.col_perm[c]]
        out.append(v)
    return out


def _evaluate(arch: ProgrammedArchitecture, X, t_clk=None, collect=False):
    """Core kernel: returns (row match matrix, vote currents, tile record)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[1] != arch.plan.tmap.n_features:
        raise DataError(f"samples must have {arch.plan.tmap.n_features} features")
    cfg = arch.config
    t = cfg.t_clk if t_clk is None else float(t_clk)
    if t <= 0:
        raise ConfigError("t_clk must be positive")
    plan = arch.plan
    c_ml = cfg.parasitics.ml_capacitance(plan.tile_w)
    n_rows = len(plan.tmap.rows)
    n_samples = X.shape[0]
    v_groups = _input_voltages(arch, X)
    matches = np.ones((n_samples, n_rows), dtype=bool)
    tile_record = {} if collect else None
    volt_record = {} if collect else None
    cells_per_tile = plan.tile_h * plan.tile_w
    chunk = max(1, 2_000_000 // max(1, cells_per_tile))
    for g, tiles in enumerate(plan.groups):
        if not tiles:
            continue
        g1 = arch.cells_m1[g][None, :, :, :]
        g2 = arch.cells_m2[g][None, :, :, :]
        for s0 in range(0, n_samples, chunk):
            v = v_groups[g][s0:s0 + chunk, None, None, :]
            current = row_total_current(g1, g2, v, cfg.params, fast=True)
            v_ml = np.maximum(cfg.v_ml0 - current * t / c_ml, 0.0)
            ml = v_ml > cfg.v_sa  # (chunk, tiles, H)
            if collect:
                for ti in range(len(tiles)):
                    tile_record[(g, ti)] = ml[0, ti].copy()
                    volt_record[(g, ti)] = v_ml[0, ti].copy()
            for ti, tile in enumerate(tiles):
                for slot, r in enumerate(tile):
                    matches[s0:s0 + chunk, r] &= ml[:, ti, slot]
    # Exact-count evaluation of v_read * (matches @ vote_matrix): per-class
    # counts are integers, so classes with equal counts get bitwise-equal
    # currents and argmax ties resolve to the lowest index, not to float
    # summation-order noise.
    labels = np.array([row.class_label for row in plan.tmap.rows], dtype=int)
    onehot = np.zeros((n_rows, arch.n_classes), dtype=np.int64)
    if n_rows:
        onehot[np.arange(n_rows), labels] = 1
    counts = matches.astype(np.int64) @ onehot
    total = matches.sum(axis=1, keepdims=True)
    currents = cfg.v_read * (arch.device.g_hrs * total +
                             (arch.device.g_lrs - arch.device.g_hrs) * counts)
    return matches, currents, (tile_record, volt_record)


def infer_batch(arch: ProgrammedArchitecture, X, t_clk=None,
                rng=None) -> np.ndarray:
    """Predicted class per sample (argmax of vote currents, ties lowest)."""
    _, currents, _ = _evaluate(arch, X, t_clk)
    if arch.config.vote_sigma > 0:
        if rng is None:
            raise ConfigError("vote_sigma > 0 requires an rng")
        currents = currents * (
            1.0 + rng.normal(0.0, arch.config.vote_sigma, currents.shape))
    return np.argmax(currents, axis=1)


def infer(arch: ProgrammedArchitecture, sample, t_clk=None) -> InferenceTrace:
    """Single-sample inference keeping every intermediate signal."""
    sample = np.asarray(sample, dtype=float).reshape(1, -1)
    matches, currents, records = _evaluate(arch, sample, t_clk, collect=True)
    return InferenceTrace(
        ml_outputs=records[0],
        ml_voltages=records[1],
        row_matches=matches[0],
        vote_currents=currents[0],
        predicted=int(np.argmax(currents[0])),
        cycles=arch.cycles_per_decision,
    )


def evaluate_accuracy(arch: ProgrammedArchitecture, X, y,
                      t_clk=None) -> tuple:
    """(fraction correct, confusion matrix[true, predicted])."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.size == 0 or y.size == 0:
        raise DataError("empty evaluation dataset")
    pred = infer_batch(arch, X, t_clk)
    k = arch.n_classes
    confusion = np.zeros((k, k), dtype=int)
    np.add.at(confusion, (y, pred), 1)
    return float(np.mean(pred == y)), confusion


@dataclass(frozen=True)
class SweepResult:
    variable: str
    rows: tuple     # (value, trial, accuracy)
    summary: tuple  # (value, mean, std)


def sweep(forest: Forest, X, y, variable: str, grid, trials: int, seed: int,
          device: DeviceModel = DeviceModel(), config: ArchConfig = ArchConfig(),
          tile_h: int = 16, tile_w: int = 16, n_bits: int | None = None,
          sigma_rel: float | None = None, reorder_map: bool = True,
          workers: int | None = None) -> SweepResult:
    """Monte-Carlo accuracy sweep over one variable.

    Each (point, trial) reprograms with its own RNG substream, so results
    are independent of scheduling. Sweeping t_clk keeps the programming
    calibrated at the configured clock and only changes the evaluation
    window, mimicking a fixed part driven at a different speed.
    """
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(f"unknown sweep variable {variable!r}; "
                          f"choose from {', '.join(SWEEP_VARIABLES)}")
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid is empty")
    if trials < 1:
        raise ConfigError("trials must be at least 1")

    plans = {}

    def plan_for(h, w):
        key = (h, w)
        if key not in plans:
            plans[key] = compile_forest(forest, h, w, reorder_map)
        return plans[key]

    jobs = []
    for i, value in enumerate(grid):
        h = int(value) if variable == "tile_h" else tile_h
        w = int(value) if variable == "tile_w" else tile_w
        nb = int(value) if variable == "n_bits" else n_bits
        sg = float(value) if variable == "sigma" else sigma_rel
        t_eval = float(value) if variable == "t_clk" else None
        plan = plan_for(h, w)
        # Warm the calibration cache before threads share it.
        i_ref = reference_current(config.parasitics.ml_capacitance(w),
                                  config.v_ml0, config.v_sa, config.t_clk)
        build_calibration(config.params, device, i_ref)
        for trial in range(trials):
            jobs.append((i, value, trial, plan, nb, sg, t_eval))

    def run(job):
        i, value, trial, plan, nb, sg, t_eval = job
        arch = program(plan, device, config, forest.feature_bounds,
                       forest.n_classes, nb, sg, seed=[seed, i, trial])
        acc, _ = evaluate_accuracy(arch, X, y, t_clk=t_eval)
        return (i, trial, float(value), acc)

    n_workers = workers if workers else min(32, os.cpu_count() or 1)
    if n_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    rows = tuple((value, trial, acc) for _, trial, value, acc in results)
    summary = []
    for i, value in enumerate(grid):
        accs = np.array([r[3] for r in results if r[0] == i])
        summary.append((float(value), float(np.mean(accs)),
                        float(np.std(accs))))
    return SweepResult(variable=variable, rows=rows, summary=tuple(summary))
