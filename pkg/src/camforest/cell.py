"""Behavioral model of one analog CAM cell and its match line.

A cell stores an acceptance range as two memristor conductances. Each
conductance forms a voltage divider with a series transistor driven by the
data line (DL); the divider node steers a discharge path onto the match
line (ML). The lower-threshold side discharges when the input is below the
stored bound, the upper side (through an inverter) when it is above. A row
matches when the ML, pre-charged to ``v_ml0``, is still above the sense
threshold after ``t_clk``.

All current/voltage functions broadcast over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

# Supply rail of the T4-T5 inverter in the fitted transfer curve.
INVERTER_RAIL = 0.8


@dataclass(frozen=True)
class CellParams:
    """Fitted transistor constants and search-line bias of one cell.

    The defaults reproduce a 180 nm cell; ``v_sl_hi``/``v_sl_lo`` set the
    divider rails and bound every divider-node voltage.
    """

    i_d0: float = 50e-9          # subthreshold prefactor, A
    alpha: float = 0.080         # subthreshold slope, V
    i_d0_prime: float = 45e-9    # intermediate-regime prefactor, A
    k1: float = 160e-6           # ohmic transconductance, A/V
    v_th_t1: float = 0.405       # divider transistor threshold, V
    k2: float = 300e-6           # discharge transistor gain, A/V^2
    v_th_t2: float = 0.350       # discharge transistor threshold, V
    beta: float = 50.0           # inverter steepness, 1/V
    gamma: float = -0.4          # inverter midpoint offset, V
    v_sl_hi: float = 1.8         # divider high rail, V
    v_sl_lo: float = 0.0         # divider low rail, V
    v_sub_max: float = 0.3       # below: deep subthreshold fit
    v_ohmic_min: float = 0.5     # at or above: ohmic fit

    def __post_init__(self):
        if self.alpha <= 0 or self.k1 <= 0 or self.k2 <= 0 or self.beta <= 0:
            raise ValueError("cell gain parameters must be positive")
        if self.i_d0 <= 0 or self.i_d0_prime <= 0:
            raise ValueError("subthreshold prefactors must be positive")
        if not self.v_sl_lo < self.v_sl_hi:
            raise ValueError("v_sl_lo must lie below v_sl_hi")
        if not self.v_sub_max < self.v_ohmic_min:
            raise ValueError("regime bounds out of order")


@dataclass(frozen=True)
class Parasitics:
    """Line parasitics of the array wiring."""

    r_wire: float = 1.4          # per-cell wire resistance, ohm
    c_line: float = 1.9e-15      # per-cell line capacitance, F
    c_precharge: float = 40.95e-15  # pre-charge device load, F
    c_sense: float = 50e-15      # sense amplifier load, F

    def __post_init__(self):
        if min(self.r_wire, self.c_line, self.c_precharge, self.c_sense) <= 0:
            raise ValueError("parasitics must be positive")

    def ml_capacitance(self, width: int) -> float:
        """Total ML capacitance of a row of ``width`` cells."""
        return width * self.c_line + self.c_precharge + self.c_sense


def t1_current(v_dl, v_div, params: CellParams):
    """Divider-transistor current for gate drive ``v_dl``.

    Piecewise fit selected by v_dl: subthreshold below ``v_sub_max``,
    intermediate up to ``v_ohmic_min``, ohmic above. The fit carries no
    drain-voltage dependence, so ``v_div`` does not enter the value; it is
    kept in the signature because it is the drain node of the device.
    """
    del v_div
    v_dl = np.asarray(v_dl, dtype=float)
    v_gs = v_dl - params.v_sl_lo
    exp_term = np.exp(v_gs / params.alpha)
    ohmic = params.k1 * np.maximum(v_gs - params.v_th_t1, 0.0)
    return np.where(
        v_dl < params.v_sub_max,
        params.i_d0 * exp_term,
        np.where(v_dl < params.v_ohmic_min, params.i_d0_prime * exp_term, ohmic),
    )


def divider_residual(v_div, v_dl, g_m, params: CellParams):
    """Current imbalance at the divider node: memristor in minus T1 out."""
    return g_m * (params.v_sl_hi - np.asarray(v_div, dtype=float)) - t1_current(
        v_dl, v_div, params
    )


def solve_divider(v_dl, g_m, params: CellParams):
    """Divider-node voltage where the memristor and T1 currents balance.

    Bisection on [v_sl_lo, v_sl_hi]; 60 halvings leave interior roots with
    |residual| far below 1e-12 A. When even v_sl_lo cannot supply the
    transistor current (g_m too small, g_m = 0 included) the node clamps to
    v_sl_lo.
    """
    v_dl = np.asarray(v_dl, dtype=float)
    g_m = np.asarray(g_m, dtype=float)
    shape = np.broadcast_shapes(v_dl.shape, g_m.shape)
    lo = np.full(shape, params.v_sl_lo)
    hi = np.full(shape, params.v_sl_hi)
    clamped = divider_residual(lo, v_dl, g_m, params) <= 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = divider_residual(mid, v_dl, g_m, params) > 0.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.where(clamped, params.v_sl_lo, 0.5 * (lo + hi))


def divider_node_fast(v_dl, g_m, params: CellParams):
    """Closed-form divider node: the fitted T1 law is drain-independent,
    so the balance equation is linear. Agrees with solve_divider to solver
    tolerance; used on batched hot paths."""
    i_t1 = t1_current(v_dl, None, params)
    g_safe = np.maximum(np.asarray(g_m, dtype=float), 1e-30)
    v = params.v_sl_hi - i_t1 / g_safe
    return np.clip(v, params.v_sl_lo, params.v_sl_hi)


def discharge_current(v_gate, params: CellParams):
    """Quadratic discharge-transistor current for gate voltage ``v_gate``."""
    over = np.maximum(np.asarray(v_gate, dtype=float) - params.v_th_t2, 0.0)
    return params.k2 * over * over


def inverter_output(v_div, params: CellParams):
    """Fitted inverter transfer curve driving the upper-side discharge gate."""
    v_div = np.asarray(v_div, dtype=float)
    return INVERTER_RAIL - INVERTER_RAIL / (
        1.0 + np.exp(-params.beta * (v_div + params.gamma))
    )


def lower_branch_current(v_dl, g_m1, params: CellParams):
    """ML discharge current of the lower-threshold side.

    Large when the input is below the stored bound (high divider node opens
    the discharge gate); exactly zero once the node falls below the gate
    threshold. Non-increasing in v_dl, non-decreasing in g_m1 over the
    operating window.
    """
    v_div = solve_divider(v_dl, g_m1, params)
    return discharge_current(v_div, params)


def upper_branch_current(v_dl, g_m2, params: CellParams):
    """ML discharge current of the upper-threshold side.

    The divider node drives the inverter whose output opens the discharge
    gate when the input exceeds the stored bound. Non-decreasing in v_dl,
    non-increasing in g_m2 over the operating window.
    """
    v_div = solve_divider(v_dl, g_m2, params)
    return discharge_current(inverter_output(v_div, params), params)


def row_total_current(g_m1, g_m2, v_dl, params: CellParams, fast: bool = True):
    """Summed discharge current of one row of cells (last axis = cells)."""
    node = divider_node_fast if fast else solve_divider
    v1 = node(v_dl, g_m1, params)
    v2 = node(v_dl, g_m2, params)
    per_cell = discharge_current(v1, params) + discharge_current(
        inverter_output(v2, params), params
    )
    return per_cell.sum(axis=-1)


def ml_voltage_at(g_m1, g_m2, v_dl, t, v_ml0, c_ml_total, params: CellParams):
    """ML voltage after discharging for time ``t``.

    The total row current is treated as constant over the evaluation window,
    so the pre-charged ML ramps down linearly and clamps at 0 V.
    """
    i_total = row_total_current(
        np.asarray(g_m1), np.asarray(g_m2), np.asarray(v_dl), params, fast=False
    )
    return np.maximum(v_ml0 - i_total * t / c_ml_total, 0.0)


def row_matches(g_m1, g_m2, v_dl, t_clk, v_ml0, v_sa_threshold, c_ml_total,
                params: CellParams):
    """True when the row's ML is still above the sense threshold at t_clk."""
    return ml_voltage_at(g_m1, g_m2, v_dl, t_clk, v_ml0, c_ml_total, params) > v_sa_threshold
