# First-order power, delay, throughput, and energy of the array.
#
# Three power components: always-on divider bias in every placed cell
# (static), data-line drivers charging through the DAC output
# resistance, and match-line pre-charge/discharge each clock. The
# data-line settling time is an Elmore RC estimate down the column, and
# it budgets the clock: r_out is chosen as large as possible (less DL
# drive power) while settling within a tenth of the clock.

from camforest.perf import (
    PerfConfig, choose_r_out, elmore_delay, perf_report, throughput,
)

H = W = 16          # tile geometry
N_TILES = 16
N_ARRAYS = 16       # feature-group arrays evaluated per decision
N_NODES = 1000      # decision nodes in the mapped forest, for J/node

print("Elmore settling of one data line driving 16 cells:")
for r_out in (1e3, 1e4, 1e5):
    tau = elmore_delay(H, r_out, 1.4, 1.9e-15)
    print(f"  r_out = {r_out:8.0f} ohm -> tau = {tau * 1e12:7.2f} ps")

t_clk = 1e-9
r_best = choose_r_out(t_clk, H, 1.4, 1.9e-15)
print(f"\nlargest r_out settling within 0.1 x {t_clk * 1e9:.0f} ns clock: "
      f"{r_best / 1e3:.1f} kohm")

print(f"\nthroughput at t_clk = 1 ns, {N_ARRAYS} arrays, 3 cycles each:")
print(f"  sequential: {throughput(N_ARRAYS, t_clk, False) / 1e6:8.2f} M decisions/s")
print(f"  pipelined:  {throughput(N_ARRAYS, t_clk, True) / 1e6:8.2f} M decisions/s")

base = dict(v_dd=0.8, v_sl_hi=0.8, t_clk=t_clk, r_out=1e4)
for pipelined in (False, True):
    rep = perf_report(H, W, N_TILES, N_ARRAYS, N_NODES,
                      PerfConfig(**base, pipelined=pipelined))
    label = "pipelined" if pipelined else "sequential"
    print(f"\n{label}:")
    print(f"  static {rep.p_static * 1e6:9.3f} uW | DL {rep.p_dl * 1e3:7.3f} mW"
          f" | ML {rep.p_ml * 1e6:8.3f} uW | total {rep.p_total * 1e3:7.3f} mW")
    print(f"  energy {rep.energy_per_decision * 1e12:.3f} pJ/decision "
          f"({rep.energy_per_node_per_decision * 1e15:.3f} fJ/node)")

# Pipelining multiplies power and throughput by the same array count, so
# the energy per decision is unchanged: the knob trades latency and
# peak power, not efficiency.
