"""Critical temperature of the unit square well as the density drops.

T_c is where the smallest eigenvalue of B_T crosses -1.  The deviation
``ln(μ/T_c) + π/(2√μ a)`` should approach ``2 - γ - ln(8/π)``, so the
printed deviation (the difference) tends to zero.
"""
from bcs_tc.critical_temp import TARGET_CONSTANT, sweep
from bcs_tc.potentials import Potential

well = Potential.square_well(1.0, 1.0)
print(f"target constant {TARGET_CONSTANT:.10f}")
print(f"{'mu':>8s} {'T_c':>14s} {'asymptotic':>14s} {'deviation':>11s}")
for row in sweep(well, [1e-1, 1e-2, 1e-3, 1e-4]):
    if not row.ok:
        print(f"{row.mu:8.0e}  failed: {row.error}")
        continue
    print(f"{row.mu:8.0e} {row.tc:14.8e} {row.asymptotic_tc:14.8e} {row.deviation:+11.5f}")
