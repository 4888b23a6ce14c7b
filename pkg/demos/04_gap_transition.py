"""The BCS order parameter across the transition.

The nonlinear gap equation has a nontrivial solution below T_c and only
Δ = 0 above.  Each scan point starts from the constant profile 0.1μ.
Expect about fifteen seconds of run time.
"""
from bcs_tc.critical_temp import tc_solve
from bcs_tc.gap_equation import transition_scan
from bcs_tc.potentials import Potential

well, mu = Potential.square_well(1.0, 1.0), 0.1
tc = tc_solve(well, mu).tc
print(f"T_c from the Birman-Schwinger criterion: {tc:.8e}")
for row in transition_scan(well, mu, [f * tc for f in (0.6, 0.8, 0.95, 1.05, 1.25)]):
    print(f"T/T_c = {row.T / tc:5.2f}  max|Δ|/T_c = {row.max_delta / tc:8.4f}  "
          f"{row.classification:10s} ({row.iterations} iterations)")
