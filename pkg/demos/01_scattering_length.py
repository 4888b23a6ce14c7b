"""Scattering length of a few short-range potentials, computed two ways.

The resolvent formula works on a Nyström discretisation of
``V^{1/2} p⁻² |V|^{1/2}``; the ODE route integrates the zero-energy radial
equation and reads ``a`` off the linear asymptote.  For the unit square
well the exact answer is ``1 - tan(1)``.
"""
import math

from bcs_tc.potentials import Potential
from bcs_tc.scattering import lambda_coupling, scattering_length_bs, scattering_length_ode

zoo = {
    "square_well(1, 1)": Potential.square_well(1.0, 1.0),
    "square_well(2, 1)": Potential.square_well(2.0, 1.0),
    "gaussian(1, 1)": Potential.gaussian(1.0, 1.0),
    "exponential(0.5, 1)": Potential.exponential(0.5, 1.0),
}

print(f"exact a for the unit well: {1 - math.tan(1.0):.12f}")
print(f"{'potential':22s} {'lambda':>10s} {'a (resolvent)':>16s} {'a (ode)':>16s} {'gap':>9s}")
for name, pot in zoo.items():
    a_bs = scattering_length_bs(pot).a
    a_ode = scattering_length_ode(pot).a
    print(f"{name:22s} {lambda_coupling(pot):10.5f} {a_bs:16.10f} {a_ode:16.10f} {abs(a_bs - a_ode):9.1e}")
