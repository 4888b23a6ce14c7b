"""Low-density BCS critical temperature via the Birman-Schwinger criterion."""
from .potentials import AssumptionReport, Potential, load_tabulated, moments, validate_assumptions
from .radial_ops import GridSpec, MomentumGrid, RadialGrid, kfun
from .scattering import lambda_coupling, scattering_length_bs, scattering_length_ode

__version__ = "0.1.0"
