"""The scalar m_μ(T) against its small-temperature asymptote.

At fixed T/μ the ratio m_μ(T)/√μ does not depend on μ, so the
interesting direction is T/μ → 0, where the relative gap to the
logarithmic asymptote shrinks.
"""
from bcs_tc.critical_temp import m_mu, m_mu_asymptotic

mu = 1e-2
print(f"{'T/mu':>8s} {'m_mu(T)':>14s} {'asymptote':>14s} {'rel. gap':>10s}")
for ratio in (1e-1, 1e-2, 1e-3, 1e-4):
    m = m_mu(ratio * mu, mu)
    asym = m_mu_asymptotic(ratio * mu, mu)
    print(f"{ratio:8.0e} {m.value:14.8e} {asym:14.8e} {abs(m.value - asym) / asym:10.2e}")
