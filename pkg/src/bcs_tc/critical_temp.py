"""Critical temperature, the scalar m_μ(T), and the low-density limit checks.

The critical temperature is the largest T at which ``B_T`` has eigenvalue
-1.  Since ``1/K_{T,μ}`` decreases pointwise in T, the smallest eigenvalue
of ``B_T`` is monotone and T_c is found by bisection in ``log T``.  The
a-priori bracket is ``T_c ≤ μ / (2(λ-1))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .potentials import Potential
from .radial_ops import (
    GridSpec,
    RadialGrid,
    assemble_a_kernel,
    assemble_bs_zero,
    assemble_bt,
    assemble_rank_one,
    m_quadrature,
    source_vectors,
)
from .scattering import lambda_coupling, scattering_length_bs
from .spectral import bt_min_eig, solve_shifted

__all__ = [
    "EULER_GAMMA",
    "TARGET_CONSTANT",
    "TC_PREFACTOR",
    "MmuValue",
    "TcResult",
    "SweepRow",
    "Diagnostic",
    "BracketError",
    "m_mu",
    "m_mu_asymptotic",
    "tc_solve",
    "tc_asymptotic",
    "hs_norm_a",
    "lemma2_diagnostic",
    "decomposition_residual",
    "sweep",
]

EULER_GAMMA = float(np.euler_gamma)
#: limit of ln(μ/T_c) + π/(2√μ a) as μ → 0
TARGET_CONSTANT = 2.0 - EULER_GAMMA - math.log(8.0 / math.pi)
#: T_c ≈ TC_PREFACTOR · μ · exp(π/(2√μ a))
TC_PREFACTOR = 8.0 / math.pi * math.exp(EULER_GAMMA - 2.0)

#: below μ·T_FLOOR_RATIO the critical temperature is reported as 0
T_FLOOR_RATIO = 1e-280


class BracketError(RuntimeError):
    """The a-priori upper bound on T_c failed the positivity test."""


@dataclass(frozen=True)
class MmuValue:
    value: float
    mu: float
    T: float
    quadrature_error: float


@dataclass(frozen=True)
class TcResult:
    tc: float
    bracket: tuple[float, float]
    eig_residual: float
    iterations: int
    upper_bound_used: float


@dataclass(frozen=True)
class SweepRow:
    mu: float
    tc: float = math.nan
    a: float = math.nan
    m_at_tc: float = math.nan
    m_limit: float = math.nan
    asymptotic_tc: float = math.nan
    deviation: float = math.nan
    eig_residual: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class Diagnostic:
    """A raw quantity and its normalised ratio (which should tend to zero)."""

    value: float
    ratio: float
    m: float = field(default=math.nan)


def m_mu(T: float, mu: float, grids: GridSpec | None = None, r_max: float = 1.0) -> MmuValue:
    """``m_μ(T) = (1/2π²) ∫₀^∞ (1/K_{T,μ}(p) - 1/p²) p² dp``.

    ``r_max`` only sets the panel width of the momentum grid; the error
    estimate is the change against a grid with twice the nodes.
    """
    if not (T > 0 and mu > 0):
        raise ValueError("m_mu needs T > 0 and mu > 0")
    grids = grids or GridSpec()
    value = m_quadrature(grids.momentum(mu, T, r_max))
    fine = m_quadrature(grids.refined().momentum(mu, T, r_max))
    return MmuValue(value, mu, T, abs(fine - value))


def m_mu_asymptotic(T: float, mu: float) -> float:
    """Leading small-T/μ form ``(√μ/2π²)(ln(μ/T) + γ - 2 + ln(8/π))``."""
    if not (T > 0 and mu > 0):
        raise ValueError("m_mu_asymptotic needs T > 0 and mu > 0")
    return math.sqrt(mu) / (2 * math.pi**2) * (math.log(mu / T) - TARGET_CONSTANT)


def tc_asymptotic(mu: float, a: float) -> float:
    """``μ (8/π) e^{γ-2} e^{π/(2√μ a)}``; underflows to 0 as a → 0⁻."""
    if not a < 0:
        raise ValueError("the asymptotic formula needs a negative scattering length")
    if not mu > 0:
        raise ValueError("mu must be positive")
    return mu * TC_PREFACTOR * math.exp(math.pi / (2 * math.sqrt(mu) * a))


def tc_solve(
    potential: Potential,
    mu: float,
    grids: GridSpec | None = None,
    eig_tol: float = 1e-9,
    log_tol: float = 1e-12,
    max_iter: int = 200,
    lam: float | None = None,
    grid: RadialGrid | None = None,
    method: str = "position",
) -> TcResult:
    """Critical temperature from the Birman-Schwinger criterion.

    Bisection in ``log T`` on ``[μ·10⁻²⁸⁰, μ/(2(λ-1))]`` for the temperature
    where the smallest eigenvalue of ``B_T`` equals -1.  Stops once a
    midpoint has ``|min eig + 1| < eig_tol`` or the bracket is narrower
    than ``log_tol`` in ``log T``.  A zero result means no instability
    above the floor.  ``method`` selects the discretisation of ``B_T``
    (see :func:`~bcs_tc.spectral.bt_min_eig`).
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    grids = grids or GridSpec()
    t_floor = mu * T_FLOOR_RATIO
    if potential.is_zero:
        return TcResult(0.0, (0.0, t_floor), math.nan, 0, 0.0)
    grid = grid if grid is not None else grids.radial(potential)
    if lam is None:
        lam = lambda_coupling(potential, grid)
    if not lam > 1:
        raise ValueError(f"coupling margin λ={lam} ≤ 1: the potential binds")
    upper = mu / (2 * (lam - 1)) if math.isfinite(lam) else 0.0

    def g(T):
        return bt_min_eig(potential, T, mu, grids, grid, method).min_eig + 1.0

    if upper <= t_floor:
        return TcResult(0.0, (0.0, t_floor), math.nan, 0, upper)
    g_hi = g(upper)
    if g_hi < 0:
        raise BracketError(f"positivity fails at the upper bound T={upper:.6g}")
    g_lo = g(t_floor)
    if g_lo >= 0:
        return TcResult(0.0, (0.0, t_floor), abs(g_lo), 0, upper)
    lo, hi = math.log(t_floor), math.log(upper)
    best = (abs(g_hi), hi)
    it = 0
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        val = g(math.exp(mid))
        if abs(val) < best[0]:
            best = (abs(val), mid)
        if val < 0:
            lo = mid
        else:
            hi = mid
        if abs(val) < eig_tol or hi - lo < log_tol:
            break
    return TcResult(math.exp(best[1]), (math.exp(lo), math.exp(hi)), best[0], it, upper)


def hs_norm_a(potential: Potential, T: float, mu: float, grids: GridSpec | None = None,
              grid: RadialGrid | None = None) -> Diagnostic:
    """Hilbert-Schmidt norm of the s-wave block of ``A_{T,μ}`` and ``‖A‖₂ / (μ^{1/4} m_μ(T))``."""
    grids = grids or GridSpec()
    grid = grid if grid is not None else grids.radial(potential)
    pgrid = grids.momentum(mu, T, grid.r_max)
    m = m_quadrature(pgrid)
    if potential.is_zero:
        return Diagnostic(0.0, 0.0, m)
    norm = assemble_a_kernel(potential, T, mu, grid, pgrid).hs_norm()
    return Diagnostic(norm, norm / (mu**0.25 * m), m)


def lemma2_diagnostic(potential: Potential, T: float, mu: float, grids: GridSpec | None = None,
                      grid: RadialGrid | None = None) -> Diagnostic:
    """``⟨f|sgn(V) A_{T,μ}|f⟩`` with ``f = (1 + V^{1/2}p⁻²|V|^{1/2})⁻¹ V^{1/2}``, and its ratio to ``√μ m_μ(T)``."""
    grids = grids or GridSpec()
    grid = grid if grid is not None else grids.radial(potential)
    pgrid = grids.momentum(mu, T, grid.r_max)
    m = m_quadrature(pgrid)
    if potential.is_zero:
        return Diagnostic(0.0, 0.0, m)
    wp, _ = source_vectors(potential, grid)
    f = solve_shifted(assemble_bs_zero(potential, grid), wp)
    a = assemble_a_kernel(potential, T, mu, grid, pgrid).entries
    sgn = np.sign(potential.values(grid.nodes))
    # the √(4π) of each reduced f gives the overall 4π
    form = 4 * np.pi * float(f @ (sgn * (a @ f)))
    return Diagnostic(form, abs(form) / (math.sqrt(mu) * m), m)


def decomposition_residual(potential: Potential, T: float, mu: float, grids: GridSpec | None = None,
                           grid: RadialGrid | None = None) -> float:
    """``‖B_T - (B_0 + m_μ(T)|V^{1/2}⟩⟨|V|^{1/2}| + A_{T,μ})‖_F / ‖B_T‖_F``."""
    if potential.is_zero:
        return 0.0
    grids = grids or GridSpec()
    grid = grid if grid is not None else grids.radial(potential)
    pgrid = grids.momentum(mu, T, grid.r_max)
    bt = assemble_bt(potential, T, mu, grid, pgrid).entries
    parts = (
        assemble_bs_zero(potential, grid).entries
        + assemble_rank_one(potential, grid, m_quadrature(pgrid)).entries
        + assemble_a_kernel(potential, T, mu, grid, pgrid).entries
    )
    return float(np.linalg.norm(bt - parts) / np.linalg.norm(bt))


def _sweep_row(potential, mu, grids, grid, lam, a) -> SweepRow:
    try:
        res = tc_solve(potential, mu, grids, lam=lam, grid=grid)
        if res.tc <= 0:
            return SweepRow(mu, tc=0.0, a=a, m_limit=-1 / (4 * math.pi * a), error="tc below floor")
        m_tc = m_quadrature(grids.momentum(mu, res.tc, grid.r_max))
        dev = math.log(mu / res.tc) + math.pi / (2 * math.sqrt(mu) * a) - TARGET_CONSTANT
        return SweepRow(
            mu=mu,
            tc=res.tc,
            a=a,
            m_at_tc=m_tc,
            m_limit=-1.0 / (4 * math.pi * a),
            asymptotic_tc=tc_asymptotic(mu, a),
            deviation=dev,
            eig_residual=res.eig_residual,
        )
    except Exception as exc:  # recorded in-row, the sweep goes on
        return SweepRow(mu, a=a, error=f"{type(exc).__name__}: {exc}")


def sweep(potential: Potential, mu_list, grids: GridSpec | None = None, threads: int = 1) -> list[SweepRow]:
    """Solve T_c along ``mu_list`` and tabulate the deviation from the low-density limit.

    ``deviation = ln(μ/T_c) + π/(2√μ a) - (2 - γ - ln(8/π))`` uses the
    resolvent scattering length.  Rows come back in the order of
    ``mu_list`` whatever the thread count.
    """
    grids = grids or GridSpec()
    mus = [float(m) for m in mu_list]
    if any(not m > 0 for m in mus):
        raise ValueError("all mu must be positive")
    grid = grids.radial(potential)
    lam = lambda_coupling(potential, grid)
    if not lam > 1:
        raise ValueError(f"coupling margin λ={lam} ≤ 1: the potential binds")
    a = scattering_length_bs(potential, grid).a
    if not a < 0:
        raise ValueError(f"scattering length a={a} is not negative")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda m: _sweep_row(potential, m, grids, grid, lam, a), mus))
    return [_sweep_row(potential, m, grids, grid, lam, a) for m in mus]
