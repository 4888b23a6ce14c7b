"""Scattering length by the resolvent formula and by the zero-energy ODE.

Resolvent route: ``a = (1/4π) ⟨|V|^{1/2}, (1 + V^{1/2} p⁻² |V|^{1/2})⁻¹ V^{1/2}⟩``.
On reduced radial functions ``V^{1/2}`` becomes ``√(4π) r V^{1/2}(r)``, so
the ``4π`` cancels and ``a = ⟨r|V|^{1/2}, (1+M)⁻¹ r V^{1/2}⟩``.

ODE route: ``-u'' + V u = 0``, ``u(0) = 0``, ``u'(0) = 1``; outside the
potential ``u(r) = c (r - a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .potentials import Potential
from .radial_ops import (
    RadialGrid,
    assemble_bs_zero,
    green_matrix,
    source_vectors,
    symmetric_partner,
)
from .spectral import NearSingularError, min_eig, solve_shifted

__all__ = [
    "ScatteringResult",
    "BoundStateError",
    "FitError",
    "scattering_length_bs",
    "scattering_length_ode",
    "scattering_length_born",
    "lambda_coupling",
    "appendix_identity_check",
    "zero_energy_solution",
]


class BoundStateError(ValueError):
    """The zero-energy solution has a node: V binds."""


class FitError(ValueError):
    """The asymptotic linear fit is poor; integrate further out."""


@dataclass(frozen=True)
class ScatteringResult:
    a: float
    method: str
    error_estimate: float
    extras: dict = field(default_factory=dict)


def scattering_length_bs(potential: Potential, grid: RadialGrid | None = None) -> ScatteringResult:
    """Scattering length from the Birman-Schwinger resolvent.

    The error estimate is the change against a grid with half the nodes.
    """
    if potential.is_zero:
        return ScatteringResult(0.0, "bs_formula", 0.0)
    grid = grid or RadialGrid.build(potential)

    def on(g):
        m = assemble_bs_zero(potential, g)
        wp, wm = source_vectors(potential, g)
        try:
            x = solve_shifted(m, wp)
        except NearSingularError as exc:
            raise NearSingularError(f"zero-energy resonance: {exc}") from exc
        return float(wm @ x)

    a = on(grid)
    coarse = RadialGrid.build(potential, n=max(grid.order, grid.n // 2), order=grid.order, r_max=grid.r_max)
    return ScatteringResult(a, "bs_formula", abs(a - on(coarse)))


def scattering_length_born(potential: Potential, grid: RadialGrid | None = None, order: int = 1) -> ScatteringResult:
    """Partial sum of the Neumann series ``Σ_k (-M)^k`` inside the resolvent formula.

    ``order=1`` is the Born term ``(1/4π)∫V``.  ``extras["partial_sums"]``
    holds every partial sum up to ``order``.
    """
    grid = grid or RadialGrid.build(potential)
    m = assemble_bs_zero(potential, grid).entries
    wp, wm = source_vectors(potential, grid)
    sums = []
    term = wp.copy()
    acc = 0.0
    for _ in range(order):
        acc += float(wm @ term)
        sums.append(acc)
        term = -(m @ term)
    err = abs(sums[-1] - sums[-2]) if len(sums) > 1 else math.nan
    return ScatteringResult(sums[-1], f"born_series({order})", err, {"partial_sums": np.array(sums)})


def _ode_rhs(potential):
    def rhs(r, y):
        return [y[1], float(potential.values(r)) * y[0]]

    return rhs


def zero_energy_solution(potential: Potential, r_max: float, r_eval=None, rtol: float = 1e-12):
    """Integrate ``u'' = V u`` from the origin; returns ``(r, u, u')`` at ``r_eval``."""
    cuts = [0.0] + [b for b in potential.breakpoints if 0 < b < r_max] + [r_max]
    if r_eval is None:
        r_eval = np.linspace(0.0, r_max, 2001)
    r_eval = np.sort(np.asarray(r_eval, dtype=float))
    y = [0.0, 1.0]
    rs, us, dus = [], [], []
    for i, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        last = i == len(cuts) - 2
        sel = r_eval[(r_eval >= lo) & ((r_eval <= hi) if last else (r_eval < hi))]
        t_eval = np.append(sel, hi) if not sel.size or sel[-1] < hi else sel
        sol = solve_ivp(_ode_rhs(potential), (lo, hi), y, method="DOP853", rtol=rtol, atol=1e-14, t_eval=t_eval)
        if not sol.success:
            raise RuntimeError(sol.message)
        k = sel.size
        rs.append(sol.t[:k])
        us.append(sol.y[0, :k])
        dus.append(sol.y[1, :k])
        y = [sol.y[0, -1], sol.y[1, -1]]
    return np.concatenate(rs), np.concatenate(us), np.concatenate(dus)


def _default_ode_rmax(potential: Potential) -> float:
    return 2.5 * potential.support_radius(1e-14) if not potential.is_zero else 1.0


def scattering_length_ode(potential: Potential, r_max: float | None = None, fit_tol: float = 1e-6) -> ScatteringResult:
    """Scattering length from the asymptote ``u(r) ≈ c (r - a)``.

    The fit is linear least squares on ``[0.6 r_max, r_max]``; its relative
    residual is the error estimate.
    """
    if r_max is None:
        r_max = _default_ode_rmax(potential)
    r, u, du = zero_energy_solution(potential, r_max)
    sel = r >= 0.6 * r_max
    design = np.column_stack([r[sel], np.ones(sel.sum())])
    coef, *_ = np.linalg.lstsq(design, u[sel], rcond=None)
    c, b = coef
    a = -b / c
    fit_res = float(np.max(np.abs(design @ coef - u[sel])) / np.max(np.abs(u[sel])))
    if np.any(u[r > 0] <= 0):
        raise BoundStateError("zero-energy solution has a node: the potential binds")
    if c <= 0:
        # decreasing asymptote: the node lies beyond r_max
        raise BoundStateError("zero-energy solution turns over: the potential binds")
    if fit_res > fit_tol:
        raise FitError(f"asymptotic fit residual {fit_res:.2e} above {fit_tol:.0e}; increase r_max")
    err = fit_res * max(abs(a), r_max)
    return ScatteringResult(float(a), "ode_asymptote", err, {"c": float(c), "a": float(a), "r_max": r_max})


def lambda_coupling(potential: Potential, grid: RadialGrid | None = None) -> float:
    """Coupling margin λ, with ``-1/λ`` the smallest eigenvalue of ``V^{1/2} p⁻² |V|^{1/2}``.

    Returns ``inf`` when that eigenvalue is not negative.
    """
    if potential.is_zero:
        return math.inf
    grid = grid or RadialGrid.build(potential)
    if potential.sign_definite:
        report = min_eig(assemble_bs_zero(potential, grid))
    else:
        report = min_eig(symmetric_partner(potential, grid, green_matrix(grid), "bs_zero"))
    if report.min_eig >= 0:
        return math.inf
    return -1.0 / report.min_eig


def appendix_identity_check(potential: Potential, r_max: float | None = None) -> float:
    """Relative gap between ``∫ V ψ`` and ``4π a`` from one ODE solution.

    With ``ψ = u/(c r)`` normalised to 1 at infinity,
    ``∫ V ψ d³x = (4π/c) ∫ V u r dr``.
    """
    if potential.is_zero:
        return 0.0
    if r_max is None:
        r_max = _default_ode_rmax(potential)
    res = scattering_length_ode(potential, r_max)
    c, a = res.extras["c"], res.a
    from numpy.polynomial.legendre import leggauss

    cuts = [0.0] + [b for b in potential.breakpoints if 0 < b < r_max] + [r_max]
    x, w = leggauss(40)
    edges = np.concatenate([np.linspace(lo, hi, 41)[:-1] for lo, hi in zip(cuts[:-1], cuts[1:])] + [[r_max]])
    nodes = (0.5 * np.diff(edges)[:, None] * (x + 1) + edges[:-1, None]).ravel()
    weights = (0.5 * np.diff(edges)[:, None] * w).ravel()
    order = np.argsort(nodes)
    nodes, weights = nodes[order], weights[order]
    _, u, _ = zero_energy_solution(potential, r_max, r_eval=nodes)
    integral = 4 * np.pi / c * float(np.sum(weights * potential.values(nodes) * u * nodes))
    return abs(integral - 4 * np.pi * a) / max(abs(4 * np.pi * a), np.finfo(float).eps)
