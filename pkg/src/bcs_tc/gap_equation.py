"""The nonlinear BCS gap equation for radial potentials.

On s-wave (radial) profiles the gap equation

    Δ(p) = -(2π)^{-3/2} ∫ V̂(p-q) Δ(q) tanh(E(q)/2T)/E(q) dq,
    E(q) = √((q²-μ)² + Δ(q)²),

reduces, for the reduced profile ``pΔ(p)``, to

    pΔ(p) = -∫₀^∞ Ṽ(p, q) qΔ(q) tanh(E(q)/2T)/E(q) dq

with the same kernel ``Ṽ(p,q) = (2/π)∫ sin(pr) V(r) sin(qr) dr`` that
appears in the momentum-space Birman-Schwinger partner.  Linearising at
``Δ = 0`` gives ``(K_{T,μ} + V)α = 0``, so a nontrivial solution exists
exactly when ``T < T_c``.  Δ is taken real.
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .potentials import Potential
from .radial_ops import GridSpec, KernelMatrix, MomentumGrid, reduced_momentum_kernel

__all__ = [
    "Classification",
    "GapSolution",
    "GapConvergenceError",
    "ScanRow",
    "MonotonicityWarning",
    "vhat",
    "vhat_swave",
    "gap_iterate",
    "linearisation_eigenvalue",
    "transition_scan",
    "last_nontrivial",
    "CLASSIFY_RATIO",
]

#: nontrivial iff max|Δ| exceeds this multiple of μ
CLASSIFY_RATIO = 1e-10


class Classification(str, enum.Enum):
    TRIVIAL = "trivial"
    NONTRIVIAL = "nontrivial"


class GapConvergenceError(RuntimeError):
    """The damped iteration kept oscillating at the damping floor."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


class MonotonicityWarning(UserWarning):
    """The order parameter increased with T along a scan."""


@dataclass(frozen=True)
class GapSolution:
    """A (possibly unconverged) fixed point of the gap map on a momentum grid.

    ``delta`` and ``dispersion`` are sampled at ``grid.nodes``;
    ``residual`` is the sup-norm of ``RHS(Δ) - Δ``.
    """

    delta: np.ndarray
    dispersion: np.ndarray
    residual: float
    classification: Classification
    iterations: int
    converged: bool
    T: float
    mu: float
    grid: MomentumGrid = field(repr=False)

    @property
    def max_delta(self) -> float:
        return float(np.max(np.abs(self.delta))) if self.delta.size else 0.0


@dataclass(frozen=True)
class ScanRow:
    T: float
    max_delta: float = math.nan
    residual: float = math.nan
    iterations: int = 0
    classification: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def vhat(potential: Potential, k) -> np.ndarray:
    """Fourier transform ``V̂(k) = (2π)^{-3/2} ∫ V(x) e^{-ikx} dx`` of a radial V.

    For radial V this is ``√(2/π) (1/k) ∫₀^∞ V(r) r sin(kr) dr``, with the
    limit ``√(2/π) ∫ V r² dr`` at ``k = 0``.
    """
    k = np.abs(np.asarray(k, dtype=float))
    if potential.is_zero:
        return np.zeros_like(k)
    safe = np.where(k == 0, 1.0, k)
    out = math.sqrt(2 / math.pi) * potential.sine_moment(safe) / safe
    if np.any(k == 0):
        # V̂(0) by a small-k limit of the same transform
        h = 1e-4 / max(potential.length, 1e-300)
        v0 = math.sqrt(2 / math.pi) * float(potential.sine_moment(np.array([h]))[0]) / h
        out = np.where(k == 0, v0, out)
    return out


def vhat_swave(potential: Potential, pgrid: MomentumGrid) -> KernelMatrix:
    """ℓ=0 angular average of ``V̂(p-q)`` on the grid nodes.

    Uses ``Ṽ(p, q) = √(2/π) p q ⟨V̂(p-q)⟩_angle``.
    """
    p = pgrid.nodes
    vt = reduced_momentum_kernel(potential, p, p)
    avg = vt / (math.sqrt(2 / math.pi) * np.outer(p, p))
    return KernelMatrix(0.5 * (avg + avg.T), pgrid, True, "vhat_swave")


def _gap_map(vt: np.ndarray, grid: MomentumGrid):
    p = grid.nodes
    op = vt * (p[None, :] / p[:, None])

    def rhs(delta: np.ndarray) -> np.ndarray:
        if not np.any(delta):
            return np.zeros_like(delta)
        return -(op @ (delta * grid.thermal_with_gap(delta)))

    return rhs


def _classify(max_delta: float, mu: float) -> Classification:
    return Classification.NONTRIVIAL if max_delta > CLASSIFY_RATIO * mu else Classification.TRIVIAL


def gap_iterate(
    potential: Potential,
    T: float,
    mu: float,
    grids: GridSpec | None = None,
    delta0=0.0,
    tol: float = 1e-8,
    max_iter: int = 20000,
    grid: MomentumGrid | None = None,
) -> GapSolution:
    """Damped fixed-point iteration ``Δ ← (1-β)Δ + β RHS(Δ)``.

    β starts at 1, halves whenever the defect grows and never drops below
    1/64.  Converged means ``defect ≤ tol·max|Δ|`` or ``defect ≤ 1e-14·μ``.
    ``delta0`` is a scalar or a profile on the grid nodes.
    """
    if not (T > 0 and mu > 0):
        raise ValueError("gap_iterate needs T > 0 and mu > 0")
    grids = grids or GridSpec()
    grid = grid if grid is not None else grids.momentum_partner(mu, T)
    delta = np.broadcast_to(np.asarray(delta0, dtype=float), grid.nodes.shape).copy()
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta0 must be finite")
    rhs = _gap_map(reduced_momentum_kernel(potential, grid.nodes, grid.nodes), grid)

    beta, floor = 1.0, 1.0 / 64
    atol = 1e-14 * mu
    history: list[float] = []
    prev = math.inf
    rising_at_floor = 0
    converged = False
    it = 0
    new = rhs(delta)
    while it < max_iter:
        it += 1
        defect = float(np.max(np.abs(new - delta)))
        history.append(defect)
        scale = float(np.max(np.abs(delta)))
        if defect <= max(tol * scale, atol):
            converged = True
            delta = new if defect == 0.0 else delta
            break
        if defect > prev:
            if beta > floor:
                beta = max(beta / 2, floor)
            else:
                rising_at_floor += 1
                if rising_at_floor > 200:
                    raise GapConvergenceError("gap iteration oscillates at the damping floor", history)
        else:
            rising_at_floor = 0
        prev = defect
        delta = (1 - beta) * delta + beta * new
        new = rhs(delta)
    residual = float(np.max(np.abs(rhs(delta) - delta)))
    disp = np.sqrt(grid.xi**2 + delta**2)
    return GapSolution(
        delta=delta,
        dispersion=disp,
        residual=residual,
        classification=_classify(float(np.max(np.abs(delta))), mu),
        iterations=it,
        converged=converged,
        T=float(T),
        mu=float(mu),
        grid=grid,
    )


def linearisation_eigenvalue(potential: Potential, solution: GapSolution) -> float:
    """Dominant eigenvalue of the Jacobian of the gap map at ``solution.delta``.

    The Jacobian is ``-P⁻¹ Ṽ P D`` with ``P = diag(p)`` and
    ``D = diag(w ∂(Δ g(E))/∂Δ)``; D is positive, so it is similar to the
    symmetric ``-D^{1/2} Ṽ D^{1/2}``.  The central node keeps its lumped
    weight.
    """
    grid, delta, T = solution.grid, solution.delta, solution.T
    e = solution.dispersion
    y = e / (2 * T)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = np.where(y < 1e-4, 1.0 / (2 * T), np.tanh(y) / np.where(y < 1e-4, 1.0, e))
        # d(Δ g(E))/dΔ = g + (Δ²/E) g'(E), g'(E) = (sech²(y)/(2T) - g)/E
        sech2 = 1.0 / np.cosh(np.minimum(y, 350.0)) ** 2
        dg = np.where(y < 1e-4, 0.0, (sech2 / (2 * T) - g) / np.where(y < 1e-4, 1.0, e))
        slope = g + np.where(y < 1e-4, 0.0, delta**2 / np.where(y < 1e-4, 1.0, e)) * dg
    d = grid.weights * slope
    d[grid.central] = grid.thermal_with_gap(delta)[grid.central]
    sd = np.sqrt(np.maximum(d, 0.0))
    vt = reduced_momentum_kernel(potential, grid.nodes, grid.nodes)
    m = -(sd[:, None] * vt * sd[None, :])
    eig = scipy.linalg.eigh(0.5 * (m + m.T), eigvals_only=True)
    return float(eig[-1])


def _scan_point(potential, T, mu, grids, delta0, tol) -> ScanRow:
    try:
        sol = gap_iterate(potential, T, mu, grids, delta0, tol=tol)
        err = "" if sol.converged else f"no convergence after {sol.iterations} iterations"
        return ScanRow(T, sol.max_delta, sol.residual, sol.iterations, sol.classification.value, err)
    except Exception as exc:  # recorded in-row, the scan goes on
        return ScanRow(T, error=f"{type(exc).__name__}: {exc}")


def transition_scan(
    potential: Potential,
    mu: float,
    t_list,
    grids: GridSpec | None = None,
    delta0: float | None = None,
    threads: int = 1,
    tol: float = 1e-8,
) -> list[ScanRow]:
    """Order parameter ``max|Δ|`` along ``t_list`` (returned sorted by T).

    Each point starts from the constant profile ``delta0`` (default 0.1μ).
    A rise of ``max|Δ|`` with T only triggers a :class:`MonotonicityWarning`.
    """
    grids = grids or GridSpec()
    temps = sorted(float(t) for t in t_list)
    if any(not t > 0 for t in temps):
        raise ValueError("all temperatures must be positive")
    start = 0.1 * mu if delta0 is None else float(delta0)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: _scan_point(potential, t, mu, grids, start, tol), temps))
    else:
        rows = [_scan_point(potential, t, mu, grids, start, tol) for t in temps]
    vals = [r.max_delta for r in rows if r.ok]
    if any(b > a * (1 + 1e-6) + CLASSIFY_RATIO * mu for a, b in zip(vals, vals[1:])):
        warnings.warn("max|Δ| is not nonincreasing in T along the scan", MonotonicityWarning, stacklevel=2)
    return rows


def last_nontrivial(rows: list[ScanRow]) -> float | None:
    """Largest scanned T with a nontrivial solution, or None."""
    hits = [r.T for r in rows if r.ok and r.classification == Classification.NONTRIVIAL.value]
    return max(hits) if hits else None
