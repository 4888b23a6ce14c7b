"""Quadrature grids and dense s-wave discretisations of the integral operators.

All position-space operators act on reduced radial functions ``u(r) = r ψ(r)``
(normalised so that ``∫|u|² dr = ‖ψ‖²``).  On such functions the inverse
Laplacian ``1/p²`` has the kernel ``min(r, r')`` and a general radial
multiplier ``h(p)`` in momentum space has the kernel
``(2/π) ∫ sin(pr) sin(pr') h(p) dp``.

Matrices are stored in the symmetric Nyström form ``√wᵢ k(rᵢ, rⱼ) √wⱼ`` so
that Frobenius norms are Hilbert-Schmidt norms and eigenvalues are those
of the continuum operator.  The kink of ``min(r, r')`` on the diagonal is
handled by a diagonal correction (singularity subtraction) that restores
high-order convergence.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import sici

from .potentials import Potential

__all__ = [
    "GridSpec",
    "RadialGrid",
    "MomentumGrid",
    "KernelMatrix",
    "ResolutionWarning",
    "TailError",
    "kfun",
    "inverse_k",
    "green_matrix",
    "thermal_green",
    "assemble_bs_zero",
    "assemble_bt",
    "assemble_rank_one",
    "assemble_a_kernel",
    "assemble_bt_momentum",
    "assemble_bs_zero_l1",
    "assemble_bt_l1",
    "a_profile",
    "reduced_momentum_kernel",
    "symmetric_partner",
    "dump_csv",
    "m_quadrature",
    "a_kernel_monte_carlo",
    "a_kernel_reduced",
    "source_vectors",
]


class ResolutionWarning(UserWarning):
    """The radial grid is coarse compared to the potential's length scale."""


class TailError(ValueError):
    """The momentum cutoff is too small for the analytic tail model."""


def _gauss_panels(edges, order):
    x, w = leggauss(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * (x + 1) + lo
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre rule on ``[0, r_max]``.

    ``green_correction[i]`` is the exact ``∫₀^{r_max} min(rᵢ, r') dr'`` minus
    its quadrature value; adding it on the diagonal of any matrix built from
    the ``min`` kernel removes the leading error from the kink.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r_max: float
    order: int
    green_correction: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @classmethod
    def build(cls, potential: Potential | None = None, n: int = 160, order: int = 16, r_max: float | None = None):
        if n < order:
            raise ValueError(f"n={n} must be at least the panel order {order}")
        if r_max is None:
            if potential is None:
                raise ValueError("either a potential or r_max is required")
            r_max = potential.support_radius()
        r_max = float(r_max)
        if not r_max > 0:
            raise ValueError("r_max must be positive")
        cuts = [0.0]
        if potential is not None:
            cuts += [b for b in potential.breakpoints if 0 < b < r_max * (1 - 1e-12)]
        cuts.append(r_max)
        seg = np.diff(cuts)
        npan = max(n // order, len(seg))
        # panels per segment proportional to its length, at least one each
        counts = np.maximum(1, np.round(npan * seg / r_max).astype(int))
        while counts.sum() > npan and counts.max() > 1:
            counts[np.argmax(counts)] -= 1
        while counts.sum() < npan:
            counts[np.argmax(seg / counts)] += 1
        # smooth decaying potentials get panels graded quadratically towards the origin
        grade = 2.0 if potential is not None and potential.kind in ("gaussian", "exponential") else 1.0
        edges = np.concatenate(
            [a + (b - a) * np.linspace(0.0, 1.0, c + 1)[:-1] ** grade for a, b, c in zip(cuts[:-1], cuts[1:], counts)]
            + [[r_max]]
        )
        r, w = _gauss_panels(edges, order)
        corr = r * r_max - 0.5 * r * r - np.minimum.outer(r, r) @ w
        if potential is not None and potential.kind in ("gaussian", "exponential"):
            per_length = int(np.count_nonzero(r <= potential.length))
            if per_length < 8:
                warnings.warn(
                    f"only {per_length:.1f} radial nodes per decay length", ResolutionWarning, stacklevel=2
                )
        for a in (r, w, corr):
            a.setflags(write=False)
        return cls(r, w, r_max, order, corr)

    def refined(self, potential: Potential | None = None) -> "RadialGrid":
        return RadialGrid.build(potential, n=2 * self.n, order=self.order, r_max=self.r_max)


def _graded_edges(a: float, b: float, first: float, panel: float) -> np.ndarray:
    """Panel edges on [a, b]: widths doubling from ``first`` up to ``panel``, then uniform."""
    edges = [a]
    h = first
    while edges[-1] + h < b and h < panel:
        edges.append(edges[-1] + h)
        h *= 2
    rest = b - edges[-1]
    m = max(1, math.ceil(rest / panel - 1e-9))
    edges.extend(edges[-1] + rest * np.arange(1, m + 1) / m)
    return np.array(edges)


def _tanh_log_integral(L: float) -> float:
    """``J(L) = ∫₀^L tanh(y)/y dy``; for large L this is ``ln L + ln(4e^γ/π)``."""
    if L < 1e-4:
        return L - L**3 / 9.0
    if L > 20.0:
        # the neglected remainder is ∫_L^∞ (1 - tanh y)/y dy < e^{-2L}/L
        return math.log(L) + math.log(4.0 / math.pi) + np.euler_gamma
    val, _ = integrate.quad(lambda y: math.tanh(y) / y if y > 0 else 1.0, 0.0, L, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def inverse_k(x, T: float) -> np.ndarray:
    """``1/K`` as a function of ``x = p² - μ``: ``tanh(|x|/2T)/|x|``."""
    x = np.abs(np.asarray(x, dtype=float))
    y = x / (2.0 * T)
    small = y < 1e-4
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        big = np.tanh(y) / np.where(small, 1.0, x)
        series = 1.0 / (2.0 * T * (1.0 + np.where(small, y, 0.0) ** 2 / 3.0))
    return np.where(small, series, big)


def kfun(p, T: float, mu: float):
    """The thermal symbol ``K_{T,μ}(p) = |p²-μ| / tanh(|p²-μ|/(2T))``.

    Uses a series branch near the Fermi surface, where ``K → 2T``.
    """
    if not (T > 0 and mu > 0):
        raise ValueError("kfun needs T > 0 and mu > 0")
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("momentum must be non-negative")
    sq = math.sqrt(mu)
    x = (p - sq) * (p + sq)
    out = 1.0 / inverse_k(x, T)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MomentumGrid:
    """Momentum quadrature adapted to the Fermi-surface peak of ``1/K``.

    Layout: Gauss panels on ``[0, √(μ-w)]``, a window ``|p²-μ| ≤ w`` covered by
    panels that are geometric in ``|p²-μ|`` down to ``x_min ~ max(w·10⁻⁷, T/100)``,
    one central node at ``p = √μ`` that carries the whole interval
    ``|p²-μ| < x_min``, then Gauss panels up to ``p_max``.

    ``weights`` integrate smooth functions in ``dp``.  ``thermal`` integrates
    ``f(p)/K(p)``: off-centre it is ``weights/K``, at the central node it is
    the exact logarithmic mass ``J(x_min/2T)/√μ`` of the peak, so arbitrarily
    small temperatures are handled without resolving a width-T spike.
    """

    nodes: np.ndarray
    weights: np.ndarray
    xi: np.ndarray
    thermal: np.ndarray
    central: int
    mu: float
    T: float
    p_max: float
    window: float
    x_min: float

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dweights(self) -> np.ndarray:
        """Weights for ``∫ f(p) (1/K(p) - 1/p²) dp``."""
        return self.thermal - self.weights / self.nodes**2

    @classmethod
    def build(
        cls,
        mu: float,
        T: float,
        p_max: float = 30.0,
        panel: float = 1.0,
        order: int = 16,
        window: float = 0.5,
        depth: float = 1e-7,
        ratio: float = 4.0,
        window_order: int = 12,
    ) -> "MomentumGrid":
        if not (T > 0 and mu > 0):
            raise ValueError("momentum grid needs T > 0 and mu > 0")
        sq = math.sqrt(mu)
        w = window * mu
        x_min = min(max(depth * w, T / 100.0), w / ratio)
        # the tail model needs tanh(|p²-μ|/2T) = 1 beyond the cutoff
        p_max = max(float(p_max), 1.5 * math.sqrt(mu + 80.0 * T), 2.0 * sq)
        nk = max(1, math.ceil(math.log(w / x_min) / math.log(ratio) - 1e-9))
        xb = np.geomspace(x_min, w, nk + 1)
        xr, wr = _gauss_panels(xb, window_order)
        p_lo, p_hi = math.sqrt(mu - w), math.sqrt(mu + w)
        lo_edges = np.linspace(0.0, p_lo, max(1, math.ceil(p_lo / panel)) + 1)
        hi_edges = _graded_edges(p_hi, p_max, min(panel, 0.25 * sq), panel)
        pl, wl = _gauss_panels(lo_edges, order)
        ph, wh = _gauss_panels(hi_edges, order)
        xl = (pl - sq) * (pl + sq)
        xh = (ph - sq) * (ph + sq)
        p_neg = np.sqrt(mu - xr)
        p_pos = np.sqrt(mu + xr)
        central_width = 2.0 * x_min / (math.sqrt(mu + x_min) + math.sqrt(mu - x_min))
        nodes = np.concatenate([pl, p_neg[::-1], [sq], p_pos, ph])
        xi = np.concatenate([xl, -xr[::-1], [0.0], xr, xh])
        weights = np.concatenate([wl, (wr / (2 * p_neg))[::-1], [central_width], wr / (2 * p_pos), wh])
        thermal = weights * inverse_k(xi, T)
        central = pl.size + xr.size
        thermal[central] = 2.0 * _tanh_log_integral(x_min / (2.0 * T)) / (2.0 * sq)
        for a in (nodes, weights, xi, thermal):
            a.setflags(write=False)
        grid = cls(nodes, weights, xi, thermal, central, float(mu), float(T), p_max, w, x_min)
        # neglected part of the μ/p⁴ tail model, relative to the √μ scale of m_μ
        if mu**3 / (5 * p_max**5) > 1e-6 * sq:
            raise TailError(f"p_max={p_max} too small for mu={mu}")
        return grid

    def thermal_with_gap(self, delta: np.ndarray) -> np.ndarray:
        """Weights for ``∫ f(p) tanh(E/2T)/E dp`` with ``E = √((p²-μ)² + Δ²)``."""
        T = self.T
        e = np.sqrt(self.xi**2 + delta**2)
        y = e / (2 * T)
        small = y < 1e-4
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            g = np.where(small, 1.0 / (2 * T * (1 + np.where(small, y, 0.0) ** 2 / 3)),
                         np.tanh(y) / np.where(small, 1.0, e))
        out = self.weights * g
        dc = float(abs(delta[self.central]))
        sq = math.sqrt(self.mu)
        if dc == 0.0:
            out[self.central] = self.thermal[self.central]
        else:
            def f(x):
                ee = math.hypot(x, dc)
                return math.tanh(ee / (2 * T)) / ee

            val, _ = integrate.quad(f, 0.0, self.x_min, epsabs=0.0, epsrel=1e-12, limit=200)
            out[self.central] = 2.0 * val / (2.0 * sq)
        return out


@dataclass(frozen=True)
class GridSpec:
    """Resolution parameters shared by every assembly.

    ``p_max`` drives the position-space thermal kernels (where an analytic
    tail is added), ``q_max``/``q_panel`` the genuinely truncated
    momentum-space matrices (Birman-Schwinger partner and gap equation).
    Momentum panels for position-space kernels have width
    ``p_panel * min(1, 3/r_max)`` so that ``sin(p r)`` stays resolved.
    """

    n_r: int = 160
    r_order: int = 16
    r_max: float | None = None
    p_max: float = 30.0
    p_panel: float = 1.0
    p_order: int = 16
    window: float = 0.5
    depth: float = 1e-7
    q_max: float = 60.0
    q_panel: float = 0.5
    window_order: int = 12

    def __post_init__(self):
        for name in ("n_r", "r_order", "p_order", "window_order"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("p_max", "p_panel", "window", "depth", "q_max", "q_panel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if self.window >= 1:
            raise ValueError("window must be below 1 (fraction of mu)")

    def radial(self, potential: Potential) -> RadialGrid:
        return RadialGrid.build(potential, n=self.n_r, order=self.r_order, r_max=self.r_max)

    def momentum(self, mu: float, T: float, r_max: float) -> MomentumGrid:
        panel = self.p_panel * min(1.0, 3.0 / r_max)
        return MomentumGrid.build(mu, T, p_max=self.p_max, panel=panel, order=self.p_order,
                                  window=self.window, depth=self.depth,
                                  window_order=self.window_order)

    def momentum_partner(self, mu: float, T: float) -> MomentumGrid:
        return MomentumGrid.build(mu, T, p_max=self.q_max, panel=self.q_panel, order=self.p_order,
                                  window=self.window, depth=self.depth,
                                  window_order=self.window_order)

    def refined(self) -> "GridSpec":
        """Twice the nodes in every discretisation."""
        return replace(self, n_r=2 * self.n_r, p_panel=self.p_panel / 2, q_panel=self.q_panel / 2,
                       window_order=2 * self.window_order)


# ---------------------------------------------------------------------------
# analytic tails beyond p_max, where 1/K - 1/p² = μ/p⁴ + μ²/p⁶ + O(μ³/p⁸)
# ---------------------------------------------------------------------------
def _trig_tails(k, P, nmax=6):
    """``(I, S)`` with ``I[n] = ∫_P^∞ cos(kp)/pⁿ dp`` and ``S[n] = ∫_P^∞ sin(kp)/pⁿ dp``."""
    k = np.abs(np.asarray(k, dtype=float))
    kp = k * P
    zero = kp == 0
    si, ci = sici(np.where(zero, 1.0, kp))
    c, s = np.cos(kp), np.sin(kp)
    I = {1: -ci}
    S = {1: np.where(zero, 0.0, 0.5 * np.pi - si)}
    for n in range(2, nmax + 1):
        I[n] = c / ((n - 1) * P ** (n - 1)) - k * S[n - 1] / (n - 1)
        S[n] = s / ((n - 1) * P ** (n - 1)) + k * I[n - 1] / (n - 1)
    for n in range(2, nmax + 1):
        I[n] = np.where(zero, 1.0 / ((n - 1) * P ** (n - 1)), I[n])
        S[n] = np.where(zero, 0.0, S[n])
    return I, S


def _tail_kernel(r, P, mu):
    """``(2/π) ∫_P^∞ sin(pr) sin(pr') (μ/p⁴ + μ²/p⁶) dp`` for all node pairs."""
    Im, _ = _trig_tails(np.subtract.outer(r, r), P)
    Ip, _ = _trig_tails(np.add.outer(r, r), P)
    return (mu / np.pi) * (Im[4] - Ip[4]) + (mu * mu / np.pi) * (Im[6] - Ip[6])


# ---------------------------------------------------------------------------
# kernel matrices
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class KernelMatrix:
    """Dense discretised integral operator in symmetric Nyström form."""

    entries: np.ndarray
    grid: object
    symmetric: bool
    label: str

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("kernel matrix must be square")
        if not np.all(np.isfinite(e)):
            raise ValueError(f"{self.label}: non-finite entries")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def asymmetry(self) -> float:
        e = self.entries
        scale = np.max(np.abs(e))
        return 0.0 if scale == 0 else float(np.max(np.abs(e - e.T)) / scale)

    def hs_norm(self) -> float:
        """Frobenius norm, i.e. the Hilbert-Schmidt norm of the discretised operator."""
        return float(np.linalg.norm(self.entries))

    def __sub__(self, other: "KernelMatrix") -> np.ndarray:
        return self.entries - other.entries


def _root_weights(grid: RadialGrid) -> np.ndarray:
    return np.sqrt(grid.weights)


def green_matrix(grid: RadialGrid) -> np.ndarray:
    """``1/p²`` on reduced radial functions: ``min(r, r')`` with the kink correction."""
    sw = _root_weights(grid)
    g = np.minimum.outer(grid.nodes, grid.nodes) * np.outer(sw, sw)
    g[np.diag_indices_from(g)] += grid.green_correction
    return g


def _sin_matrix(r, p):
    return np.sin(np.multiply.outer(r, p))


def thermal_green(grid: RadialGrid, pgrid: MomentumGrid) -> np.ndarray:
    """``1/K_{T,μ}`` on reduced radial functions, in Nyström form.

    ``min(r, r') + (2/π) ∫ sin(pr) sin(pr') (1/K - 1/p²) dp`` plus the
    analytic ``μ/p⁴`` tail beyond ``p_max``.
    """
    r = grid.nodes
    S = _sin_matrix(r, pgrid.nodes)
    smooth = (2.0 / np.pi) * (S * pgrid.dweights) @ S.T
    smooth += _tail_kernel(r, pgrid.p_max, pgrid.mu)
    smooth = 0.5 * (smooth + smooth.T)
    sw = _root_weights(grid)
    return green_matrix(grid) + smooth * np.outer(sw, sw)


def _sandwich(potential: Potential, grid: RadialGrid, g: np.ndarray, label: str) -> KernelMatrix:
    vp = potential.sqrt_signed(grid.nodes)
    va = potential.sqrt_abs(grid.nodes)
    return KernelMatrix(vp[:, None] * g * va[None, :], grid, potential.sign_definite, label)


def assemble_bs_zero(potential: Potential, grid: RadialGrid) -> KernelMatrix:
    """Zero-energy Birman-Schwinger matrix ``V^{1/2} p⁻² |V|^{1/2}`` (s-wave)."""
    return _sandwich(potential, grid, green_matrix(grid), "bs_zero")


def assemble_bt(potential: Potential, T: float, mu: float, grid: RadialGrid, pgrid: MomentumGrid) -> KernelMatrix:
    """Thermal Birman-Schwinger matrix ``B_T = V^{1/2} K⁻¹ |V|^{1/2}`` (s-wave)."""
    _check_pgrid(pgrid, T, mu)
    return _sandwich(potential, grid, thermal_green(grid, pgrid), "B_T")


def _check_pgrid(pgrid: MomentumGrid, T: float, mu: float):
    if not (math.isclose(pgrid.T, T, rel_tol=1e-14) and math.isclose(pgrid.mu, mu, rel_tol=1e-14)):
        raise ValueError(f"momentum grid built for (T={pgrid.T}, mu={pgrid.mu}), not (T={T}, mu={mu})")


def m_quadrature(pgrid: MomentumGrid) -> float:
    """``(1/2π²) ∫ (1/K - 1/p²) p² dp`` on the grid plus the analytic tail."""
    body = float(np.dot(pgrid.dweights, pgrid.nodes**2))
    P, mu = pgrid.p_max, pgrid.mu
    return (body + mu / P + mu * mu / (3 * P**3)) / (2 * np.pi**2)


def source_vectors(potential: Potential, grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Reduced, weighted images of ``V^{1/2}`` and ``|V|^{1/2}`` (without the √4π)."""
    sw = _root_weights(grid)
    r = grid.nodes
    return r * potential.sqrt_signed(r) * sw, r * potential.sqrt_abs(r) * sw


def assemble_rank_one(potential: Potential, grid: RadialGrid, m: float) -> KernelMatrix:
    """``m |V^{1/2}⟩⟨|V|^{1/2}|`` on reduced functions: ``4π m r V^{1/2}(r) r' |V(r')|^{1/2}``."""
    wp, wm = source_vectors(potential, grid)
    return KernelMatrix(4 * np.pi * m * np.outer(wp, wm), grid, potential.sign_definite, "rank_one")


def _h_profile(s: np.ndarray, pgrid: MomentumGrid, chunk: int = 2048) -> np.ndarray:
    """``H(s) = ∫₀^s t F(t) dt`` for the remainder profile ``F``."""
    s = np.asarray(s, dtype=float).ravel()
    p, dw = pgrid.nodes, pgrid.dweights
    q = float(np.dot(dw, p * p))
    body = np.empty_like(s)
    for lo in range(0, s.size, chunk):
        ss = s[lo:lo + chunk]
        body[lo:lo + chunk] = 2.0 * (np.sin(0.5 * np.multiply.outer(ss, p)) ** 2 @ dw)
    P, mu = pgrid.p_max, pgrid.mu
    I, _ = _trig_tails(s, P)
    tail = mu * (1.0 / (3 * P**3) - I[4] - s * s / (2 * P)) + mu * mu * (1.0 / (5 * P**5) - I[6] - s * s / (6 * P**3))
    return (body - 0.5 * s * s * q + tail) / (2 * np.pi**2)


def a_profile(s, pgrid: MomentumGrid) -> np.ndarray:
    """Radial profile ``F(s) = (1/2π²) ∫ (sin(ps)/(ps) - 1)(1/K - 1/p²) p² dp`` of ``A_{T,μ}``.

    ``F(0) = 0`` exactly.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    p, dw = pgrid.nodes, pgrid.dweights
    ps = np.multiply.outer(s, p)
    sinc = np.sinc(ps / np.pi)
    body = (sinc - 1.0) @ (dw * p * p)
    P, mu = pgrid.p_max, pgrid.mu
    _, S = _trig_tails(s, P)
    small = s * P < 1e-6
    safe = np.where(s == 0, 1.0, s)
    r3 = np.where(small, 1.0 / P, S[3] / safe)
    r5 = np.where(small, 1.0 / (3 * P**3), S[5] / safe)
    tail = mu * (r3 - 1.0 / P) + mu * mu * (r5 - 1.0 / (3 * P**3))
    return (body + tail) / (2 * np.pi**2)


def assemble_a_kernel(potential: Potential, T: float, mu: float, grid: RadialGrid, pgrid: MomentumGrid) -> KernelMatrix:
    """Remainder ``A_{T,μ}`` built from its radial profile.

    The 3D kernel ``V^{1/2}(x) F(|x-y|) |V(y)|^{1/2}`` is reduced to the s-wave by
    averaging over the relative orientation: the reduced kernel is
    ``4π r r' · (1/(2 r r')) ∫_{|r-r'|}^{r+r'} s F(s) ds = 2π [H(r+r') - H(|r-r'|)]``.
    """
    _check_pgrid(pgrid, T, mu)
    r = grid.nodes
    n = r.size
    hp = _h_profile(np.add.outer(r, r), pgrid).reshape(n, n)
    hm = _h_profile(np.abs(np.subtract.outer(r, r)), pgrid).reshape(n, n)
    k = 2 * np.pi * (hp - hm)
    k = 0.5 * (k + k.T)
    sw = _root_weights(grid)
    return _sandwich(potential, grid, k * np.outer(sw, sw), "A_T")


def a_kernel_monte_carlo(r: float, r2: float, pgrid: MomentumGrid, samples: int, rng: np.random.Generator):
    """Monte-Carlo estimate of the reduced ``A`` kernel at ``(r, r2)`` (without V).

    Samples the cosine of the relative angle uniformly and averages
    ``4π r r2 F(|x - y|)``; returns ``(mean, standard error)``.
    """
    t = rng.uniform(-1.0, 1.0, size=samples)
    s = np.sqrt(np.maximum(r * r + r2 * r2 - 2 * r * r2 * t, 0.0))
    vals = 4 * np.pi * r * r2 * a_profile(s, pgrid)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def a_kernel_reduced(r: float, r2: float, pgrid: MomentumGrid) -> float:
    """Deterministic reduced ``A`` kernel ``2π [H(r+r2) - H(|r-r2|)]`` at one pair."""
    h = _h_profile(np.array([r + r2, abs(r - r2)]), pgrid)
    return float(2 * np.pi * (h[0] - h[1]))


def reduced_momentum_kernel(potential: Potential, p, q) -> np.ndarray:
    """s-wave kernel of multiplication by V on reduced momentum functions.

    ``Ṽ(p, q) = (2/π) ∫ sin(pr) V(r) sin(qr) dr = (C(p-q) - C(p+q))/π``
    with ``C`` the cosine transform of V.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if potential.kind == "tabulated":
        # no closed-form transform: factor through a radial quadrature instead
        r, w = potential.quadrature_nodes(float(max(np.max(p, initial=0.0), np.max(q, initial=0.0))))
        wv = w * potential.values(r)
        sp = np.sin(np.multiply.outer(p.ravel(), r))
        sq = sp if q is p else np.sin(np.multiply.outer(q.ravel(), r))
        return ((2.0 / np.pi) * (sp * wv) @ sq.T).reshape(p.shape + q.shape)
    dif = np.subtract.outer(p, q)
    tot = np.add.outer(p, q)
    shape = dif.shape
    c = potential.cosine_transform(np.concatenate([dif.ravel(), tot.ravel()]))
    return (c[: dif.size] - c[dif.size:]).reshape(shape) / np.pi


def assemble_bt_momentum(potential: Potential, T: float, mu: float, pgrid: MomentumGrid) -> KernelMatrix:
    """Self-adjoint partner ``K^{-1/2} V K^{-1/2}`` of ``B_T`` on a momentum grid.

    Same nonzero spectrum as ``B_T`` (``XY`` versus ``YX``); symmetric for
    every sign pattern of V.
    """
    _check_pgrid(pgrid, T, mu)
    st = np.sqrt(pgrid.thermal)
    vt = reduced_momentum_kernel(potential, pgrid.nodes, pgrid.nodes)
    m = st[:, None] * vt * st[None, :]
    return KernelMatrix(0.5 * (m + m.T), pgrid, True, "B_T_momentum")


def symmetric_partner(potential: Potential, grid: RadialGrid, green: np.ndarray, label: str) -> KernelMatrix:
    """``Lᵀ V L`` with ``green = L Lᵀ``: isospectral to ``V^{1/2} green |V|^{1/2}``."""
    L = np.linalg.cholesky(green)
    v = potential.values(grid.nodes)
    m = L.T @ (v[:, None] * L)
    return KernelMatrix(0.5 * (m + m.T), grid, True, label + "_partner")


# ---------------------------------------------------------------------------
# p-wave diagnostics
# ---------------------------------------------------------------------------
def _green_l1(grid: RadialGrid) -> np.ndarray:
    r = grid.nodes
    lo = np.minimum.outer(r, r)
    hi = np.maximum.outer(r, r)
    sw = _root_weights(grid)
    g = lo * lo / (3 * hi)
    corr = r * r / 9 + r * r / 3 * np.log(grid.r_max / r) - g @ grid.weights
    g = g * np.outer(sw, sw)
    g[np.diag_indices_from(g)] += corr
    return g


def assemble_bs_zero_l1(potential: Potential, grid: RadialGrid) -> KernelMatrix:
    """p-wave (ℓ=1) block of ``V^{1/2} p⁻² |V|^{1/2}``; kernel ``r_<²/(3 r_>)``."""
    return _sandwich(potential, grid, _green_l1(grid), "bs_zero_l1")


def assemble_bt_l1(potential: Potential, T: float, mu: float, grid: RadialGrid, pgrid: MomentumGrid) -> KernelMatrix:
    """p-wave block of ``B_T`` (no tail correction; diagnostic use only)."""
    _check_pgrid(pgrid, T, mu)
    r = grid.nodes
    x = np.multiply.outer(r, pgrid.nodes)
    R1 = np.sin(x) / x - np.cos(x)
    smooth = (2.0 / np.pi) * (R1 * pgrid.dweights) @ R1.T
    sw = _root_weights(grid)
    g = _green_l1(grid) + 0.5 * (smooth + smooth.T) * np.outer(sw, sw)
    return _sandwich(potential, grid, g, "B_T_l1")


def dump_csv(matrix: KernelMatrix, path) -> None:
    """Write the entries as plain-text CSV (debugging aid)."""
    np.savetxt(path, matrix.entries, delimiter=",", fmt="%.17e", header=matrix.label)
