"""Radial pair potentials.

Units are fixed throughout the package at hbar = 2m = 1, so the kinetic
operator is exactly ``p**2`` and energies carry units of inverse length
squared.  A potential is a function of ``r = |x|`` only.

The sign convention for the built-in kinds is that a positive ``depth``
means an attractive (negative) potential, e.g. ``square_well(1, 1)`` is
``V(r) = -1`` for ``r < 1``.  No factor of two is applied anywhere: the
scattering length computed by this package is the one of the zero-energy
equation ``-Δψ + Vψ = 0`` for the potential exactly as given.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

__all__ = [
    "Potential",
    "AssumptionReport",
    "IntegrabilityError",
    "moments",
    "validate_assumptions",
    "load_tabulated",
]

KINDS = ("square_well", "gaussian", "exponential", "tabulated")


class IntegrabilityError(ValueError):
    """Raised when a moment integral does not converge."""


@dataclass(frozen=True)
class Potential:
    """Immutable radial potential ``r -> V(r)``.

    Build instances through the named constructors
    (:meth:`square_well`, :meth:`gaussian`, :meth:`exponential`,
    :meth:`tabulated`) rather than calling the class directly.
    """

    kind: str
    depth: float = 0.0
    length: float = 1.0
    r_samples: np.ndarray | None = field(default=None, repr=False)
    v_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            r = np.asarray(self.r_samples, dtype=float)
            v = np.asarray(self.v_samples, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValueError("tabulated potential needs matching 1-D arrays of >= 2 samples")
            if np.any(r <= 0):
                raise ValueError("tabulated radii must be positive")
            if np.any(np.diff(r) <= 0):
                raise ValueError("tabulated radii must be strictly increasing")
            if not np.all(np.isfinite(v)):
                raise ValueError("tabulated values must be finite")
            r.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "r_samples", r)
            object.__setattr__(self, "v_samples", v)
            object.__setattr__(self, "_interp", PchipInterpolator(r, v, extrapolate=False))
        elif not self.length > 0:
            raise ValueError("length scale must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def square_well(cls, depth: float, radius: float) -> "Potential":
        return cls("square_well", float(depth), float(radius))

    @classmethod
    def gaussian(cls, depth: float, width: float) -> "Potential":
        """``V(r) = -depth * exp(-(r/width)**2)``."""
        return cls("gaussian", float(depth), float(width))

    @classmethod
    def exponential(cls, depth: float, range: float) -> "Potential":
        """``V(r) = -depth * exp(-r/range)``."""
        return cls("exponential", float(depth), float(range))

    @classmethod
    def tabulated(cls, r, v) -> "Potential":
        """Monotone piecewise-cubic (PCHIP) interpolation of samples.

        Below the first sample the first value is used; beyond the last
        sample the potential is zero.
        """
        return cls("tabulated", r_samples=np.array(r, dtype=float), v_samples=np.array(v, dtype=float))

    @classmethod
    def zero(cls) -> "Potential":
        return cls.square_well(0.0, 1.0)

    # -- evaluation -------------------------------------------------------
    def values(self, r) -> np.ndarray:
        """Vectorised ``V(r)`` for ``r >= 0`` (no domain check)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "square_well":
            return np.where(r < self.length, -self.depth, 0.0)
        if self.kind == "gaussian":
            return -self.depth * np.exp(-((r / self.length) ** 2))
        if self.kind == "exponential":
            return -self.depth * np.exp(-r / self.length)
        rs, vs = self.r_samples, self.v_samples
        out = np.asarray(self._interp(np.clip(r, rs[0], None)), dtype=float)
        out = np.where(r > rs[-1], 0.0, out)
        return np.nan_to_num(out, nan=0.0)

    def __call__(self, r):
        return self.eval(r)

    def eval(self, r):
        """``V(r)``; raises ``ValueError`` unless every ``r > 0``."""
        arr = np.asarray(r, dtype=float)
        if np.any(~(arr > 0)):
            raise ValueError("potential is evaluated at r > 0 only")
        out = self.values(arr)
        return float(out) if out.ndim == 0 else out

    def sqrt_signed(self, r) -> np.ndarray:
        """``sgn(V) |V|**(1/2)``."""
        v = self.values(r)
        return np.sign(v) * np.sqrt(np.abs(v))

    def sqrt_abs(self, r) -> np.ndarray:
        return np.sqrt(np.abs(self.values(r)))

    # -- structure --------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        if self.kind == "tabulated":
            return not np.any(self.v_samples)
        return self.depth == 0.0

    @property
    def sign_definite(self) -> bool:
        """True when V does not change sign (the Birman-Schwinger matrices are then symmetric)."""
        if self.kind != "tabulated":
            return True
        return bool(np.all(self.v_samples <= 0) or np.all(self.v_samples >= 0))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Radii where V is not smooth; quadrature panels are split there."""
        if self.kind == "square_well":
            return (self.length,)
        if self.kind == "tabulated":
            return (float(self.r_samples[-1]),)
        return ()

    def support_radius(self, rtol: float = 1e-10) -> float:
        """Radius beyond which ``∫|V|(1+r)r² dr`` holds less than ``rtol`` of the total."""
        if self.is_zero:
            return self.length if self.kind != "tabulated" else float(self.r_samples[-1])
        if self.kind == "square_well":
            return self.length
        if self.kind == "tabulated":
            return float(self.r_samples[-1])

        def integrand(s):
            return abs(self.values(s)) * (1 + s) * s * s

        total = _quad_split(integrand, 0.0, np.inf, ())
        scale = self.length
        hi = scale
        while _quad_split(integrand, hi, np.inf, ()) > rtol * total:
            hi *= 2
        return optimize.brentq(
            lambda s: _quad_split(integrand, s, np.inf, ()) - rtol * total, 0.0, hi, xtol=1e-6 * scale
        )

    def scaled(self, s: float) -> "Potential":
        """The dilated potential ``s² V(s r)`` (same λ, scattering length divided by s)."""
        if self.kind == "tabulated":
            return Potential.tabulated(self.r_samples / s, s * s * self.v_samples)
        return Potential(self.kind, self.depth * s * s, self.length / s)

    def cosine_transform(self, k) -> np.ndarray:
        """``C(k) = ∫₀^∞ V(r) cos(k r) dr``, the building block of all momentum kernels."""
        k = np.abs(np.asarray(k, dtype=float))
        d, b = self.depth, self.length
        if self.kind == "square_well":
            with np.errstate(invalid="ignore", divide="ignore"):
                out = -d * np.where(k * b < 1e-8, b, np.sin(k * b) / np.where(k == 0, 1.0, k))
            return out
        if self.kind == "gaussian":
            return -d * 0.5 * math.sqrt(math.pi) * b * np.exp(-0.25 * (k * b) ** 2)
        if self.kind == "exponential":
            return -d * b / (1.0 + (k * b) ** 2)
        return _tabulated_cosine_transform(self, k)

    def sine_moment(self, k) -> np.ndarray:
        """``∫₀^∞ V(r) r sin(k r) dr`` (equals ``-dC/dk``)."""
        k = np.abs(np.asarray(k, dtype=float))
        d, b = self.depth, self.length
        if self.kind == "square_well":
            kb = k * b
            safe = np.where(k == 0, 1.0, k)
            return np.where(k == 0, 0.0, -d * (np.sin(kb) - kb * np.cos(kb)) / safe**2)
        if self.kind == "gaussian":
            return -d * 0.25 * math.sqrt(math.pi) * b**3 * k * np.exp(-0.25 * (k * b) ** 2)
        if self.kind == "exponential":
            return -d * 2 * k * b**3 / (1.0 + (k * b) ** 2) ** 2
        r, w = _tabulated_nodes(self, float(np.max(k, initial=0.0)))
        return np.sin(np.multiply.outer(k, r)) @ (w * r * self.values(r))

    def quadrature_nodes(self, kmax: float):
        """Nodes and weights on which ``V(r)·trig(k r)`` integrates accurately for ``k ≤ kmax``.

        Only used for tabulated potentials, whose transforms have no closed form.
        """
        return _tabulated_nodes(self, kmax)


def _tabulated_nodes(pot: Potential, kmax: float, kh: float = 1.5):
    """8-point Gauss panels inside each sample interval, with ``kmax·h ≤ kh``."""
    from numpy.polynomial.legendre import leggauss

    rs = pot.r_samples
    edges = np.concatenate([[0.0], rs])
    x, w = leggauss(8)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(math.ceil((b - a) * max(kmax, 1.0) / kh)))
        cuts = np.linspace(a, b, m + 1)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            nodes.append(0.5 * (hi - lo) * (x + 1) + lo)
            weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _tabulated_cosine_transform(pot: Potential, k: np.ndarray) -> np.ndarray:
    r, w = _tabulated_nodes(pot, float(np.max(k, initial=0.0)))
    vals = w * pot.values(r)
    flat = k.ravel()
    out = np.empty_like(flat)
    step = max(1, 2**22 // max(r.size, 1))
    for lo in range(0, flat.size, step):
        out[lo:lo + step] = np.cos(np.multiply.outer(flat[lo:lo + step], r)) @ vals
    return out.reshape(k.shape)


def load_tabulated(path) -> Potential:
    """Read a two-column ``r V`` text file (``#`` starts a comment)."""
    path = Path(path)
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (r, V), got {data.shape[1]}")
    return Potential.tabulated(data[:, 0], data[:, 1])


def _quad_split(f, a, b, points, epsrel=1e-10):
    """Adaptive quadrature split at ``points``; integrability failures raise."""
    cuts = [a] + [p for p in sorted(points) if a < p < b] + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=500)
            except integrate.IntegrationWarning as exc:
                raise IntegrabilityError(f"moment integral on [{lo}, {hi}] did not converge: {exc}") from exc
        total += val
    return total


def moments(potential: Potential) -> tuple[float, float, float]:
    """Return ``(‖V‖₁, ‖(1+|x|)V‖₁, ‖V‖_{3/2})`` over R³."""
    if potential.is_zero:
        return 0.0, 0.0, 0.0
    upper = float(potential.r_samples[-1]) if potential.kind == "tabulated" else np.inf
    if potential.kind == "square_well":
        upper = potential.length
    pts = potential.breakpoints
    if potential.kind == "tabulated":
        pts = tuple(potential.r_samples)

    def av(r):
        return abs(float(potential.values(r)))

    l1 = 4 * np.pi * _quad_split(lambda r: av(r) * r * r, 0.0, upper, pts)
    wl1 = 4 * np.pi * _quad_split(lambda r: av(r) * (1 + r) * r * r, 0.0, upper, pts)
    l32 = (4 * np.pi * _quad_split(lambda r: av(r) ** 1.5 * r * r, 0.0, upper, pts)) ** (2.0 / 3.0)
    return l1, wl1, l32


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of checking the hypotheses of the low-density T_c formula.

    ``lambda_`` is the coupling margin: the smallest eigenvalue of the
    zero-energy Birman-Schwinger operator is ``-1/lambda_``.
    """

    lambda_: float
    scattering_length: float
    spectrum_ok: bool
    moments: tuple[float, float, float]
    d_constant: float

    @property
    def negative_scattering_length(self) -> bool:
        return self.spectrum_ok and self.scattering_length < 0


def validate_assumptions(potential: Potential, grid=None) -> AssumptionReport:
    """Check integrability, absence of bound states/resonance, and compute λ, a and D.

    A violated spectral condition is reported through ``spectrum_ok=False``
    rather than raised.
    """
    from .radial_ops import RadialGrid
    from .scattering import lambda_coupling, scattering_length_bs

    mom = moments(potential)
    if grid is None:
        grid = RadialGrid.build(potential)
    lam = lambda_coupling(potential, grid)
    ok = bool(lam > 1)
    if not ok:
        return AssumptionReport(lam, math.nan, False, mom, math.nan)
    a = scattering_length_bs(potential, grid).a
    d = 1.0 / (2.0 * (lam - 1.0))  # 0 for V = 0, where T_c = 0
    return AssumptionReport(lam, a, True, mom, d)
