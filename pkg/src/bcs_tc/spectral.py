"""Smallest eigenvalues, shifted solves and the Birman-Schwinger positivity test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .radial_ops import (
    GridSpec,
    KernelMatrix,
    assemble_bt,
    assemble_bt_momentum,
    symmetric_partner,
    thermal_green,
)

__all__ = [
    "SpectralReport",
    "NotSymmetricError",
    "NearSingularError",
    "min_eig",
    "solve_shifted",
    "positivity_check",
    "bt_min_eig",
]


class NotSymmetricError(ValueError):
    """Symmetric eigensolver called on a non-symmetric matrix."""


class NearSingularError(ArithmeticError):
    """``1 + M`` is (numerically) singular: a zero-energy resonance or bound state."""


@dataclass(frozen=True)
class SpectralReport:
    min_eig: float
    eigvec: np.ndarray
    residual: float
    method: str


def _as_array(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=float)


def min_eig(matrix, refine: bool = False) -> SpectralReport:
    """Algebraically smallest eigenpair of a symmetric matrix.

    Non-symmetric input is refused; use the isospectral symmetric partner
    (:func:`~bcs_tc.radial_ops.assemble_bt_momentum` or
    :func:`~bcs_tc.radial_ops.symmetric_partner`) for sign-changing V.
    """
    a = _as_array(matrix)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise NotSymmetricError(
            "min_eig needs a symmetric matrix; assemble the isospectral symmetric partner instead"
        )
    w, v = scipy.linalg.eigh(a, subset_by_index=[0, 0])
    lam, vec = float(w[0]), v[:, 0]
    method = "full_sym"
    if refine and scale > 0:
        # one step of shifted inverse iteration
        shift = lam - 1e-10 * scale
        try:
            y = scipy.linalg.solve(a - shift * np.eye(a.shape[0]), vec, assume_a="sym")
            vec = y / np.linalg.norm(y)
            lam = float(vec @ a @ vec)
            method = "inverse_iteration"
        except scipy.linalg.LinAlgError:
            pass
    vec = vec / np.linalg.norm(vec)
    res = float(np.linalg.norm(a @ vec - lam * vec))
    return SpectralReport(lam, vec, res, method)


def solve_shifted(matrix, rhs) -> np.ndarray:
    """Solve ``(1 + M) x = rhs`` to a relative residual below 1e-10."""
    a = _as_array(matrix)
    rhs = np.asarray(rhs, dtype=float)
    n = a.shape[0]
    symmetric = np.allclose(a, a.T, rtol=0, atol=1e-12 * max(np.max(np.abs(a)), 1e-300))
    if symmetric and n:
        lam = scipy.linalg.eigh(a, subset_by_index=[0, 0], eigvals_only=True)[0]
        if lam <= -1 + 1e-8:
            raise NearSingularError(f"1 + M is near singular (min eigenvalue {lam:.12g})")
    shifted = np.eye(n) + a
    try:
        lu = scipy.linalg.lu_factor(shifted, check_finite=True)
    except scipy.linalg.LinAlgError as exc:
        raise NearSingularError(str(exc)) from exc
    x = scipy.linalg.lu_solve(lu, rhs)
    scale = max(np.linalg.norm(rhs), 1e-300)
    for _ in range(3):
        r = rhs - shifted @ x
        if np.linalg.norm(r) <= 1e-13 * scale:
            break
        x = x + scipy.linalg.lu_solve(lu, r)
    res = np.linalg.norm(rhs - shifted @ x)
    if res > 1e-10 * scale:
        raise NearSingularError(f"shifted solve residual {res / scale:.3e} exceeds 1e-10")
    return x


def bt_min_eig(potential, T: float, mu: float, grids: GridSpec | None = None, grid=None,
               method: str = "position") -> SpectralReport:
    """Smallest eigenvalue of the thermal Birman-Schwinger operator ``B_T``.

    ``method="position"`` assembles on the radial grid (via the Cholesky
    partner when V changes sign); ``method="momentum"`` uses the
    ``K^{-1/2} V K^{-1/2}`` partner on a momentum grid.
    """
    grids = grids or GridSpec()
    if method == "momentum":
        return min_eig(assemble_bt_momentum(potential, T, mu, grids.momentum_partner(mu, T)))
    if method != "position":
        raise ValueError(f"unknown method {method!r}")
    grid = grid if grid is not None else grids.radial(potential)
    pgrid = grids.momentum(mu, T, grid.r_max)
    if potential.sign_definite:
        return min_eig(assemble_bt(potential, T, mu, grid, pgrid))
    return min_eig(symmetric_partner(potential, grid, thermal_green(grid, pgrid), "B_T"))


def positivity_check(potential, T: float, mu: float, grids: GridSpec | None = None, grid=None,
                     method: str = "position") -> bool:
    """True iff ``K_{T,μ} + V ≥ 0``, i.e. the smallest eigenvalue of ``B_T`` is at least -1."""
    if potential.is_zero:
        return True
    return bt_min_eig(potential, T, mu, grids, grid, method).min_eig >= -1.0
