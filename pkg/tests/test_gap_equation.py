import math
import warnings

import numpy as np
import pytest

from bcs_tc.critical_temp import tc_solve
from bcs_tc.gap_equation import (
    Classification,
    MonotonicityWarning,
    ScanRow,
    gap_iterate,
    last_nontrivial,
    linearisation_eigenvalue,
    transition_scan,
    vhat,
    vhat_swave,
)
from bcs_tc.potentials import Potential
from bcs_tc.radial_ops import GridSpec

MU = 0.1


@pytest.fixture(scope="module")
def tc(well):
    return tc_solve(well, MU).tc


@pytest.fixture(scope="module")
def below(well, tc):
    return gap_iterate(well, 0.8 * tc, MU, delta0=0.1 * MU)


def test_vhat_square_well_closed_form(well):
    k = np.array([0.5, 1.0, 3.0])
    exact = -math.sqrt(2 / math.pi) * (np.sin(k) - k * np.cos(k)) / k**3
    np.testing.assert_allclose(vhat(well, k), exact, rtol=1e-14)
    # -√(2/π)(sin 1 - cos 1)
    assert vhat(well, 1.0) == pytest.approx(-0.2402978391234, abs=1e-12)
    # k → 0 limit: (2π)^{-3/2} ∫V = -√(2/π)/3
    assert vhat(well, 0.0) == pytest.approx(-math.sqrt(2 / math.pi) / 3, rel=1e-8)


def test_vhat_gaussian_closed_form():
    pot = Potential.gaussian(0.7, 1.3)
    k = np.array([0.2, 1.0, 2.5])
    exact = -0.7 * (1.3**3 / 2**1.5) * np.exp(-(k * 1.3) ** 2 / 4)
    np.testing.assert_allclose(vhat(pot, k), exact, rtol=1e-13)


def test_vhat_swave_examples(well):
    pgrid = GridSpec(q_max=20.0).momentum_partner(MU, 0.01)
    zero = vhat_swave(Potential.zero(), pgrid)
    assert not np.any(zero.entries)
    m = vhat_swave(well, pgrid)
    assert m.symmetric and m.asymmetry() == 0.0
    assert np.all(np.isfinite(np.diag(m.entries)))


def test_vhat_swave_is_angular_average(well):
    pgrid = GridSpec(q_max=10.0).momentum_partner(MU, 0.01)
    m = vhat_swave(well, pgrid).entries
    i, j = 5, pgrid.n - 40
    p, q = pgrid.nodes[i], pgrid.nodes[j]
    t, w = np.polynomial.legendre.leggauss(200)
    avg = 0.5 * np.sum(w * vhat(well, np.sqrt(p * p + q * q - 2 * p * q * t)))
    assert m[i, j] == pytest.approx(avg, rel=1e-10)


def test_zero_is_exact_fixed_point(well, tc):
    sol = gap_iterate(well, 0.5 * tc, MU, delta0=0.0)
    assert sol.classification is Classification.TRIVIAL
    assert sol.iterations == 1
    assert sol.residual == 0.0
    assert not np.any(sol.delta)


def test_trivial_above_tc(well, tc):
    sol = gap_iterate(well, 1.25 * tc, MU, delta0=0.1 * MU)
    assert sol.converged
    assert sol.classification is Classification.TRIVIAL
    assert sol.max_delta < 1e-10 * MU


def test_nontrivial_below_tc(below, tc):
    assert below.converged
    assert below.classification is Classification.NONTRIVIAL
    assert below.residual < 1e-8
    # weak-coupling BCS: Δ(0.8 T_c) ≈ 1.25 T_c
    assert 1.0 < below.max_delta / tc < 1.5


def test_nontrivial_stable_under_refinement(well, below, tc):
    fine = gap_iterate(well, 0.8 * tc, MU, GridSpec().refined(), delta0=0.1 * MU)
    assert fine.max_delta == pytest.approx(below.max_delta, rel=1e-6)


def test_dispersion_bounds(below):
    xi = np.abs(below.grid.xi)
    assert np.all(below.dispersion >= xi)
    assert np.all(below.dispersion >= np.abs(below.delta))


def test_linearisation_has_no_unstable_direction(well, below):
    assert linearisation_eigenvalue(well, below) <= 1 + 1e-6


def test_gap_iterate_rejects_bad_input(well):
    with pytest.raises(ValueError):
        gap_iterate(well, 0.0, MU)
    with pytest.raises(ValueError):
        gap_iterate(well, 1e-6, MU, delta0=np.nan)


def test_unconverged_reported(well, tc):
    sol = gap_iterate(well, 0.8 * tc, MU, delta0=0.1 * MU, max_iter=3)
    assert not sol.converged and sol.iterations == 3


def test_scan_monotonicity_warning():
    rows = [ScanRow(1.0, 1e-3, 0, 1, "nontrivial"), ScanRow(2.0, 2e-3, 0, 1, "nontrivial")]
    assert last_nontrivial(rows) == 2.0
    assert last_nontrivial([ScanRow(1.0, 0.0, 0, 1, "trivial")]) is None


def test_transition_scan_above_tc_all_trivial(well, tc):
    with warnings.catch_warnings():
        warnings.simplefilter("error", MonotonicityWarning)
        rows = transition_scan(well, MU, [1.3 * tc, 1.6 * tc])
    assert [r.classification for r in rows] == ["trivial", "trivial"]
    assert all(r.ok for r in rows)
