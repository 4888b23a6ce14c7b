import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcs_tc.potentials import Potential
from bcs_tc.radial_ops import (
    GridSpec,
    KernelMatrix,
    MomentumGrid,
    RadialGrid,
    ResolutionWarning,
    TailError,
    _gauss_panels,
    _tanh_log_integral,
    a_kernel_monte_carlo,
    a_kernel_reduced,
    a_profile,
    assemble_a_kernel,
    assemble_bs_zero,
    assemble_bs_zero_l1,
    assemble_bt,
    assemble_bt_momentum,
    assemble_rank_one,
    dump_csv,
    green_matrix,
    kfun,
    m_quadrature,
    reduced_momentum_kernel,
    symmetric_partner,
    thermal_green,
)
from bcs_tc.spectral import bt_min_eig, min_eig
from conftest import tabulated_sign_changing


# -- K_{T,μ} ---------------------------------------------------------------
def test_kfun_fermi_surface_value():
    assert kfun(1.0, 0.05, 1.0) == 0.1
    assert kfun(math.sqrt(0.3), 1e-9, 0.3) == pytest.approx(2e-9, rel=1e-12)


def test_kfun_spot_value():
    assert kfun(1.1, 0.05, 1.0) == pytest.approx(0.21 / math.tanh(2.1), rel=1e-13)
    # 0.21 / tanh(2.1), evaluated independently
    assert kfun(1.1, 0.05, 1.0) == pytest.approx(0.2163940243479, abs=1e-12)


def test_kfun_far_from_fermi_surface():
    T, mu = 0.01, 1.0
    p = np.sqrt(mu + np.array([20 * T, 50 * T, 3.0]))
    np.testing.assert_allclose(kfun(p, T, mu) / (p * p - mu), 1.0, rtol=1e-8, atol=0)


def test_kfun_series_branch_is_continuous():
    T, mu = 0.1, 1.0
    x = 2 * T * 1e-4
    below = kfun(math.sqrt(mu + x * (1 - 1e-9)), T, mu)
    above = kfun(math.sqrt(mu + x * (1 + 1e-9)), T, mu)
    assert below == pytest.approx(above, rel=1e-12)


@given(p=st.floats(0.0, 20.0), T=st.floats(1e-6, 10.0), mu=st.floats(1e-4, 10.0))
def test_kfun_lower_bounds(p, T, mu):
    k = kfun(p, T, mu)
    assert k >= 2 * T * (1 - 1e-12)
    assert k >= abs(p * p - mu) * (1 - 1e-12)


def test_tanh_log_integral_against_mpmath():
    for L in (0.5, 3.0, 19.0, 30.0):
        ref = mpmath.quad(lambda y: mpmath.tanh(y) / y, [0, 1, L])
        assert _tanh_log_integral(L) == pytest.approx(float(ref), rel=1e-12)
    # large-L form ln L + ln(4 e^γ / π)
    big = 1e6
    assert _tanh_log_integral(big) == pytest.approx(math.log(big) + math.log(4 / math.pi) + np.euler_gamma, rel=1e-15)


# -- grids -----------------------------------------------------------------
def test_radial_grid_invariants():
    grid = RadialGrid.build(Potential.square_well(1, 1), n=96, order=16)
    assert np.all(np.diff(grid.nodes) > 0)
    assert grid.nodes[0] > 0 and grid.nodes[-1] < grid.r_max
    assert np.all(grid.weights > 0)
    # exact for polynomials of degree 2·order - 1 on each panel
    f = grid.nodes**31
    assert np.dot(grid.weights, f) == pytest.approx(grid.r_max**32 / 32, rel=1e-13)


def test_radial_grid_resolution_warning():
    with pytest.warns(ResolutionWarning):
        RadialGrid.build(Potential.gaussian(1, 0.01), n=32, order=16, r_max=10.0)


def test_momentum_grid_window_and_convergence():
    mu, T = 0.1, 1e-3
    g = MomentumGrid.build(mu, T)
    assert g.nodes[g.central] == pytest.approx(math.sqrt(mu), rel=1e-15)
    lo, hi = math.sqrt(mu - g.window), math.sqrt(mu + g.window)
    assert lo < math.sqrt(mu) < hi
    coarse = m_quadrature(g)
    fine = m_quadrature(GridSpec().refined().momentum(mu, T, 1.0))
    assert abs(fine - coarse) < 1e-8 * abs(fine)
    # a smooth test integral over the same grid
    smooth = np.dot(g.weights, np.exp(-g.nodes**2))
    assert smooth == pytest.approx(0.5 * math.sqrt(math.pi) * math.erf(g.p_max), rel=1e-12)


def test_momentum_grid_tail_error():
    with pytest.raises(TailError):
        MomentumGrid.build(100.0, 0.1, p_max=5.0)


# -- Green's kernel --------------------------------------------------------
def test_green_kernel_inverts_dirichlet_laplacian():
    grid = RadialGrid.build(r_max=12.0, n=256, order=16)
    r, w = grid.nodes, grid.weights
    sw = np.sqrt(w)
    u = r * np.exp(-r)
    # green_matrix is the symmetric Nyström form √w_i G_ij √w_j
    v = (green_matrix(grid) @ (sw * u)) / sw
    # closed form ∫₀^r s u(s) ds + r ∫_r^R u(s) ds
    R = grid.r_max
    exact = 2 - (r + 2) * np.exp(-r) - r * (R + 1) * np.exp(-R)
    np.testing.assert_allclose(v, exact, rtol=0, atol=1e-6)
    # -d²/dr² of x ↦ ∫ min(x, s) u(s) ds recovers u (panels split at the kink s = x)
    def vx(x):
        nodes, wts = _gauss_panels(np.concatenate([np.linspace(0, x, 9), np.linspace(x, R, 41)[1:]]), 16)
        return float(np.sum(wts * np.minimum(x, nodes) * nodes * np.exp(-nodes)))

    h = 1e-3
    for x in (0.3, 1.0, 2.5, 5.0):
        lap = -(vx(x + h) - 2 * vx(x) + vx(x - h)) / h**2
        assert lap == pytest.approx(x * math.exp(-x), abs=1e-6)


# -- assembled operators ---------------------------------------------------
def test_bs_zero_examples(well):
    zero = assemble_bs_zero(Potential.zero(), RadialGrid.build(r_max=1.0))
    assert not np.any(zero.entries)
    m = assemble_bs_zero(well, RadialGrid.build(well))
    assert m.symmetric and m.asymmetry() == 0.0
    assert min_eig(m).min_eig == pytest.approx(-4 / math.pi**2, rel=1e-9)


def test_bs_zero_richardson(well):
    e400 = min_eig(assemble_bs_zero(well, RadialGrid.build(well, n=400))).min_eig
    e800 = min_eig(assemble_bs_zero(well, RadialGrid.build(well, n=800))).min_eig
    assert abs(e800 - e400) < 1e-10
    assert e800 == pytest.approx(-0.40528, abs=5e-6)


def test_kernel_matrix_rejects_nonfinite():
    grid = RadialGrid.build(r_max=1.0, n=16, order=16)
    bad = np.zeros((16, 16))
    bad[0, 1] = np.nan
    with pytest.raises(ValueError):
        KernelMatrix(bad, grid, False, "bad")


def test_thermal_green_decays_with_temperature(well):
    grid = RadialGrid.build(well, n=64)
    mu = 1.0
    i, j = 10, 40
    vals = []
    for T in (10.0, 100.0, 1000.0):
        g = thermal_green(grid, GridSpec().momentum(mu, T, grid.r_max))
        vals.append(abs(g[i, j]))
    assert vals[0] > vals[1] > vals[2]


def test_thermal_green_diagonal_positive(well):
    grid = RadialGrid.build(well, n=64)
    g = thermal_green(grid, GridSpec().momentum(1.0, 0.01, grid.r_max))
    assert np.all(np.isfinite(g))
    assert np.all(np.diag(g) > 0)


def test_bt_zero_potential():
    grid = RadialGrid.build(r_max=1.0)
    pgrid = GridSpec().momentum(0.1, 0.01, 1.0)
    assert not np.any(assemble_bt(Potential.zero(), 0.01, 0.1, grid, pgrid).entries)


def test_bt_rejects_mismatched_momentum_grid(well):
    grid = RadialGrid.build(well)
    with pytest.raises(ValueError):
        assemble_bt(well, 0.02, 0.1, grid, GridSpec().momentum(0.1, 0.01, 1.0))


def test_a_profile_vanishes_at_origin():
    pgrid = GridSpec().momentum(0.1, 0.01, 1.0)
    assert a_profile(0.0, pgrid)[0] == 0.0


def test_a_kernel_angular_average_monte_carlo():
    pgrid = GridSpec().momentum(0.1, 0.01, 1.0)
    rng = np.random.default_rng(20240611)
    for r1, r2 in ((0.3, 0.7), (0.9, 0.15)):
        mean, err = a_kernel_monte_carlo(r1, r2, pgrid, 40000, rng)
        exact = a_kernel_reduced(r1, r2, pgrid)
        assert abs(mean - exact) < 4 * err
        assert err < 0.01 * abs(exact)


@pytest.mark.parametrize("mu, T", [(0.1, 0.01), (0.01, 1e-4), (1.0, 0.5)])
def test_decomposition_identity(well, mu, T):
    grid = RadialGrid.build(well)
    pgrid = GridSpec().momentum(mu, T, grid.r_max)
    bt = assemble_bt(well, T, mu, grid, pgrid).entries
    parts = (assemble_bs_zero(well, grid).entries + assemble_rank_one(well, grid, m_quadrature(pgrid)).entries
             + assemble_a_kernel(well, T, mu, grid, pgrid).entries)
    assert np.abs(bt - parts).max() < 1e-6 * np.abs(bt).max()


def test_a_kernel_norm_decreases_with_mu(well):
    grid = RadialGrid.build(well)
    norms = []
    for mu in (1e-1, 1e-2, 1e-3):
        T = mu / 10
        norms.append(assemble_a_kernel(well, T, mu, grid, GridSpec().momentum(mu, T, grid.r_max)).hs_norm())
    assert norms[0] > norms[1] > norms[2]


def test_bt_momentum_examples(well):
    pgrid = GridSpec().momentum_partner(0.1, 0.01)
    zero = assemble_bt_momentum(Potential.zero(), 0.01, 0.1, pgrid)
    assert not np.any(zero.entries) and zero.symmetric
    m = assemble_bt_momentum(well, 0.01, 0.1, pgrid)
    assert m.symmetric and m.asymmetry() == 0.0
    pos = bt_min_eig(well, 0.01, 0.1).min_eig
    assert min_eig(m).min_eig == pytest.approx(pos, rel=1e-4)


def test_isospectral_sign_changing():
    pot = tabulated_sign_changing()
    assert not pot.sign_definite
    pos = bt_min_eig(pot, 0.01, 0.1, method="position").min_eig
    mom = bt_min_eig(pot, 0.01, 0.1, method="momentum").min_eig
    assert mom == pytest.approx(pos, rel=1e-4)


def test_symmetric_partner_matches_direct_spectrum(well):
    grid = RadialGrid.build(well)
    direct = np.linalg.eigvalsh(assemble_bs_zero(well, grid).entries)
    partner = np.linalg.eigvalsh(symmetric_partner(well, grid, green_matrix(grid), "bs").entries)
    assert partner[0] == pytest.approx(direct[0], rel=1e-10)


def test_tabulated_momentum_kernel_consistent_with_transform():
    pot = tabulated_sign_changing()
    p = np.array([0.3, 1.7, 5.0])
    direct = (pot.cosine_transform(np.subtract.outer(p, p)) - pot.cosine_transform(np.add.outer(p, p))) / np.pi
    np.testing.assert_allclose(reduced_momentum_kernel(pot, p, p), direct, rtol=0, atol=1e-10)


def test_grid_convergence_of_min_eigs(well):
    spec = GridSpec()
    for T, mu in ((0.01, 0.1), (1e-4, 1e-3)):
        a = bt_min_eig(well, T, mu, spec).min_eig
        b = bt_min_eig(well, T, mu, spec.refined()).min_eig
        assert abs(a - b) < 1e-5 * abs(b)


def test_swave_is_lowest_channel():
    # the ℓ=1 zero-energy Birman-Schwinger operator has a larger smallest eigenvalue
    for pot in (Potential.square_well(1, 1), Potential.gaussian(1, 1), Potential.exponential(0.5, 1)):
        grid = RadialGrid.build(pot)
        s = min_eig(assemble_bs_zero(pot, grid)).min_eig
        p = min_eig(assemble_bs_zero_l1(pot, grid)).min_eig
        assert p > s


def test_l1_square_well_critical_coupling():
    # ℓ=1 zero-energy bound state appears when j_0(√V₀ R) = 0, i.e. √V₀ R = π
    pot = Potential.square_well(1, 1)
    grid = RadialGrid.build(pot, n=320)
    assert min_eig(assemble_bs_zero_l1(pot, grid)).min_eig == pytest.approx(-1 / math.pi**2, rel=1e-6)


def test_dump_csv(tmp_path, well):
    m = assemble_bs_zero(well, RadialGrid.build(well, n=16))
    path = tmp_path / "m.csv"
    dump_csv(m, path)
    back = np.loadtxt(path, delimiter=",", comments="#")
    np.testing.assert_allclose(back, m.entries, rtol=1e-15, atol=0)


@settings(deadline=None, max_examples=20)
@given(T=st.floats(1e-8, 1.0), ratio=st.floats(1.5, 10.0))
def test_bt_min_eig_monotone_in_t(T, ratio):
    pot = Potential.square_well(1, 1)
    lo = bt_min_eig(pot, T, 0.1).min_eig
    hi = bt_min_eig(pot, T * ratio, 0.1).min_eig
    assert hi >= lo - 1e-12
