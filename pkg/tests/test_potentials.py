import math

import numpy as np
import pytest

from bcs_tc.potentials import IntegrabilityError, Potential, load_tabulated, moments, validate_assumptions
from conftest import tabulated_attractive

HALF_PI_SQ = (math.pi / 2) ** 2


@pytest.mark.parametrize(
    "pot, r, expected",
    [
        (Potential.square_well(1, 1), 0.5, -1.0),
        (Potential.square_well(1, 1), 2.0, 0.0),
        (Potential.gaussian(1, 1), 1.0, -math.exp(-1)),
        (Potential.exponential(0.5, 2), 2.0, -0.5 * math.exp(-1)),
    ],
)
def test_eval_examples(pot, r, expected):
    assert pot.eval(r) == pytest.approx(expected, rel=1e-15, abs=0)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_eval_rejects_nonpositive_radius(r):
    with pytest.raises(ValueError):
        Potential.gaussian(1, 1).eval(r)


def test_tabulated_interpolation_and_cutoff():
    r = np.array([0.5, 1.0, 2.0])
    pot = Potential.tabulated(r, [-2.0, -1.0, -0.5])
    np.testing.assert_allclose(pot.eval(r), [-2.0, -1.0, -0.5], rtol=0, atol=1e-15)
    assert pot.eval(0.1) == -2.0
    assert pot.eval(2.5) == 0.0
    # monotone data stays monotone between samples
    fine = pot.eval(np.linspace(0.5, 2.0, 301))
    assert np.all(np.diff(fine) >= 0)


def test_tabulated_requires_increasing_radii():
    with pytest.raises(ValueError):
        Potential.tabulated([1.0, 0.5], [-1.0, -1.0])
    with pytest.raises(ValueError):
        Potential.tabulated([0.5, 0.5], [-1.0, -1.0])


def test_load_tabulated(tmp_path):
    path = tmp_path / "v.dat"
    path.write_text("# r V\n0.5 -1.0\n1.0 -0.5  # inline\n1.5 -0.25\n")
    pot = load_tabulated(path)
    assert pot.kind == "tabulated"
    assert pot.eval(1.0) == -0.5
    bad = tmp_path / "bad.dat"
    bad.write_text("0.5 -1.0 3\n1.0 -0.5 3\n")
    with pytest.raises(ValueError, match="two columns"):
        load_tabulated(bad)


def test_moments_closed_forms():
    l1, wl1, l32 = moments(Potential.square_well(1, 1))
    assert l1 == pytest.approx(4 * math.pi / 3, rel=1e-8)
    assert wl1 == pytest.approx(4 * math.pi / 3 + math.pi, rel=1e-8)
    assert l32 == pytest.approx((4 * math.pi / 3) ** (2 / 3), rel=1e-8)

    d, b = 0.7, 1.3
    l1, wl1, l32 = moments(Potential.gaussian(d, b))
    assert l1 == pytest.approx(d * math.pi**1.5 * b**3, rel=1e-8)
    assert wl1 == pytest.approx(d * (math.pi**1.5 * b**3 + 2 * math.pi * b**4), rel=1e-8)
    assert l32 == pytest.approx((d**1.5 * (2 * math.pi / 3) ** 1.5 * b**3) ** (2 / 3), rel=1e-8)

    l1, wl1, l32 = moments(Potential.exponential(d, b))
    assert l1 == pytest.approx(8 * math.pi * d * b**3, rel=1e-8)
    assert wl1 == pytest.approx(8 * math.pi * d * b**3 + 24 * math.pi * d * b**4, rel=1e-8)
    assert l32 == pytest.approx((4 * math.pi * d**1.5 * 2 * (2 * b / 3) ** 3) ** (2 / 3), rel=1e-8)


def test_moments_gaussian_l1_example():
    assert moments(Potential.gaussian(1, 1))[0] == pytest.approx(5.56833, abs=5e-6)


def test_moments_flag_nonintegrable_tail():
    class Slow(Potential):
        def values(self, r):
            return -np.power(1.0 + np.asarray(r, dtype=float), -2.5)

    slow = Slow("gaussian", 1.0, 1.0)
    with pytest.raises(IntegrabilityError):
        moments(slow)


def test_validate_zero_potential():
    rep = validate_assumptions(Potential.zero())
    assert rep.lambda_ == math.inf
    assert rep.spectrum_ok
    assert rep.scattering_length == 0.0


def test_validate_square_well():
    rep = validate_assumptions(Potential.square_well(1, 1))
    assert rep.lambda_ == pytest.approx(HALF_PI_SQ, rel=1e-6)
    assert rep.spectrum_ok
    assert rep.d_constant == pytest.approx(1 / (2 * (HALF_PI_SQ - 1)), rel=1e-6)
    assert rep.d_constant > 0


def test_validate_bound_state_is_reported_not_raised():
    rep = validate_assumptions(Potential.square_well(3, 1))
    assert not rep.spectrum_ok
    assert rep.lambda_ < 1


@pytest.mark.parametrize("pot", [Potential.square_well(1, 1), Potential.gaussian(1, 1), tabulated_attractive()])
@pytest.mark.parametrize("s", [0.5, 2.0])
def test_scaling_covariance(pot, s):
    base = validate_assumptions(pot)
    sc = validate_assumptions(pot.scaled(s))
    assert sc.lambda_ == pytest.approx(base.lambda_, rel=1e-6)
    assert sc.scattering_length == pytest.approx(base.scattering_length / s, rel=1e-6)


def test_support_radius_captures_moment():
    pot = Potential.gaussian(1, 1)
    R = pot.support_radius(1e-10)
    assert 4.5 < R < 6.0
    assert Potential.square_well(1, 2).support_radius() == 2.0
