"""Rhythm-model tests: coefficient fidelity against exact arithmetic, the
spherical reconstruction of the GH center, and the analytic derivative."""

from fractions import Fraction

import numpy as np
import pytest

from armplan.rhythm import (
    DEFAULT_COEFFS_DSG,
    DEFAULT_COEFFS_ED,
    DEFAULT_COEFFS_PR,
    PrInput,
    RhythmParams,
    eval_rhythm,
    gh_center,
    gh_center_derivative,
)

# exact rational copies of the published coefficients (degree high -> low)
ED_EXACT = (Fraction(149, 10**11), Fraction(-428, 10**9), Fraction(144, 10**7),
            Fraction(52, 10**4), Fraction(-1357, 10**4), Fraction(7078, 10**4))
PR_EXACT = (Fraction(182, 100), Fraction(-8073, 1000), Fraction(-399, 100))
DSG_EXACT = (Fraction(-16, 10**6), Fraction(3, 10**4), Fraction(1))


def exact_phi_ed(theta):
    th = Fraction(theta)
    return sum(c * th ** (5 - i) for i, c in enumerate(ED_EXACT))


def exact_phi_pr(theta_hat):
    x = Fraction(theta_hat)
    return PR_EXACT[0] * x**3 + PR_EXACT[1] * x**2 + PR_EXACT[2] * x


def exact_dsg_scale(theta):
    th = Fraction(theta)
    return DSG_EXACT[0] * th**2 + DSG_EXACT[1] * th + DSG_EXACT[2]


def test_default_coefficients_are_verbatim():
    assert DEFAULT_COEFFS_ED == (1.49e-9, -4.28e-7, 1.44e-5, 5.2e-3, -0.1357, 0.7078)
    assert DEFAULT_COEFFS_PR == (1.82, -8.073, -3.99)
    assert DEFAULT_COEFFS_DSG == (-1.6e-5, 3e-4, 1.0)


@pytest.mark.parametrize("theta", [0, 50, 100, 150, 180])
def test_polynomials_match_exact_arithmetic(theta, rhythm):
    st = eval_rhythm(float(theta), rhythm)
    for got, exact in (
        (st.phi_ed, exact_phi_ed(theta)),
        (st.phi_pr, exact_phi_pr(Fraction(theta, 180))),
        (st.d_sg, Fraction(18, 100) * exact_dsg_scale(theta)),
    ):
        want = float(exact)
        if want == 0.0:
            assert got == 0.0
        else:
            assert abs(got - want) <= 1e-12 * abs(want)


def test_exact_boundary_identities(rhythm):
    st = eval_rhythm(0.0, rhythm)
    assert st.phi_pr == 0.0            # no constant term
    assert st.d_sg == rhythm.d0        # unit scale at zero elevation
    assert st.phi_ed == pytest.approx(0.7078, abs=0)


def test_known_values():
    st = eval_rhythm(180.0, RhythmParams())
    # 1.82 - 8.073 - 3.99 at theta_hat = 1
    assert st.phi_pr == pytest.approx(-10.243, rel=1e-15)
    st100 = eval_rhythm(100.0, RhythmParams())
    assert st100.d_sg == pytest.approx(0.87 * 0.18, rel=1e-14)


def test_gh_center_zero_elevation():
    p = RhythmParams(d0=0.18, origin=(0.0, 0.0, 0.0))
    x = gh_center(0.0, p)
    e = np.radians(0.7078)
    np.testing.assert_allclose(x, [0.0, 0.18 * np.cos(e), 0.18 * np.sin(e)], rtol=0, atol=1e-15)
    # frozen from independent symbolic evaluation
    np.testing.assert_allclose(x, [0.0, 0.17998626550049104, 0.002223562723815913],
                               rtol=1e-14, atol=0)


def test_gh_center_radius_identity(rhythm):
    for theta in np.linspace(0.0, 180.0, 37):
        st = eval_rhythm(float(theta), rhythm)
        assert abs(np.linalg.norm(st.x_sh - rhythm.origin) - st.d_sg) < 1e-12


def test_zeroed_angles_point_laterally():
    p = RhythmParams(coeffs_ed=(0.0,) * 6, coeffs_pr=(0.0,) * 3)
    for theta in (0.0, 45.0, 170.0):
        st = eval_rhythm(theta, p)
        np.testing.assert_allclose(st.x_sh, p.origin + np.array([0.0, st.d_sg, 0.0]), atol=1e-15)


def test_fixed_shoulder_helper():
    target = np.array([0.01, -0.02, 0.05])
    p = RhythmParams.fixed(target)
    for theta in (0.0, 30.0, 90.0, 180.0):
        np.testing.assert_allclose(gh_center(theta, p), target, rtol=0, atol=1e-16)
        np.testing.assert_allclose(gh_center_derivative(theta, p), 0.0, atol=0)


def test_out_of_range_clamps_and_flags(rhythm):
    lo = eval_rhythm(-5.0, rhythm)
    hi = eval_rhythm(200.0, rhythm)
    assert lo.out_of_range and hi.out_of_range
    assert lo.theta == 0.0 and hi.theta == 180.0
    assert not eval_rhythm(90.0, rhythm).out_of_range


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        RhythmParams(d0=0.0)
    with pytest.raises(ValueError):
        RhythmParams(coeffs_dsg=(-1.6e-5, 3e-4, 0.999))


def test_derivative_matches_finite_differences(rhythm):
    rng = np.random.default_rng(7)
    h = 1e-6  # radians
    for theta in rng.uniform(0.5, 179.5, 100):
        d = gh_center_derivative(theta, rhythm)
        hd = np.degrees(h)
        fd = (gh_center(theta + hd, rhythm) - gh_center(theta - hd, rhythm)) / (2 * h)
        np.testing.assert_allclose(d, fd, rtol=0, atol=1e-6)


def test_derivative_frozen_symbolic_value(rhythm):
    # frozen from an independent symbolic differentiation of the polynomials
    want = np.array([-0.005711165334961108, -0.048666994120124936, 0.048730904661359264])
    np.testing.assert_allclose(gh_center_derivative(90.0, rhythm), want, rtol=1e-13)


def test_smoothness_second_differences(rhythm):
    thetas = np.arange(0.0, 180.0001, 0.1)
    xs = np.array([gh_center(t, rhythm) for t in thetas])
    second = np.abs(np.diff(xs, n=2, axis=0))
    assert second.max() < 1e-4


@pytest.mark.parametrize("mode,expected", [
    (PrInput.NORMALIZED, 1.82 * 0.5**3 - 8.073 * 0.5**2 - 3.99 * 0.5),
    (PrInput.DEGREES, 1.82 * 90.0**3 - 8.073 * 90.0**2 - 3.99 * 90.0),
    (PrInput.RADIANS, 1.82 * (np.pi / 2) ** 3 - 8.073 * (np.pi / 2) ** 2 - 3.99 * (np.pi / 2)),
])
def test_pr_input_conventions(mode, expected):
    p = RhythmParams(pr_input=mode)
    assert eval_rhythm(90.0, p).phi_pr == pytest.approx(expected, rel=1e-12)
