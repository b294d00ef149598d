"""Scapulohumeral rhythm model: glenohumeral (GH) joint-center motion.

The GH joint center is located in spherical coordinates relative to a fixed
torso origin: an elevation/depression angle ``phi_ed``, a protraction/
retraction angle ``phi_pr``, and a radial distance ``d_sg``, each given as a
polynomial in the arm elevation angle theta.  Torso frame: x anterior,
y lateral (toward the moving arm), z up.

Units: theta enters in degrees at this module's boundary (the polynomial
coefficients are degree-calibrated); everything downstream works in radians
and meters.  The protraction polynomial has no published input unit; by
default it takes the normalized elevation theta/180 (see ``PrInput``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PrInput",
    "RhythmParams",
    "GhState",
    "eval_rhythm",
    "gh_center",
    "gh_center_derivative",
]

# Elevation/depression polynomial, degrees in -> degrees out (degree 5..0).
DEFAULT_COEFFS_ED = (1.49e-9, -4.28e-7, 1.44e-5, 5.2e-3, -0.1357, 0.7078)
# Protraction/retraction polynomial, degree 3..1 (no constant term: phi_pr(0) = 0).
DEFAULT_COEFFS_PR = (1.82, -8.073, -3.99)
# Radial scale polynomial, degrees in, dimensionless factor on d0 (degree 2..0).
DEFAULT_COEFFS_DSG = (-1.6e-5, 3e-4, 1.0)

THETA_MAX_DEG = 180.0


class PrInput(enum.Enum):
    """Input convention for the protraction/retraction polynomial.

    The coefficient source does not state the unit of theta for this
    polynomial.  NORMALIZED (theta/180, so the cubic spans [0, 1]) keeps the
    output inside the anatomical protraction/retraction range and is the
    default; DEGREES and RADIANS are provided so the convention can be
    switched without touching call sites.
    """

    NORMALIZED = "normalized"
    DEGREES = "degrees"
    RADIANS = "radians"


def _pr_argument(theta_deg: float, mode: PrInput) -> tuple[float, float]:
    """Return (polynomial argument, d(argument)/d(theta_deg))."""
    if mode is PrInput.NORMALIZED:
        return theta_deg / THETA_MAX_DEG, 1.0 / THETA_MAX_DEG
    if mode is PrInput.DEGREES:
        return theta_deg, 1.0
    return np.radians(theta_deg), np.pi / 180.0


@dataclass(frozen=True, eq=False)
class RhythmParams:
    """Coefficients and geometry of the GH-center rhythm model.

    d0 is the radial distance at theta = 0; the d_sg polynomial is a
    dimensionless scale with constant term exactly 1, so d_sg(0) = d0.
    """

    d0: float = 0.18
    coeffs_ed: tuple[float, ...] = DEFAULT_COEFFS_ED
    coeffs_pr: tuple[float, ...] = DEFAULT_COEFFS_PR
    coeffs_dsg: tuple[float, ...] = DEFAULT_COEFFS_DSG
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pr_input: PrInput = PrInput.NORMALIZED

    def __post_init__(self):
        object.__setattr__(self, "coeffs_ed", tuple(float(c) for c in self.coeffs_ed))
        object.__setattr__(self, "coeffs_pr", tuple(float(c) for c in self.coeffs_pr))
        object.__setattr__(self, "coeffs_dsg", tuple(float(c) for c in self.coeffs_dsg))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3).copy())
        if not self.d0 > 0:
            raise ValueError(f"d0 must be positive, got {self.d0}")
        if len(self.coeffs_ed) != 6 or len(self.coeffs_pr) != 3 or len(self.coeffs_dsg) != 3:
            raise ValueError("coefficient vectors must have lengths 6 (ed), 3 (pr), 3 (dsg)")
        if self.coeffs_dsg[-1] != 1.0:
            raise ValueError("d_sg polynomial constant term must be exactly 1 so d_sg(0) = d0")

    @staticmethod
    def fixed(x_sh, d0: float = 0.18) -> "RhythmParams":
        """A rhythm model whose GH center sits at ``x_sh`` for every theta.

        All angle polynomials are zeroed and the radial scale is held at 1;
        the origin is back-shifted so gh_center(theta) == x_sh exactly.
        Useful for fixed-shoulder experiments and decoupled-IK tests.
        """
        x_sh = np.asarray(x_sh, dtype=float).reshape(3)
        return RhythmParams(
            d0=d0,
            coeffs_ed=(0.0,) * 6,
            coeffs_pr=(0.0,) * 3,
            coeffs_dsg=(0.0, 0.0, 1.0),
            origin=x_sh - np.array([0.0, d0, 0.0]),
        )


@dataclass(frozen=True, eq=False)
class GhState:
    """Rhythm outputs at one elevation: angles in degrees, lengths in meters."""

    theta: float
    phi_ed: float
    phi_pr: float
    d_sg: float
    x_sh: np.ndarray
    out_of_range: bool = False


def _clamp_theta(theta_deg: float) -> tuple[float, bool]:
    if theta_deg < 0.0:
        return 0.0, True
    if theta_deg > THETA_MAX_DEG:
        return THETA_MAX_DEG, True
    return float(theta_deg), False


def _angles_at(theta_deg: float, params: RhythmParams) -> tuple[float, float, float]:
    phi_ed = float(np.polyval(params.coeffs_ed, theta_deg))
    x_pr, _ = _pr_argument(theta_deg, params.pr_input)
    # degree 3..1 with zero constant term, evaluated by Horner
    phi_pr = float(np.polyval(params.coeffs_pr + (0.0,), x_pr))
    d_sg = params.d0 * float(np.polyval(params.coeffs_dsg, theta_deg))
    return phi_ed, phi_pr, d_sg


def _spherical_to_cart(phi_ed_deg: float, phi_pr_deg: float, d_sg: float, origin: np.ndarray) -> np.ndarray:
    e = np.radians(phi_ed_deg)
    p = np.radians(phi_pr_deg)
    return origin + d_sg * np.array([np.cos(e) * np.sin(p), np.cos(e) * np.cos(p), np.sin(e)])


def eval_rhythm(theta_deg: float, params: RhythmParams) -> GhState:
    """Evaluate the rhythm polynomials at an elevation given in degrees.

    Out-of-range elevations are clamped to [0, 180] and flagged rather than
    rejected, so that boundary-value iterates that transiently overshoot do
    not abort a solve; planners treat flagged states as infeasible.
    """
    theta, flagged = _clamp_theta(theta_deg)
    phi_ed, phi_pr, d_sg = _angles_at(theta, params)
    x_sh = _spherical_to_cart(phi_ed, phi_pr, d_sg, params.origin)
    return GhState(theta=theta, phi_ed=phi_ed, phi_pr=phi_pr, d_sg=d_sg,
                   x_sh=x_sh, out_of_range=flagged)


def gh_center(theta_deg: float, params: RhythmParams) -> np.ndarray:
    """GH joint-center position (meters, torso frame) at the given elevation."""
    theta, _ = _clamp_theta(theta_deg)
    phi_ed, phi_pr, d_sg = _angles_at(theta, params)
    return _spherical_to_cart(phi_ed, phi_pr, d_sg, params.origin)


def gh_center_derivative(theta_deg: float, params: RhythmParams) -> np.ndarray:
    """d(GH center)/d(theta) in meters per radian, by analytic differentiation.

    The polynomials are differentiated in their native degree variable and
    converted through the chain rule; the result is per radian of elevation.
    """
    theta, _ = _clamp_theta(theta_deg)
    phi_ed, phi_pr, d_sg = _angles_at(theta, params)

    ded = np.polyder(np.poly1d(params.coeffs_ed))
    dpr = np.polyder(np.poly1d(params.coeffs_pr + (0.0,)))
    ddsg = np.polyder(np.poly1d(params.coeffs_dsg))

    dphi_ed = float(ded(theta))                       # deg per deg
    x_pr, dx_pr = _pr_argument(theta, params.pr_input)
    dphi_pr = float(dpr(x_pr)) * dx_pr                # deg per deg
    dd_sg = params.d0 * float(ddsg(theta))            # m per deg

    e = np.radians(phi_ed)
    p = np.radians(phi_pr)
    ce, se = np.cos(e), np.sin(e)
    cp, sp = np.cos(p), np.sin(p)
    rhat = np.array([ce * sp, ce * cp, se])
    dr_de = np.array([-se * sp, -se * cp, ce])
    dr_dp = np.array([ce * cp, -ce * sp, 0.0])

    deg = np.pi / 180.0
    dx_ddeg = dd_sg * rhat + d_sg * (dr_de * dphi_ed * deg + dr_dp * dphi_pr * deg)
    return dx_ddeg * (180.0 / np.pi)
