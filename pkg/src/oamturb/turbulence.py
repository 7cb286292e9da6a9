"""Kolmogorov turbulence model: coherence kernel and Fried-parameter calibrations.

The atmosphere is treated as a random phase operation e^{i phi(r)} whose
time-averaged two-point statistics follow Kolmogorov theory:

    <e^{i phi(r1) - i phi(r2)}>_t = exp(-3.44 (|r1 - r2| / r0)^(5/3))

with r0 the Fried parameter, the transverse distance over which the RMS
phase aberration reaches about 1 rad. The single control parameter of the
whole simulation is the dimensionless ratio w0/r0 of beam size to Fried
parameter; all separations are passed in units of w0 so nothing else
enters the scattering quadrature.

Calibration constants (3.44 = 6.88/2 in the coherence function, the 3.0
broadening slope, the 3.02 horizontal-path coefficient) are module
defaults and can be overridden per call for sensitivity studies.
"""

import math
from dataclasses import dataclass

import numpy as np

# Phase structure function D(s) = 6.88 (s/r0)^(5/3); the coherence
# function is exp(-D/2).
STRUCTURE_COEFF = 6.88
COHERENCE_COEFF = STRUCTURE_COEFF / 2.0

# 1/e far-field radius of a long-exposure Gaussian beam:
# (w_le/w_dl)^2 = 1 + (3.0 * w0/r0)^2.
BROADENING_SLOPE = 3.0

# Horizontal-path Fried parameter r0 = 3.02 (k^2 L Cn^2)^(-3/5).
HORIZONTAL_FRIED_COEFF = 3.02


@dataclass(frozen=True)
class TurbulenceModel:
    """Turbulence strength seen by a beam, as the ratio w0/r0.

    ratio = 0 encodes the turbulence-free channel (r0 -> infinity).
    waist and fried may optionally pin the two scales individually (in
    meters) for link calculations; when both are given they must be
    consistent with ratio to machine precision.
    """

    ratio: float
    waist: float = None
    fried: float = None

    def __post_init__(self):
        if not self.ratio >= 0.0:
            raise ValueError("ratio w0/r0 must be >= 0")
        for name in ("waist", "fried"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be positive when given")
        if self.waist is not None and self.fried is not None:
            implied = self.waist / self.fried
            if not math.isclose(implied, self.ratio, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError(
                    f"ratio {self.ratio} inconsistent with waist/fried = {implied}"
                )

    @classmethod
    def from_scales(cls, waist, fried):
        """Model pinned by beam waist and Fried parameter (meters)."""
        return cls(ratio=waist / fried, waist=waist, fried=fried)


def coherence(model, s, coeff=COHERENCE_COEFF):
    """Two-point coherence exp(-coeff (s * ratio)^(5/3)).

    Parameters
    ----------
    model : TurbulenceModel
    s : float or ndarray
        Separation |r1 - r2| in units of the beam waist w0; must be >= 0.

    Returns
    -------
    float or ndarray in (0, 1], matching the shape of s.
    """
    s = np.asarray(s, dtype=float)
    out = np.exp(-coeff * (s * model.ratio) ** (5.0 / 3.0))
    return float(out) if out.ndim == 0 else out


def ratio_from_broadening(w_dl, w_le, slope=BROADENING_SLOPE):
    """Turbulence ratio w0/r0 from long-exposure far-field broadening.

    Parameters
    ----------
    w_dl : float
        1/e intensity radius of the diffraction-limited far-field spot.
    w_le : float
        1/e intensity radius of the long-exposure (time-averaged) spot;
        must be >= w_dl (a narrower averaged spot is unphysical).

    Returns
    -------
    float
        sqrt((w_le/w_dl)^2 - 1) / slope. Depends only on w_le/w_dl.
    """
    if not w_dl > 0.0:
        raise ValueError("diffraction-limited radius must be positive")
    if w_le < w_dl:
        raise ValueError(
            f"long-exposure radius {w_le} smaller than diffraction limit {w_dl}"
        )
    return math.sqrt((w_le / w_dl) ** 2 - 1.0) / slope


@dataclass(frozen=True)
class LinkBudget:
    """Horizontal free-space link parameters (SI units).

    The near-field scattering model requires the propagation distance to
    stay below the diffraction length z_R = pi w0^2 / lambda; near_field
    flags whether that holds.
    """

    wavelength: float  # m
    cn2: float         # refractive-index structure constant, m^(-2/3)
    waist: float       # 1/e beam field radius w0, m
    distance: float    # path length L, m

    def __post_init__(self):
        for name in ("wavelength", "cn2", "waist", "distance"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh_range(self):
        return math.pi * self.waist**2 / self.wavelength

    @property
    def near_field(self):
        return self.distance < self.rayleigh_range


@dataclass(frozen=True)
class LinkReport:
    """Result of a link-budget query (SI units)."""

    wavelength: float
    cn2: float
    waist: float
    fried: float
    ratio: float
    distance: float
    rayleigh_range: float
    near_field: bool


def fried_from_link(budget, coeff=HORIZONTAL_FRIED_COEFF):
    """Fried parameter of a horizontal path: coeff (k^2 L Cn^2)^(-3/5)."""
    k = budget.wavenumber
    return coeff * (k**2 * budget.distance * budget.cn2) ** (-3.0 / 5.0)


def link_distance_for_ratio(wavelength, cn2, waist, target_ratio,
                            coeff=HORIZONTAL_FRIED_COEFF):
    """Horizontal distance at which the link reaches a given w0/r0.

    Inverts the horizontal-path Fried formula for the distance L at
    r0 = waist / target_ratio. The near-field validity L < z_R is
    reported as a flag, not an error; a False flag means the scattering
    model is extrapolating beyond its regime.

    Returns
    -------
    LinkReport
    """
    if not target_ratio > 0.0:
        raise ValueError("target_ratio must be positive")
    probe = LinkBudget(wavelength, cn2, waist, 1.0)  # validates inputs
    fried = waist / target_ratio
    k = probe.wavenumber
    distance = (coeff / fried) ** (5.0 / 3.0) / (k**2 * cn2)
    budget = LinkBudget(wavelength, cn2, waist, distance)
    return LinkReport(
        wavelength=wavelength,
        cn2=cn2,
        waist=waist,
        fried=fried,
        ratio=target_ratio,
        distance=distance,
        rayleigh_range=budget.rayleigh_range,
        near_field=budget.near_field,
    )


def link_ratio_for_distance(wavelength, cn2, waist, distance,
                            coeff=HORIZONTAL_FRIED_COEFF):
    """Turbulence ratio w0/r0 reached after a given horizontal distance.

    Returns
    -------
    LinkReport
    """
    budget = LinkBudget(wavelength, cn2, waist, distance)
    fried = fried_from_link(budget, coeff=coeff)
    return LinkReport(
        wavelength=wavelength,
        cn2=cn2,
        waist=waist,
        fried=fried,
        ratio=waist / fried,
        distance=distance,
        rayleigh_range=budget.rayleigh_range,
        near_field=budget.near_field,
    )
