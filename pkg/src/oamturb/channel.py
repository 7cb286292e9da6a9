"""End-to-end channel metrics: coincidence curves and Shannon dimensionality.

With a flat azimuthal source spectrum and both analyzers sharing the
fiber radial mode, the coincidence probability between analyzers at
orientations alpha and beta depends only on delta = alpha - beta and
collapses to

    P(delta) = sum_D T_D |f_D(delta)|^2,
    f_D(delta) = sum_l c_l conj(c_{l+D}) e^{i l delta}

with the sum over signed offsets D and c_l the complex detection-state
amplitudes. This closed form is algebraically identical to the bilinear
form <A(alpha)| rho_A(beta) |A(alpha)> built from the averaged detection
operator; `coincidence_bilinear` exposes that route for cross-checks.
Because sum_l c_l conj(c_{l+D}) vanishes for D != 0 (pure-phase plates),
the peak height tracks the mode survival weight and total scrambling
flattens the curve, driving the dimensionality toward 1.

The Shannon dimensionality is the peak-to-average ratio of that pairing:
D = 2 pi P(0) / integral of P, evaluated either analytically from the
offset sums (`shannon_operator`) or by trapezoid on a sampled curve
(`shannon_from_curve`); the two coincide up to grid error.

Curves are normalized so the turbulence-free peak of the same plate is
exactly 1; turbulent curves share that scale, which keeps peak heights
comparable across turbulence strengths. All pairings use the
unnormalized averaged operator (its trace drops below 1 under turbulence
because light leaks into radial modes the fiber rejects); renormalizing
would break the peak-height correspondence.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .modes import AnalyzerState, dimensionality_no_turbulence
from .scattering import (
    DEFAULT_DL_MAX,
    DEFAULT_QUADRATURE,
    _check_windows,
    averaged_operator,
    coupling_table,
    purity_from_spectrum,
)
from .turbulence import TurbulenceModel

DEFAULT_GRID_POINTS = 721  # 0.5 degree steps over [-pi, pi]

# azimuthal_tail growth cap when auto-widening tables for strong turbulence
_MAX_DL = 72


def default_grid(points=DEFAULT_GRID_POINTS):
    """Uniform relative-orientation grid over [-pi, pi]."""
    points = int(points)
    if points < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(-math.pi, math.pi, points)


@dataclass(frozen=True)
class CurveProvenance:
    """What a coincidence curve was computed from."""

    plate: str
    ratio: float
    l_max: int
    dl_max: int


@dataclass(frozen=True)
class CoincidenceCurve:
    """Sampled coincidence probability versus relative plate orientation."""

    delta: np.ndarray
    values: np.ndarray
    normalization: str
    provenance: CurveProvenance

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if d.ndim != 1 or d.size < 2 or v.shape != d.shape:
            raise ValueError("delta and values must be matching 1-d arrays")
        if np.any(v < 0.0):
            raise ValueError("coincidence values must be non-negative")
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "values", v)

    @property
    def peak(self):
        return float(self.values.max())

    @property
    def area(self):
        return float(np.trapezoid(self.values, self.delta))


@dataclass(frozen=True)
class DimensionalityReport:
    """Channel metrics at one turbulence strength."""

    ratio: float
    d_operator: float
    d_curve: float
    purity: float
    plate: str


def _offset_pairings(spectrum, dl_max):
    """Pairing rows pair[D, l] = c_l conj(c_{l+D}) for signed offsets D.

    Returns (signed offsets array, matrix of shape (2*dl_max+1, window)).
    Indices beyond the spectrum window contribute nothing.
    """
    c = spectrum.coefficients
    n = c.size
    offsets = np.arange(-dl_max, dl_max + 1)
    pair = np.zeros((offsets.size, n), dtype=complex)
    for i, d in enumerate(offsets):
        k = abs(int(d))
        if k >= n:
            continue
        if d >= 0:
            pair[i, : n - k] = c[: n - k] * c[k:].conj()
        else:
            pair[i, k:] = c[k:] * c[: n - k].conj()
    return offsets, pair


def coincidence_curve(spectrum, table, grid=None, plate_label=""):
    """Coincidence curve P(delta) for one turbulent arm.

    Parameters
    ----------
    spectrum : AngularSpectrum
        Analyzer spectrum (both analyzers are identical).
    table : CouplingTable
        Coupling table at the channel's turbulence strength; its offset
        window must be wide enough for the spectrum (checked).
    grid : ndarray, optional
        Relative-orientation samples; defaults to 721 points on [-pi, pi].

    Returns
    -------
    CoincidenceCurve
        Normalized so the turbulence-free peak of this plate equals 1.
    """
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")

    norm = float(spectrum.weights.sum()) ** 2
    if norm <= 0.0:
        raise ValueError("spectrum has no weight")
    _check_windows(spectrum, table)

    offsets, pair = _offset_pairings(spectrum, table.dl_max)
    phases = np.exp(1j * np.outer(grid, spectrum.ls))
    amps = phases @ pair.T  # f_D(delta) for every signed offset
    power = np.abs(amps) ** 2
    values = (power @ table.values[np.abs(offsets)]) / norm

    provenance = CurveProvenance(
        plate=plate_label, ratio=table.ratio,
        l_max=int(spectrum.l_max), dl_max=table.dl_max,
    )
    return CoincidenceCurve(
        delta=grid, values=values,
        normalization="unit peak at zero turbulence", provenance=provenance,
    )


def coincidence_bilinear(spectrum, table, alpha, beta):
    """Coincidence probability via the averaged-operator bilinear form.

    Builds the averaged detection operator at plate orientation beta and
    evaluates <A(alpha)| rho |A(alpha)>, normalized like
    `coincidence_curve`. Slower than the closed form; used to cross-check
    it and the covariance in alpha - beta.
    """
    op = averaged_operator(AnalyzerState(spectrum, alpha=beta), table)
    coeff = np.zeros(op.matrix.shape[0], dtype=complex)
    idx = spectrum.ls - op.l_min
    coeff[idx] = AnalyzerState(spectrum, alpha=alpha).amplitudes()
    norm = float(spectrum.weights.sum()) ** 2
    return float(np.real(coeff.conj() @ op.matrix @ coeff)) / norm


def shannon_operator(spectrum, table):
    """Shannon dimensionality from the averaged detection operators.

    Peak-to-average ratio of the two-analyzer pairing: the aligned-plate
    pairing sum_D T_D |f_D(0)|^2 divided by its average over relative
    orientation, sum_D T_D sum_l lambda_l lambda_{l+D}. Equals the
    turbulence-free participation ratio at zero turbulence and the
    curve-extracted 2 pi peak / area identically (up to grid error).
    """
    _check_windows(spectrum, table)
    offsets, pair = _offset_pairings(spectrum, table.dl_max)
    t = table.values[np.abs(offsets)]
    peak = float(t @ np.abs(pair.sum(axis=1)) ** 2)
    lam = spectrum.weights
    q = np.array([
        float(lam[: lam.size - abs(d)] @ lam[abs(d):]) if abs(d) < lam.size
        else 0.0
        for d in offsets
    ])
    mean = float(t @ q)
    if mean <= 0.0:
        raise ValueError("orientation-averaged pairing has no weight")
    return peak / mean


def shannon_from_curve(curve):
    """Shannon dimensionality extracted from a coincidence curve.

    Returns 2*pi * peak / area with the area taken by the trapezoid rule
    on the stored grid. The grid must be dense enough that halving it
    moves the area by less than about 1.5% (trapezoid error well under
    0.5%); a coarser curve raises ValueError.
    """
    peak = curve.peak
    if peak <= 0.0:
        raise ValueError("coincidence curve is identically zero")
    area = curve.area
    if curve.delta.size >= 5:
        coarse = float(np.trapezoid(curve.values[::2], curve.delta[::2]))
        if abs(area - coarse) > 0.015 * area:
            raise ValueError(
                "coincidence grid too coarse for a reliable area estimate"
            )
    return 2.0 * math.pi * peak / area


def _widened_table(ratio, dl_max, spec):
    """Coupling table with enough offsets for the averaging contracts."""
    dl = dl_max
    while True:
        table = coupling_table(TurbulenceModel(ratio), dl, spec=spec)
        tail = table.azimuthal_tail
        if tail is None or tail < 1e-3 or dl >= _MAX_DL:
            return table
        dl = min(dl + 6, _MAX_DL)


def dimensionality_scan(spectrum, ratios, method="both",
                        dl_max=DEFAULT_DL_MAX, grid=None,
                        spec=DEFAULT_QUADRATURE, plate_label=""):
    """Channel dimensionality versus turbulence strength.

    Parameters
    ----------
    spectrum : AngularSpectrum
    ratios : sequence of float
        Sorted non-negative turbulence strengths w0/r0.
    method : {'operator', 'curve', 'both'}
        Which dimensionality estimates to compute; the other is reported
        as NaN. The operator route uses the trace ratio, the curve route
        2*pi*peak/area on the sampled coincidence curve.
    dl_max : int
        Starting offset window for the coupling tables; widened
        automatically while more than 1e-3 weight lies beyond it.

    Returns
    -------
    list of DimensionalityReport

    Raises
    ------
    NumericalError
        If the operator dimensionality fails to decrease monotonically
        with ratio (beyond 1e-3 quadrature slack), or exceeds its
        turbulence-free bound.
    """
    if method not in ("operator", "curve", "both"):
        raise ValueError(f"unknown method: {method!r}")
    ratios = [float(r) for r in ratios]
    if any(r < 0.0 for r in ratios):
        raise ValueError("ratios must be >= 0")
    if sorted(ratios) != ratios:
        raise ValueError("ratios must be sorted ascending")

    d0 = dimensionality_no_turbulence(spectrum)
    reports = []
    for ratio in ratios:
        table = _widened_table(ratio, dl_max, spec)
        d_op = d_curve = math.nan
        if method in ("operator", "both"):
            d_op = shannon_operator(spectrum, table)
        if method in ("curve", "both"):
            curve = coincidence_curve(spectrum, table, grid=grid,
                                      plate_label=plate_label)
            d_curve = shannon_from_curve(curve)
        rep = DimensionalityReport(
            ratio=ratio, d_operator=d_op, d_curve=d_curve,
            purity=purity_from_spectrum(spectrum, table), plate=plate_label,
        )
        for d in (rep.d_operator, rep.d_curve):
            if not math.isnan(d) and not 1.0 - 1e-9 <= d <= d0 + 1e-6:
                raise NumericalError(
                    f"dimensionality {d} outside [1, {d0}] at ratio {ratio}"
                )
        reports.append(rep)

    track = [r.d_operator for r in reports] \
        if method in ("operator", "both") else [r.d_curve for r in reports]
    for prev, cur in zip(track, track[1:]):
        if cur > prev + 1e-3:
            raise NumericalError(
                "dimensionality failed to decrease monotonically with ratio"
            )
    return reports
