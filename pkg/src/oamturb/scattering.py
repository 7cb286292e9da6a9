"""Time-averaged turbulent scattering of OAM detection states.

Averaging the random phase operation over time turns a detection state
into a mixed operator. Because the coherence kernel depends only on the
point separation and every detection mode shares the same fiber radial
profile g(r) = 2 exp(-r^2) (waist units), the four-dimensional average
collapses to one angular integral and two radial integrals:

    K_D(r1, r2) = (1/2pi) int_0^{2pi} cos(D phi)
                  * coherence(sqrt(r1^2 + r2^2 - 2 r1 r2 cos phi)) dphi
    T_D = int int g^2(r1) g^2(r2) K_D(r1, r2) r1 r2 dr1 dr2

T_D is the probability weight for an OAM detection mode to be scattered
to a neighbor offset by D while remaining in the fiber's radial mode; it
does not depend on the absolute mode index. The matrix elements of the
time-averaged detection operator follow as

    rho[m, m'] = e^{i (m - m') alpha} sum_D c_{m+D} conj(c_{m'+D}) T_D

with the sum over signed offsets D and c_l the complex mode amplitudes
of the detection state. The amplitude phases matter: for any pure-phase
plate sum_l c_l conj(c_{l+d}) vanishes for d != 0, which makes the
operator purity independent of the plate in use; stripping the phases
(using sqrt(lambda) instead of c) would fake strong coherence between
scattered neighbors.

Quadrature: radial integrals use Gauss-Legendre on [0, 4] (the e^{-2r^2}
weight is below 2e-14 outside); the angular integral uses Gauss-Legendre
on [cusp_window, pi] plus a cubically graded rule on [0, cusp_window]
that flattens the (separation)^(5/3) cusp the kernel develops at phi = 0
when r1 = r2. Every table is recomputed with doubled node counts and the
two estimates must agree to 1e-4.

All results are plain arrays combined with fixed summation order, so
per-offset entries and per-node work can be farmed out to workers and
reduced deterministically regardless of worker count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .modes import AnalyzerState, AngularSpectrum
from .turbulence import TurbulenceModel, coherence

RADIAL_CUTOFF = 4.0          # waist units; g^2 weight < 2e-14 beyond
CONVERGENCE_TOL = 1e-4       # doubling test threshold for every T_D
DEFAULT_DL_MAX = 12
AZIMUTHAL_TAIL_TOL = 1e-3    # max tolerated weight beyond the stored offsets
BOUNDARY_WEIGHT_TOL = 1e-3   # max tolerated spectrum weight at the window edge


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the reduced scattering integrals."""

    n_radial: int = 64
    n_angular: int = 96
    n_cusp: int = 32
    cusp_window: float = 0.3  # rad

    def __post_init__(self):
        if min(self.n_radial, self.n_angular, self.n_cusp) < 4:
            raise ValueError("node counts must be at least 4")
        if not 0.0 < self.cusp_window < np.pi:
            raise ValueError("cusp_window must lie in (0, pi)")

    def doubled(self):
        return QuadratureSpec(
            2 * self.n_radial, 2 * self.n_angular, 2 * self.n_cusp,
            self.cusp_window,
        )


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class QuadratureMeta:
    """Provenance of a coupling table produced by the analytic engine."""

    n_radial: int
    n_angular: int
    n_cusp: int
    cusp_window: float
    est_error: float        # max |T(fine) - T(coarse)| over offsets
    coherence_mass: float   # sum of T_D over all offsets (radial leakage only)


@dataclass(frozen=True)
class MonteCarloMeta:
    """Provenance of a coupling table produced by the phase-screen oracle."""

    realizations: int
    grid: int
    extent: float
    seed: int
    subharmonic_depth: int
    input_mode: str


@dataclass(frozen=True)
class CouplingTable:
    """Turbulence-induced OAM transfer weights T_D for offsets 0..dl_max.

    Negative offsets follow by symmetry, T_{-D} = T_D. stderr is None for
    analytic tables and holds per-entry standard errors for Monte Carlo
    ones. meta records how the table was produced.
    """

    ratio: float
    values: np.ndarray
    stderr: np.ndarray = None
    meta: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-d sequence")
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            e = np.asarray(self.stderr, dtype=float)
            if e.shape != v.shape:
                raise ValueError("stderr must match values in shape")
            object.__setattr__(self, "stderr", e)

    @property
    def dl_max(self):
        return self.values.size - 1

    def t(self, delta):
        """T at signed offset delta (zero beyond the stored window)."""
        d = abs(int(delta))
        return float(self.values[d]) if d <= self.dl_max else 0.0

    @property
    def total(self):
        """Sum over all signed offsets: T_0 + 2 sum_{D>=1} T_D."""
        return float(self.values[0] + 2.0 * self.values[1:].sum())

    @property
    def azimuthal_tail(self):
        """Estimated weight sitting beyond the stored offsets.

        The all-offset sum equals the purely radial coherence mass, so
        the tail is coherence_mass - total when that mass is known.
        """
        mass = getattr(self.meta, "coherence_mass", None)
        if mass is None:
            return None
        return max(float(mass) - self.total, 0.0)

    def validate(self, monotone=True):
        """Check the table invariants, with noise slack for MC tables."""
        slack = 3.0 * self.stderr if self.stderr is not None else 1e-12
        upper = np.broadcast_to(np.atleast_1d(slack), self.values.shape)
        if np.any(self.values < -upper) or np.any(self.values > 1.0 + upper):
            raise ValueError("coupling weights must lie in [0, 1]")
        if self.total > 1.0 + float(np.sum(upper)):
            raise ValueError("coupling weights must sum to at most 1")
        if monotone and self.values.size > 1:
            rise = np.diff(self.values)
            limit = upper[1:] + upper[:-1]
            if np.any(rise > limit):
                raise ValueError("coupling weights must not increase with offset")
        return self


def _radial_rule(n):
    """Gauss-Legendre nodes/weights on [0, RADIAL_CUTOFF] with the
    g^2(r) r measure folded in."""
    x, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * RADIAL_CUTOFF * (x + 1.0)
    w = 0.5 * RADIAL_CUTOFF * w
    return r, w * 4.0 * np.exp(-2.0 * r**2) * r


def _angular_rule(spec):
    """Nodes/weights for (1/pi) int_0^pi ... dphi with a cubically graded
    segment on [0, cusp_window] and Gauss-Legendre on the rest."""
    xc, wc = np.polynomial.legendre.leggauss(spec.n_cusp)
    t = 0.5 * (xc + 1.0)
    wt = 0.5 * wc
    phi_c = spec.cusp_window * t**3
    w_c = spec.cusp_window * 3.0 * t**2 * wt

    xm, wm = np.polynomial.legendre.leggauss(spec.n_angular)
    half = 0.5 * (np.pi - spec.cusp_window)
    phi_m = spec.cusp_window + half * (xm + 1.0)
    w_m = half * wm

    phi = np.concatenate([phi_c, phi_m])
    wgt = np.concatenate([w_c, w_m]) / np.pi
    return phi, wgt


def _pair_coherence(model, r1, r2, phi):
    """coherence(s) on the (r1, r2, phi) tensor grid."""
    s2 = (
        r1[:, None, None] ** 2
        + r2[None, :, None] ** 2
        - 2.0 * r1[:, None, None] * r2[None, :, None] * np.cos(phi)[None, None, :]
    )
    return coherence(model, np.sqrt(np.maximum(s2, 0.0)))


def angular_kernel(model, offset, r1, r2, spec=DEFAULT_QUADRATURE):
    """Reduced angular kernel K_offset(r1, r2) for one radius pair.

    Returns (1/2pi) int_0^{2pi} cos(offset * phi) coherence(s(phi)) dphi
    with s the chord distance between points at radii r1, r2 (waist
    units) separated by azimuth phi. Even in the offset and bounded by
    the offset-0 value.
    """
    if r1 < 0.0 or r2 < 0.0:
        raise ValueError("radii must be >= 0")
    phi, wgt = _angular_rule(spec)
    s = np.sqrt(np.maximum(r1**2 + r2**2 - 2.0 * r1 * r2 * np.cos(phi), 0.0))
    return float(np.dot(wgt * np.cos(offset * phi), coherence(model, s)))


def _table_values(model, dl_max, spec):
    """T_D for D = 0..dl_max plus the all-offset coherence mass."""
    r, wr = _radial_rule(spec.n_radial)
    phi, wphi = _angular_rule(spec)
    kernel = _pair_coherence(model, r, r, phi)
    # g(phi) = radial double integral of the coherence at fixed azimuth
    radial = np.einsum("i,j,ijk->k", wr, wr, kernel)
    offsets = np.arange(dl_max + 1)
    values = np.cos(np.outer(offsets, phi)) @ (wphi * radial)
    # all-offset sum: same radial integral with the kernel at phi = 0
    sep = np.abs(r[:, None] - r[None, :])
    mass = float(wr @ coherence(model, sep) @ wr)
    return values, mass


def coupling_table(model, dl_max=DEFAULT_DL_MAX, spec=DEFAULT_QUADRATURE):
    """Coupling table T_D for D in [0, dl_max] at the model's ratio.

    The table is evaluated twice, at `spec` and at doubled node counts;
    if any entry moves by more than 1e-4 a ConvergenceError carrying both
    estimates is raised. The refined values are returned.

    Parameters
    ----------
    model : TurbulenceModel
    dl_max : int
        Largest offset to tabulate (>= 0).

    Returns
    -------
    CouplingTable
    """
    dl_max = int(dl_max)
    if dl_max < 0:
        raise ValueError("dl_max must be >= 0")
    if model.ratio == 0.0:
        values = np.zeros(dl_max + 1)
        values[0] = 1.0
        meta = QuadratureMeta(
            spec.n_radial, spec.n_angular, spec.n_cusp, spec.cusp_window,
            est_error=0.0, coherence_mass=1.0,
        )
        return CouplingTable(model.ratio, values, meta=meta).validate()

    coarse, _ = _table_values(model, dl_max, spec)
    fine_spec = spec.doubled()
    fine, mass = _table_values(model, dl_max, fine_spec)
    err = float(np.max(np.abs(fine - coarse)))
    if err > CONVERGENCE_TOL:
        raise ConvergenceError(
            f"coupling table drifted by {err:.2e} (> {CONVERGENCE_TOL:.0e}) "
            f"between {spec} and doubled nodes",
            coarse=coarse, fine=fine,
        )
    fine[np.abs(fine) < 1e-15] = 0.0
    meta = QuadratureMeta(
        fine_spec.n_radial, fine_spec.n_angular, fine_spec.n_cusp,
        fine_spec.cusp_window, est_error=err, coherence_mass=mass,
    )
    return CouplingTable(model.ratio, fine, meta=meta).validate()


@dataclass(frozen=True)
class AveragedDetectionOperator:
    """Time-averaged detection operator on a finite OAM window.

    matrix[m - l_min, m' - l_min] holds rho[m, m']. Self-adjoint and
    positive semidefinite by construction; its trace is at most 1, with
    equality only in the turbulence-free, untruncated limit.
    """

    l_min: int
    matrix: np.ndarray
    spectrum: AngularSpectrum
    ratio: float
    alpha: float = 0.0

    @property
    def ls(self):
        return np.arange(self.l_min, self.l_min + self.matrix.shape[0])

    @property
    def trace(self):
        return float(self.matrix.trace().real)

    @property
    def purity(self):
        return float(np.sum(np.abs(self.matrix) ** 2))


def _offset_vectors(spectrum, dl_max):
    """Amplitudes c_{m+D} for every signed offset D, on the widened window.

    Returns (window_l_min, matrix V of shape (window, 2*dl_max+1)) with
    column index D + dl_max.
    """
    pad = np.concatenate([
        np.zeros(2 * dl_max, dtype=complex),
        spectrum.coefficients,
        np.zeros(2 * dl_max, dtype=complex),
    ])
    window = spectrum.weights.size + 2 * dl_max
    cols = [pad[dl_max + d: dl_max + d + window] for d in range(-dl_max, dl_max + 1)]
    return spectrum.l_min - dl_max, np.column_stack(cols)


def _signed_t(table):
    """T at signed offsets -dl_max..dl_max as a flat vector."""
    return np.concatenate([table.values[:0:-1], table.values])


def _check_windows(spectrum, table,
                   tail_tol=AZIMUTHAL_TAIL_TOL,
                   boundary_tol=BOUNDARY_WEIGHT_TOL):
    tail = table.azimuthal_tail
    if tail is not None and tail > tail_tol:
        raise ValueError(
            f"coupling table window too small: weight {tail:.2e} beyond "
            f"offset {table.dl_max} exceeds {tail_tol:.0e}"
        )
    # stepped plates have periodic exact zeros, so probe a few entries in
    # from each edge rather than the single outermost weight
    probe = min(4, spectrum.weights.size)
    edge = max(spectrum.weights[:probe].max(),
               spectrum.weights[-probe:].max())
    if edge > boundary_tol:
        raise ValueError(
            f"spectrum window too small: boundary weight {edge:.2e} "
            f"exceeds {boundary_tol:.0e}"
        )


def averaged_operator(state, table):
    """Time-averaged detection operator of an analyzer under turbulence.

    Parameters
    ----------
    state : AnalyzerState
        Detection state (spectrum plus plate orientation alpha).
    table : CouplingTable
        Must leave less than 1e-3 weight beyond its largest offset, and
        the state's spectrum must be negligible at its window edge.

    Returns
    -------
    AveragedDetectionOperator
    """
    spectrum = state.spectrum
    _check_windows(spectrum, table)
    l_min, vecs = _offset_vectors(spectrum, table.dl_max)
    base = (vecs * _signed_t(table)) @ vecs.conj().T
    ls = np.arange(l_min, l_min + base.shape[0])
    phase = np.exp(1j * state.alpha * ls)
    matrix = base * np.outer(phase, phase.conj())
    return AveragedDetectionOperator(
        l_min=l_min, matrix=matrix, spectrum=spectrum,
        ratio=table.ratio, alpha=state.alpha,
    )


def purity(op):
    """Purity trace(rho^2) = sum |rho[m, m']|^2 of an averaged operator."""
    return op.purity


def purity_from_spectrum(spectrum, table):
    """Purity of the averaged detection operator, without building it.

    Works on the offset Gram matrix instead of the full mode window, and
    is manifestly independent of the plate orientation (the orientation
    phases cancel in the moduli). For pure-phase plates the result is
    close to the plate-independent value sum over signed D of T_D^2.
    """
    _check_windows(spectrum, table)
    _, vecs = _offset_vectors(spectrum, table.dl_max)
    scaled = vecs * np.sqrt(_signed_t(table))
    gram = scaled.conj().T @ scaled
    return float(np.sum(np.abs(gram) ** 2))


def orientation_averaged_weights(spectrum, table):
    """Diagonal of the operator additionally averaged over orientation.

    Averaging over the plate orientation removes every off-diagonal
    element, leaving d_m = sum_D lambda_{m+D} T_D on the widened window.

    Returns
    -------
    (window_l_min, ndarray of d_m)
    """
    _check_windows(spectrum, table)
    l_min, vecs = _offset_vectors(spectrum, table.dl_max)
    d = (np.abs(vecs) ** 2) @ _signed_t(table)
    return l_min, d
