"""Random Kolmogorov phase screens: the Monte Carlo oracle.

Screens are drawn by the spectral (FFT) method with subharmonic
low-frequency augmentation, from the phase power spectral density

    Phi(f) = SPECTRAL_COEFF * r0^(-5/3) * f^(-11/3)

with f in cycles per waist unit. The coefficient is fixed analytically so
that the ensemble structure function is exactly the Kolmogorov form
6.88 (s/r0)^(5/3) in the continuum limit; on a sampled grid the
structure-function band test is the contract that decides whether screens
are usable, not the spectral convention. The innermost FFT ring and the
subharmonic patches below it carry each cell's integrated power at its
power-weighted effective frequency (the density varies by orders of
magnitude across those cells, so center sampling starves the large-scale
power while naive cell averaging overweights it).

Everything is deterministic: a master seed is split into one child seed
per realization (fixed mapping, independent of any execution order), and
all reductions run in a fixed order.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gamma as _gamma

from .errors import CalibrationError
from .modes import AngularSpectrum, PhasePlate, plate_spectrum
from .scattering import CouplingTable, MonteCarloMeta
from .turbulence import STRUCTURE_COEFF, coherence

# Mellin-transform value of int_0^inf x^(-8/3) (1 - J0(x)) dx, which links
# the f^(-11/3) spectral density to the (s/r0)^(5/3) structure function.
_BESSEL_MOMENT = (
    2.0 ** (-8.0 / 3.0) * (6.0 / 5.0) * _gamma(1.0 / 6.0) / _gamma(11.0 / 6.0)
)
SPECTRAL_COEFF = STRUCTURE_COEFF / (
    4.0 * math.pi * (2.0 * math.pi) ** (5.0 / 3.0) * _BESSEL_MOMENT
)

DEFAULT_GRID = 512
DEFAULT_EXTENT = 8.0       # waist units
# Subharmonic rings cover scales up to 3^depth times the grid extent.
# Kolmogorov tilt power converges slowly (3^(-p/3) per ring), so the
# structure-function band test up to extent/4 needs about 12 rings.
DEFAULT_SUBHARMONICS = 12
STRUCTURE_BAND_TOL = 0.10  # relative tolerance of the band test

# far-field radii are 1/e FIELD radii (intensity e^-2), the same
# convention as the beam waist itself
_FIELD_LEVEL = math.exp(-2.0)


@dataclass(frozen=True)
class PhaseScreen:
    """One sampled random-phase realization on an N x N grid.

    values holds phase in radians, row-major, with x varying along the
    last axis; the grid spans `extent` waist units in each direction.
    """

    values: np.ndarray
    extent: float
    ratio: float
    seed: int = None
    subharmonic_depth: int = DEFAULT_SUBHARMONICS

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def dx(self):
        return self.extent / self.n


def _check_grid(n, extent):
    n = int(n)
    if n < 128 or n & (n - 1):
        raise ValueError("grid size must be a power of two, at least 128")
    if extent < 8.0:
        raise ValueError("extent must be at least 8 waist units")
    return n, float(extent)


def _psd(f_mag, r0):
    psd = np.zeros_like(f_mag)
    nonzero = f_mag > 0.0
    psd[nonzero] = (
        SPECTRAL_COEFF * r0 ** (-5.0 / 3.0) * f_mag[nonzero] ** (-11.0 / 3.0)
    )
    return psd


def _cell_moments(fx0, fy0, width, r0, order=16):
    """Integrated power and its fx^2, fy^2 centroids over a frequency cell."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * width * x
    w = 0.5 * width * w
    gx = fx0 + x[:, None]
    gy = fy0 + x[None, :]
    vals = _psd(np.sqrt(gx**2 + gy**2), r0)
    var = float(w @ vals @ w)
    mx2 = float(w @ (vals * gx**2) @ w) / var
    my2 = float(w @ (vals * gy**2) @ w) / var
    return var, mx2, my2


def _ring_cells(width, r0, split=1):
    """Low-frequency ring around an excluded center cell of equal width.

    The eight cells of the 3x3 patch are represented by their integrated
    power placed at the power-weighted effective frequency, which keeps
    the (long) quadratic contribution to the structure function exact;
    naive center placement misplaces the steeply varying f^(-11/3) power
    by factors of several. split subdivides each cell (split x split) for
    the innermost rings, whose cells are wide enough that a single
    frequency misrepresents the oscillatory weight at usable separations.
    Returns rows of (fx, fy, std amplitude); the sign pattern keeps the
    ensemble statistics even under both axis reflections.
    """
    centers = [
        (width, 0.0), (-width, 0.0), (0.0, width), (0.0, -width),
        (width, width), (-width, width), (width, -width), (-width, -width),
    ]
    cells = []
    if split == 1:
        for cx, cy in centers:
            var, mx2, my2 = _cell_moments(cx, cy, width, r0)
            fx = math.copysign(math.sqrt(mx2), cx) if cx else 0.0
            fy = math.copysign(math.sqrt(my2), cy) if cy else 0.0
            cells.append((fx, fy, math.sqrt(var)))
        return cells
    sub = width / split
    offs = (np.arange(split) - (split - 1) / 2.0) * sub
    for cx, cy in centers:
        for ox in offs:
            for oy in offs:
                fx0, fy0 = cx + ox, cy + oy
                var, mx2, my2 = _cell_moments(fx0, fy0, sub, r0)
                cells.append((
                    math.copysign(math.sqrt(mx2), fx0),
                    math.copysign(math.sqrt(my2), fy0),
                    math.sqrt(var),
                ))
    return cells


class _ScreenSampler:
    """Precomputed spectral tables; draw() yields one screen per generator."""

    def __init__(self, ratio, n, extent, depth):
        self.ratio = float(ratio)
        self.n = int(n)
        self.extent = float(extent)
        self.depth = int(depth)
        if self.ratio == 0.0:
            return
        r0 = 1.0 / self.ratio
        df = 1.0 / self.extent

        # FFT part: everything outward of the first frequency ring; bins
        # in the steep inner rings carry their cell-integrated power
        # instead of the center-sampled density
        f1 = (np.arange(n) - n // 2) * df
        fx, fy = np.meshgrid(f1, f1)
        amp = np.sqrt(_psd(np.sqrt(fx**2 + fy**2), r0)) * df
        c = n // 2
        for i in range(-16, 17):
            for j in range(-16, 17):
                ring = max(abs(i), abs(j))
                if ring < 2 or ring > 16:
                    continue
                var, _, _ = _cell_moments(abs(i) * df, abs(j) * df, df, r0,
                                          order=8)
                amp[c + j, c + i] = math.sqrt(var)
        amp[c - 1: c + 2, c - 1: c + 2] = 0.0
        self._amp_fft = amp

        # ring 0 replaces the zeroed FFT ring; deeper rings (cell width
        # df/3^p) supply ever larger scales, whose tilt still feeds the
        # structure function at usable separations
        cells = []
        for p in range(self.depth + 1):
            cells.extend(_ring_cells(df / 3.0**p, r0, split=2 if p < 2 else 1))
        cells = np.array(cells)
        x1 = (np.arange(n) - n // 2) * (self.extent / n)
        self._amps = cells[:, 2]
        self._ex = np.exp(2j * math.pi * np.outer(cells[:, 0], x1))
        self._ey = np.exp(2j * math.pi * np.outer(cells[:, 1], x1))

    def draw(self, rng):
        n = self.n
        if self.ratio == 0.0:
            return np.zeros((n, n))
        draws = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        screen = np.fft.ifft2(np.fft.ifftshift(draws * self._amp_fft)).real
        screen *= n * n
        k = self._amps.size
        cw = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * self._amps
        screen += ((self._ey * cw[:, None]).T @ self._ex).real
        return screen - screen.mean()


def generate_screen(model, n=DEFAULT_GRID, extent=DEFAULT_EXTENT, seed=0,
                    subharmonic_depth=DEFAULT_SUBHARMONICS):
    """Draw one Kolmogorov phase screen.

    Parameters
    ----------
    model : TurbulenceModel
        ratio = 0 yields an identically zero screen.
    n : int
        Grid size, a power of two >= 128.
    extent : float
        Physical side length in waist units, >= 8.
    seed : int
        Fixed (seed, parameters) give a bit-identical screen.

    Returns
    -------
    PhaseScreen
    """
    n, extent = _check_grid(n, extent)
    sampler = _ScreenSampler(model.ratio, n, extent, subharmonic_depth)
    values = sampler.draw(np.random.default_rng(seed))
    return PhaseScreen(values=values, extent=extent, ratio=model.ratio,
                       seed=seed if isinstance(seed, int) else None,
                       subharmonic_depth=subharmonic_depth)


def _child_rngs(seed, count):
    """One independent generator per realization, fixed mapping."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(c) for c in children]


def structure_function_estimate(model, separations_px, realizations,
                                seed=0, n=DEFAULT_GRID, extent=DEFAULT_EXTENT,
                                subharmonic_depth=DEFAULT_SUBHARMONICS):
    """Ensemble structure function at integer pixel separations.

    Averages (phi(x1) - phi(x2))^2 over both grid axes and the ensemble.

    Returns
    -------
    (separations in waist units, estimated structure function values)
    """
    n, extent = _check_grid(n, extent)
    separations_px = np.asarray(separations_px, dtype=int)
    sampler = _ScreenSampler(model.ratio, n, extent, subharmonic_depth)
    acc = np.zeros(separations_px.size)
    for rng in _child_rngs(seed, realizations):
        phi = sampler.draw(rng)
        for i, k in enumerate(separations_px):
            dx_ax = phi[:, k:] - phi[:, :-k]
            dy_ax = phi[k:, :] - phi[:-k, :]
            acc[i] += 0.5 * (np.mean(dx_ax**2) + np.mean(dy_ax**2))
    return separations_px * (extent / n), acc / realizations


def _band_separations(ratio, n, extent):
    """Pixel separations spanning [0.1 r0, min(2 r0, extent/4)]."""
    r0 = 1.0 / ratio
    dx = extent / n
    lo = max(int(math.ceil(0.1 * r0 / dx)), 1)
    hi = int(math.floor(min(2.0 * r0, extent / 4.0) / dx))
    if hi <= lo:
        raise ValueError("grid cannot resolve the validation band")
    return np.unique(np.geomspace(lo, hi, 12).round().astype(int))


def validate_structure_function(model, realizations=500, seed=0,
                                n=DEFAULT_GRID, extent=DEFAULT_EXTENT,
                                subharmonic_depth=DEFAULT_SUBHARMONICS,
                                tol=STRUCTURE_BAND_TOL):
    """Check screens against the Kolmogorov structure function.

    Compares the ensemble structure function with 6.88 (s/r0)^(5/3) for
    separations in [0.1 r0, min(2 r0, extent/4)] and raises
    CalibrationError naming the failing separation band if any point is
    off by more than `tol` (relative).

    Returns
    -------
    (separations, estimates, targets) on success.
    """
    if model.ratio == 0.0:
        raise ValueError("structure-function check needs ratio > 0")
    if realizations < 100:
        raise ValueError("need at least 100 realizations")
    ks = _band_separations(model.ratio, n, extent)
    seps, est = structure_function_estimate(
        model, ks, realizations, seed=seed, n=n, extent=extent,
        subharmonic_depth=subharmonic_depth,
    )
    target = STRUCTURE_COEFF * (seps * model.ratio) ** (5.0 / 3.0)
    rel = est / target - 1.0
    bad = np.abs(rel) > tol
    if np.any(bad):
        lo, hi = seps[bad].min(), seps[bad].max()
        worst = float(np.max(np.abs(rel)))
        raise CalibrationError(
            f"structure function off by {worst:.1%} (> {tol:.0%}) for "
            f"separations in [{lo:.3g}, {hi:.3g}] waist units",
            band=(float(lo), float(hi)),
        )
    return seps, est, target


def ensemble_coherence(model, separations_px, realizations, seed=0,
                       n=DEFAULT_GRID, extent=DEFAULT_EXTENT,
                       subharmonic_depth=DEFAULT_SUBHARMONICS):
    """Ensemble estimate of <e^{i phi(x1) - i phi(x2)}> at pixel separations.

    Returns
    -------
    (separations in waist units, |ensemble mean| values, model targets)
    """
    n, extent = _check_grid(n, extent)
    separations_px = np.asarray(separations_px, dtype=int)
    sampler = _ScreenSampler(model.ratio, n, extent, subharmonic_depth)
    acc = np.zeros(separations_px.size, dtype=complex)
    for rng in _child_rngs(seed, realizations):
        phi = sampler.draw(rng)
        for i, k in enumerate(separations_px):
            diff_x = phi[:, k:] - phi[:, :-k]
            diff_y = phi[k:, :] - phi[:-k, :]
            acc[i] += 0.5 * (np.mean(np.exp(1j * diff_x))
                             + np.mean(np.exp(1j * diff_y)))
    seps = separations_px * (extent / n)
    est = np.abs(acc) / realizations
    return seps, est, coherence(model, seps)


def _mode_stack(l_values, n, extent):
    """Fiber-coupled OAM mode fields u_l on the grid, unit normalized."""
    x1 = (np.arange(n) - n // 2) * (extent / n)
    xs, ys = np.meshgrid(x1, x1)
    r2 = xs**2 + ys**2
    radial = 2.0 * np.exp(-r2) / math.sqrt(2.0 * math.pi)
    theta = np.arctan2(ys, xs)
    return np.stack([radial * np.exp(1j * l * theta) for l in l_values])


def _input_field(mode, n, extent):
    """Input field and its descriptor: OAM eigenmode, plate, or spectrum."""
    if isinstance(mode, (int, np.integer)):
        l0 = int(mode)
        return _mode_stack([l0], n, extent)[0], l0, f"eigenmode l0={l0}", True
    if isinstance(mode, PhasePlate):
        x1 = (np.arange(n) - n // 2) * (extent / n)
        xs, ys = np.meshgrid(x1, x1)
        theta = np.mod(np.arctan2(ys, xs), 2.0 * math.pi)
        phase = np.zeros_like(theta)
        starts = list(mode.starts) + [2.0 * math.pi]
        for k, (_, p) in enumerate(mode.sectors):
            phase[(theta >= starts[k]) & (theta < starts[k + 1])] = p
        gauss = 2.0 * np.exp(-(xs**2 + ys**2)) / math.sqrt(2.0 * math.pi)
        return gauss * np.exp(1j * phase), 0, "plate", False
    if isinstance(mode, AngularSpectrum):
        stack = _mode_stack(mode.ls, n, extent)
        field = np.tensordot(mode.coefficients, stack, axes=1)
        return field, 0, "spectrum", False
    raise TypeError(f"unsupported input mode: {mode!r}")


def mc_coupling(model, mode, dl_max, realizations, seed,
                n=DEFAULT_GRID, extent=DEFAULT_EXTENT,
                subharmonic_depth=DEFAULT_SUBHARMONICS):
    """Monte Carlo coupling table from random phase screens.

    For each realization the input field is multiplied by e^{i phi} and
    projected onto the fiber-coupled OAM modes around the input index;
    |overlap|^2 accumulates into per-offset means and standard errors.

    Parameters
    ----------
    model : TurbulenceModel
    mode : int, PhasePlate, or AngularSpectrum
        OAM eigenmode index l0, or a plate / spectrum whose imprinted
        Gaussian is used as input (offsets then count from l = 0, and
        the entries are mode occupations rather than transfer weights).
    dl_max : int
        Largest offset to record.
    realizations : int
        Ensemble size, at least 100.
    seed : int
        Master seed; realization seeds are split from it.

    Returns
    -------
    CouplingTable with per-entry standard errors.
    """
    n, extent = _check_grid(n, extent)
    if realizations < 100:
        raise ValueError("need at least 100 realizations")
    dl_max = int(dl_max)
    if dl_max < 0:
        raise ValueError("dl_max must be >= 0")

    field, l0, label, eigen = _input_field(mode, n, extent)
    cell = (extent / n) ** 2
    l_values = np.arange(l0 - dl_max, l0 + dl_max + 1)
    stack = _mode_stack(l_values, n, extent)
    # projector rows: a_l = sum conj(u_l) * psi * cell
    proj = (stack.conj() * cell).reshape(l_values.size, -1)

    clean = proj @ field.ravel()
    survival = float(np.abs(clean[dl_max]) ** 2)
    if eigen and abs(survival - 1.0) > 1e-3:
        raise CalibrationError(
            f"grid resolution check failed: turbulence-free projection "
            f"{survival:.6f} differs from 1 by more than 1e-3"
        )

    meta = MonteCarloMeta(realizations, n, extent, int(seed),
                          subharmonic_depth, label)

    if model.ratio == 0.0:
        powers = np.abs(clean) ** 2
        folded = np.empty(dl_max + 1)
        folded[0] = powers[dl_max]
        folded[1:] = 0.5 * (powers[dl_max + 1:] + powers[dl_max - 1::-1])
        table = CouplingTable(model.ratio, folded,
                              stderr=np.zeros(dl_max + 1), meta=meta)
        return table.validate(monotone=eigen)

    sampler = _ScreenSampler(model.ratio, n, extent, subharmonic_depth)
    samples = np.empty((realizations, dl_max + 1))
    flat_field = field.ravel()
    for i, rng in enumerate(_child_rngs(seed, realizations)):
        phi = sampler.draw(rng)
        amps = proj @ (np.exp(1j * phi.ravel()) * flat_field)
        powers = np.abs(amps) ** 2
        samples[i, 0] = powers[dl_max]
        samples[i, 1:] = 0.5 * (powers[dl_max + 1:] + powers[dl_max - 1::-1])

    values = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(realizations)
    table = CouplingTable(model.ratio, values, stderr=stderr, meta=meta)
    return table.validate(monotone=eigen)


@dataclass(frozen=True)
class BroadeningResult:
    """Far-field 1/e field radii (intensity e^-2) of the beam spot.

    w_dl is the diffraction-limited radius, w_le the long-exposure
    (ensemble-averaged) one, both in far-field frequency units (cycles
    per waist); only their ratio is physically meaningful. warnings
    carries quality notes such as excessive anisotropy of the averaged
    spot.
    """

    w_dl: float
    w_le: float
    anisotropy: float
    warnings: tuple = ()


def _crossing_radius(intensity, df, mask=None, level=_FIELD_LEVEL):
    """Radius where the azimuthally averaged intensity crosses level*peak."""
    n = intensity.shape[0]
    c = n // 2
    x1 = np.arange(n) - c
    xs, ys = np.meshgrid(x1, x1)
    rho = np.sqrt(xs**2 + ys**2)
    peak = intensity[c, c]
    nbins = n // 2
    which = np.minimum(rho.ravel().astype(int), nbins - 1)
    flat = intensity.ravel()
    if mask is not None:
        keep = mask.ravel()
        which, flat = which[keep], flat[keep]
    sums = np.bincount(which, weights=flat, minlength=nbins)
    counts = np.bincount(which, minlength=nbins)
    with np.errstate(invalid="ignore"):
        profile = sums / counts
    target = peak * level
    below = np.nonzero(profile < target)[0]
    if below.size == 0:
        raise ValueError("intensity never drops below the crossing level")
    k = int(below[0])
    if k == 0:
        return 0.0
    hi, lo = profile[k - 1], profile[k]
    frac = (hi - target) / (hi - lo)
    return ((k - 1) + frac + 0.5) * df  # bin k collects rho in [k, k+1)


def long_exposure_broadening(model, realizations, seed,
                             n=DEFAULT_GRID, extent=DEFAULT_EXTENT,
                             pad_factor=4,
                             subharmonic_depth=DEFAULT_SUBHARMONICS):
    """Far-field 1/e field radii before and after long-exposure averaging.

    The Gaussian fiber mode is pushed through one screen per realization;
    far-field intensities (zero-padded FFT) are ensemble averaged and the
    crossing radius of the azimuthally averaged profile extracted. Closes
    the loop with `ratio_from_broadening`.

    Parameters
    ----------
    realizations : int
        At least 500 (a long-exposure average; the turbulence-free case
        short-circuits since every realization is identical).

    Returns
    -------
    BroadeningResult
    """
    n, extent = _check_grid(n, extent)
    if realizations < 500:
        raise ValueError("need at least 500 realizations")
    pad = int(pad_factor) * n
    df = 1.0 / (pad * (extent / n))

    x1 = (np.arange(n) - n // 2) * (extent / n)
    xs, ys = np.meshgrid(x1, x1)
    beam = np.exp(-(xs**2 + ys**2))

    def far_intensity(field):
        spec = np.fft.fftshift(np.fft.fft2(field, s=(pad, pad)))
        return np.abs(spec) ** 2

    i_dl = far_intensity(beam)
    w_dl = _crossing_radius(i_dl, df)

    if model.ratio == 0.0:
        return BroadeningResult(w_dl=w_dl, w_le=w_dl, anisotropy=0.0)

    sampler = _ScreenSampler(model.ratio, n, extent, subharmonic_depth)
    i_le = np.zeros_like(i_dl)
    for rng in _child_rngs(seed, realizations):
        phi = sampler.draw(rng)
        i_le += far_intensity(beam * np.exp(1j * phi))
    i_le /= realizations
    w_le = _crossing_radius(i_le, df)

    # anisotropy probe: second moments of the core (windowed to keep the
    # slowly decaying wings from dominating)
    c = pad // 2
    gx, gy = np.meshgrid(np.arange(pad) - c, np.arange(pad) - c)
    core = (gx**2 + gy**2) <= (2.5 * w_le / df) ** 2
    weights = i_le * core
    mxx = float(np.sum(weights * gx**2))
    myy = float(np.sum(weights * gy**2))
    anisotropy = abs(math.sqrt(mxx / myy) - 1.0)
    warnings = ()
    if anisotropy > 0.02:
        warnings = (
            f"averaged spot anisotropy {anisotropy:.1%} exceeds 2%",
        )
    return BroadeningResult(w_dl=w_dl, w_le=w_le, anisotropy=anisotropy,
                            warnings=warnings)


def dump_screen(screen, path):
    """Write a screen as flat little-endian float64 plus a text header.

    The binary file holds the N*N phase values row-major; `<path>.hdr`
    records n, extent, ratio and seed, one `key=value` per line.
    """
    path = Path(path)
    path.write_bytes(screen.values.astype("<f8").tobytes(order="C"))
    header = (
        f"n={screen.n}\n"
        f"extent={screen.extent!r}\n"
        f"ratio={screen.ratio!r}\n"
        f"seed={screen.seed}\n"
    )
    path.with_name(path.name + ".hdr").write_text(header)


def load_screen(path):
    """Read back a screen written by `dump_screen`."""
    path = Path(path)
    fields = {}
    for line in path.with_name(path.name + ".hdr").read_text().splitlines():
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    n = int(fields["n"])
    values = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(n, n).copy()
    seed = None if fields.get("seed") in (None, "None") else int(fields["seed"])
    return PhaseScreen(values=values, extent=float(fields["extent"]),
                       ratio=float(fields["ratio"]), seed=seed,
                       subharmonic_depth=-1)
