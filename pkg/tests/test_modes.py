import math

import numpy as np
import numpy.testing as npt
import pytest

from oamturb import (
    AnalyzerState,
    AngularSpectrum,
    PhasePlate,
    dimensionality_no_turbulence,
    half_plate,
    plate_autocorrelation,
    plate_overlap,
    plate_spectrum,
    quadrant_plate,
    single_mode_spectrum,
    uniform_plate,
)

TWO_PI = 2.0 * math.pi


def rotated(plate, angle):
    sectors = sorted(((a + angle) % TWO_PI, p) for a, p in plate.sectors)
    return PhasePlate(tuple(sectors))


class TestPlateSpectrum:
    def test_quadrant_central_weight(self, quad_spectrum):
        assert quad_spectrum.weight(0) == pytest.approx(0.25, abs=1e-14)

    def test_quadrant_first_neighbor(self, quad_spectrum):
        assert quad_spectrum.weight(1) == pytest.approx(2 / np.pi**2, rel=1e-12)
        assert quad_spectrum.weight(4) == 0.0

    def test_uniform_plate_is_single_mode(self):
        s = plate_spectrum(uniform_plate(), 4)
        assert s.weight(0) == 1.0
        assert np.count_nonzero(s.weights) == 1

    def test_half_plate_weights(self):
        s = plate_spectrum(half_plate(), 8)
        assert s.weight(1) == pytest.approx(4 / np.pi**2, rel=1e-12)
        assert s.weight(-1) == pytest.approx(4 / np.pi**2, rel=1e-12)
        # even modes cancel exactly
        assert s.weight(0) == 0.0
        assert s.weight(2) == 0.0

    def test_index_symmetry_for_real_imprints(self, quad_spectrum, half_spectrum):
        for s in (quad_spectrum, half_spectrum):
            npt.assert_array_equal(s.weights, s.weights[::-1])

    def test_weights_match_coefficients(self, quad_spectrum):
        npt.assert_allclose(np.abs(quad_spectrum.coefficients) ** 2,
                            quad_spectrum.weights, atol=1e-15)

    def test_rotation_leaves_weights(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            starts = np.sort(rng.uniform(0, TWO_PI, size=4))
            phases = rng.uniform(0, TWO_PI, size=4)
            plate = PhasePlate(tuple(zip(starts, phases)))
            base = plate_spectrum(plate, 32).weights
            turned = plate_spectrum(rotated(plate, rng.uniform(0, TWO_PI)), 32)
            npt.assert_allclose(turned.weights, base, atol=1e-12)

    def test_tail_bound(self):
        # stepped-plate tail decays like ~0.41 / l_max
        for l_max in (64, 128, 256, 512):
            for plate in (quadrant_plate(), half_plate()):
                total = plate_spectrum(plate, l_max).total
                assert 1.0 - 0.45 / l_max <= total <= 1.0

    def test_default_window_nearly_complete(self, quad_spectrum, half_spectrum):
        assert quad_spectrum.total >= 0.995
        assert half_spectrum.total >= 0.995

    def test_rejects_bad_l_max(self):
        with pytest.raises(ValueError):
            plate_spectrum(quadrant_plate(), 0)


class TestPlateValidation:
    def test_unsorted_sectors(self):
        with pytest.raises(ValueError):
            PhasePlate(((1.0, 0.0), (0.5, np.pi)))

    def test_out_of_range_start(self):
        with pytest.raises(ValueError):
            PhasePlate(((0.0, 0.0), (7.0, np.pi)))

    def test_empty(self):
        with pytest.raises(ValueError):
            PhasePlate(())

    def test_phase_at_wraps(self):
        plate = quadrant_plate()
        assert plate.phase_at(0.1) == np.pi
        assert plate.phase_at(2.0) == 0.0
        assert plate.phase_at(0.1 + TWO_PI) == np.pi
        assert plate.phase_at(-0.1) == 0.0


class TestAutocorrelation:
    def test_at_zero_is_total(self, quad_spectrum):
        assert plate_autocorrelation(quad_spectrum, 0.0) == pytest.approx(
            quad_spectrum.total, abs=1e-15
        )

    def test_quadrant_quarter_turn(self, quad_spectrum):
        # geometric overlap of rotated quadrant sectors: 1 - 2 delta / pi
        assert plate_autocorrelation(quad_spectrum, np.pi / 4) == pytest.approx(
            0.5, abs=1e-6
        )

    def test_quadrant_half_turn(self, quad_spectrum):
        assert abs(plate_autocorrelation(quad_spectrum, np.pi)) < 1e-6

    def test_imaginary_residual_small_for_symmetric(self, quad_spectrum):
        _, residual = plate_autocorrelation(
            quad_spectrum, 1.234, return_residual=True
        )
        assert residual < 1e-12

    def test_matches_geometric_overlap_everywhere(self):
        # the identity is exact only for the untruncated series; the tail
        # of an |l| <= L window is ~0.41/L, so reaching 1e-6 on the grid
        # takes a very wide window, folded mod the grid for speed
        plate = quadrant_plate()
        big = plate_spectrum(plate, 1_000_000)
        folded = np.zeros(720)
        np.add.at(folded, np.mod(big.ls, 720), big.weights)
        fourier = (np.fft.ifft(folded) * 720).real
        deltas = TWO_PI * np.arange(720) / 720.0
        geometric = np.array([plate_overlap(plate, d).real for d in deltas])
        assert np.max(np.abs(fourier - geometric)) < 1e-6
        # and the plain evaluator agrees with the folded route
        sub = np.arange(0, 720, 30)
        direct = plate_autocorrelation(big, deltas[sub])
        npt.assert_allclose(direct, fourier[sub], atol=1e-12)

    def test_overlap_unit_at_zero(self):
        for plate in (quadrant_plate(), half_plate(), uniform_plate()):
            assert plate_overlap(plate, 0.0) == pytest.approx(1.0, abs=1e-14)


class TestDimensionality:
    def test_quadrant(self, quad_spectrum):
        assert dimensionality_no_turbulence(quad_spectrum) == pytest.approx(
            6.0, abs=0.01
        )

    def test_half(self, half_spectrum):
        assert dimensionality_no_turbulence(half_spectrum) == pytest.approx(
            3.0, abs=0.01
        )

    def test_single_mode(self):
        assert dimensionality_no_turbulence(single_mode_spectrum()) == 1.0

    def test_rotation_invariance(self):
        plate = quadrant_plate()
        base = dimensionality_no_turbulence(plate_spectrum(plate, 64))
        moved = dimensionality_no_turbulence(
            plate_spectrum(rotated(plate, 0.713), 64)
        )
        assert moved == pytest.approx(base, rel=1e-12)

    def test_shift_invariance(self, quad_spectrum):
        shifted = quad_spectrum.shifted(3)
        assert dimensionality_no_turbulence(shifted) == pytest.approx(
            dimensionality_no_turbulence(quad_spectrum), rel=1e-15
        )

    def test_zero_spectrum_rejected(self):
        with pytest.raises(ValueError):
            dimensionality_no_turbulence(AngularSpectrum(0, np.array([0.0])))


class TestSpectrumType:
    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            AngularSpectrum(0, np.array([-0.1, 1.0]))

    def test_mismatched_coefficients_rejected(self):
        with pytest.raises(ValueError):
            AngularSpectrum(0, np.array([0.5]), np.array([1.0 + 0j]))

    def test_accessors(self, quad_spectrum):
        assert quad_spectrum.l_min == -quad_spectrum.l_max
        assert quad_spectrum.weight(quad_spectrum.l_max + 5) == 0.0
        assert quad_spectrum.ls.size == quad_spectrum.weights.size

    def test_analyzer_rotation_phases(self, quad_spectrum):
        state = AnalyzerState(quad_spectrum, alpha=0.37)
        expect = quad_spectrum.coefficients * np.exp(
            1j * 0.37 * quad_spectrum.ls
        )
        npt.assert_allclose(state.amplitudes(), expect, atol=1e-15)
        npt.assert_allclose(np.abs(state.amplitudes()) ** 2,
                            quad_spectrum.weights, atol=1e-14)

    def test_analyzer_waist_positive(self, quad_spectrum):
        with pytest.raises(ValueError):
            AnalyzerState(quad_spectrum, waist=0.0)
