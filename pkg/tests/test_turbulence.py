import math

import numpy as np
import pytest

from oamturb import (
    LinkBudget,
    TurbulenceModel,
    coherence,
    fried_from_link,
    link_distance_for_ratio,
    link_ratio_for_distance,
    ratio_from_broadening,
)

PAPER_CASE = dict(wavelength=1550e-9, cn2=1e-14, waist=0.06)


class TestCoherence:
    def test_coincident_points(self):
        assert coherence(TurbulenceModel(0.8), 0.0) == 1.0

    def test_no_turbulence(self):
        assert coherence(TurbulenceModel(0.0), 3.7) == 1.0

    def test_one_fried_length(self):
        # separation r0 costs about 1 rad^2 of RMS phase: exp(-3.44)
        model = TurbulenceModel(0.65)
        assert coherence(model, 1.0 / 0.65) == pytest.approx(
            math.exp(-3.44), rel=1e-12
        )

    def test_monotone_in_separation_and_ratio(self):
        s = np.linspace(0.0, 5.0, 200)
        prev = coherence(TurbulenceModel(0.2), s)
        assert np.all(np.diff(prev) <= 0)
        for ratio in (0.4, 0.8, 1.5):
            cur = coherence(TurbulenceModel(ratio), s)
            assert np.all(cur[1:] <= prev[1:])
            prev = cur

    def test_continuous_at_zero(self):
        assert coherence(TurbulenceModel(1.0), 1e-9) == pytest.approx(1.0, abs=1e-9)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            TurbulenceModel(-0.1)
        with pytest.raises(ValueError):
            TurbulenceModel(0.5, waist=0.06, fried=0.06)
        model = TurbulenceModel.from_scales(0.06, 0.0923076923076923)
        assert model.ratio == pytest.approx(0.65, rel=1e-12)


class TestBroadening:
    def test_no_broadening(self):
        assert ratio_from_broadening(1.0, 1.0) == 0.0

    def test_doubled_radius(self):
        assert ratio_from_broadening(1.0, 2.0) == pytest.approx(
            math.sqrt(3.0) / 3.0, rel=1e-12
        )

    def test_ten_percent(self):
        assert ratio_from_broadening(1.0, 1.1) == pytest.approx(
            math.sqrt(0.21) / 3.0, rel=1e-12
        )

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            w = rng.uniform(0.1, 5.0)
            grow = rng.uniform(1.0, 4.0)
            scale = rng.uniform(0.01, 100.0)
            assert ratio_from_broadening(w * scale, w * grow * scale) == \
                pytest.approx(ratio_from_broadening(w, w * grow), rel=1e-12)

    def test_narrowing_rejected(self):
        with pytest.raises(ValueError):
            ratio_from_broadening(1.0, 0.99)
        with pytest.raises(ValueError):
            ratio_from_broadening(0.0, 1.0)


class TestFried:
    def test_two_kilometer_case(self):
        budget = LinkBudget(distance=2039.0, **PAPER_CASE)
        assert fried_from_link(budget) == pytest.approx(0.0923, abs=1.5e-4)

    def test_halved_distance_scaling(self):
        b1 = LinkBudget(distance=1800.0, **PAPER_CASE)
        b2 = LinkBudget(distance=900.0, **PAPER_CASE)
        assert fried_from_link(b2) == pytest.approx(
            fried_from_link(b1) * 2.0 ** 0.6, rel=1e-12
        )

    def test_wavelength_scaling(self):
        b1 = LinkBudget(1550e-9, 1e-14, 0.06, 2000.0)
        b2 = LinkBudget(=2 * 1550e-9, cn2=1e-14, waist=0.06, distance=2000.0)
        assert fried_from_link(b2) == pytest.approx(
            fried_from_link(b1) * 2.0 ** 1.2, rel=1e-12
        )

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            LinkBudget(0.0, 1e-14, 0.06, 100.0)
        with pytest.raises(ValueError):
            LinkBudget(1550e-9, -1e-14, 0.06, 100.0)


class TestLinkDistance:
    def test_paper_two_kilometers(self):
        report = link_distance_for_ratio(target_ratio=0.65, **PAPER_CASE)
        assert report.distance == pytest.approx(2000.0, rel=0.05)
        assert report.near_field
        assert report.rayleigh_range == pytest.approx(
            math.pi * 0.06**2 / 1550e-9, rel=1e-12
        )

    def test_round_trip(self):
        for ratio in (0.1, 0.65, 1.3):
            report = link_distance_for_ratio(target_ratio=ratio, **PAPER_CASE)
            budget = LinkBudget(distance=report.distance, **PAPER_CASE)
            assert fried_from_link(budget) == pytest.approx(
                0.06 / ratio, rel=1e-12
            )

    def test_power_law_between_ratios(self):
        r65 = link_distance_for_ratio(target_ratio=0.65, **PAPER_CASE)
        r30 = link_distance_for_ratio(target_ratio=0.30, **PAPER_CASE)
        assert r30.distance == pytest.approx(
            r65.distance * (0.30 / 0.65) ** (5.0 / 3.0), rel=1e-12
        )
        assert r30.distance == pytest.approx(563.0, rel=0.01)

    def test_vanishing_ratio(self):
        report = link_distance_for_ratio(target_ratio=1e-6, **PAPER_CASE)
        assert report.distance < 1e-4

    def test_breakdown_flagged_not_raised(self):
        report = link_distance_for_ratio(1550e-9, 1e-14, 0.01, 0.65)
        assert report.distance >= report.rayleigh_range
        assert not report.near_field

    def test_inverse_query(self):
        forward = link_distance_for_ratio(target_ratio=0.65, **PAPER_CASE)
        back = link_ratio_for_distance(distance=forward.distance, **PAPER_CASE)
        assert back.ratio == pytest.approx(0.65, rel=1e-12)

    def test_ratio_positive(self):
        with pytest.raises(ValueError):
            link_distance_for_ratio(target_ratio=0.0, **PAPER_CASE)
