"""
Smoothing kernel, cut-offs, the corrected difference w_eps and measured constants
"""

import numpy as np
import pytest

from config import Config
from errors import EpsilonTooLarge, KernelUnderresolved
from homogenize import build_effective_model
from models import DomainSpec, ParabolicProblem, PeriodicField, SpaceTimeField, TorusGrid
from oscillo_analysis import (
    SUITES,
    SmoothingKernel,
    appendix_constants,
    build_cutoffs,
    build_w_eps,
    oscillating_average_ratio,
    random_sample,
    smooth,
)
from parabolic import prepare_datum, solve_divform
from presets import datum_values, get_preset


@pytest.fixture
def domain():
    return DomainSpec(dim=1, T=0.2, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)


class TestKernel:

    def test_weights_are_a_symmetric_average(self):
        weights = SmoothingKernel(2).weights(1 / 8, 1 / 64, 1 / 4096)
        assert weights.ndim == 3
        assert weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert weights.min() >= 0
        np.testing.assert_allclose(weights, weights[::-1, ::-1, ::-1], atol=1e-16)
        np.testing.assert_allclose(weights, np.swapaxes(weights, 1, 2), atol=1e-16)

    def test_mass_is_positive(self):
        for dim in (1, 2, 3):
            assert SmoothingKernel(dim).mass > 0

    def test_underresolved(self):
        with pytest.raises(KernelUnderresolved):
            SmoothingKernel(1).weights(1 / 8, 1 / 64, 1 / 64)
        with pytest.raises(KernelUnderresolved):
            SmoothingKernel(1).weights(1 / 8, 1 / 16, 1 / 4096)


class TestSmoothing:

    def test_constants_and_affine_functions_in_the_interior(self, domain):
        kernel = SmoothingKernel(1)
        times = domain.record_times
        constant = SpaceTimeField(domain, times, np.ones((len(times), domain.N + 1)))
        affine = SpaceTimeField(domain, times, np.tile(domain.nodes, (len(times), 1)))
        inner = (slice(40, -40), slice(8, -8))
        np.testing.assert_allclose(smooth(constant, domain.epsilon, kernel).values[inner], 1.0,
                                   atol=1e-12)
        np.testing.assert_allclose(smooth(affine, domain.epsilon, kernel).values[inner],
                                   affine.values[inner], atol=1e-12)

    def test_positivity(self, domain):
        rng = np.random.default_rng(5)
        times = domain.record_times
        g = SpaceTimeField(domain, times, rng.uniform(0, 1, (len(times), domain.N + 1)))
        smoothed = smooth(g, domain.epsilon, SmoothingKernel(1)).values
        assert smoothed.min() >= -1e-13
        assert smoothed.max() <= 1 + 1e-13

    def test_far_from_support_is_exactly_zero(self, domain):
        times = domain.record_times
        values = np.zeros((len(times), domain.N + 1))
        values[-1, 32] = 1.0
        smoothed = smooth(SpaceTimeField(domain, times, values), domain.epsilon, SmoothingKernel(1))
        assert np.all(smoothed.values[0] == 0.0)

    @staticmethod
    def _single_mode(eps: float) -> SpaceTimeField:
        domain = DomainSpec(dim=1, T=0.1, h=eps / 8, tau=eps ** 2 / 8, epsilon=eps)
        times = domain.record_times
        x = domain.nodes
        window = np.where(np.abs(x - 0.5) < 0.4, np.cos(np.pi * (x - 0.5) / 0.8) ** 2, 0.0)
        values = np.outer(np.ones(len(times)), window * np.cos(2 * np.pi * x / (4 * eps)))
        return SpaceTimeField(domain, times, values)

    def test_bounded_uniformly_in_eps(self):
        kernel = SmoothingKernel(1)
        ratios = []
        for eps in (1 / 8, 1 / 16):
            g = self._single_mode(eps)
            smoothed = smooth(g, eps, kernel)
            ratios.append(np.linalg.norm(smoothed.values) / np.linalg.norm(g.values))
        assert max(ratios) <= 1.0 + 1e-12
        assert max(ratios) / min(ratios) < 1.5

    def test_commutes_with_interior_translations(self):
        eps = 1 / 16
        domain = DomainSpec(dim=1, T=0.1, h=1 / 128, tau=eps ** 2 / 8, epsilon=eps)
        times = domain.record_times
        x = domain.nodes
        profile = np.where(np.abs(x - 0.4) < 0.1, np.cos(np.pi * (x - 0.4) / 0.2) ** 2, 0.0)
        pulse = np.where(np.abs(times - 0.04) < 0.02, np.sin(np.pi * (times - 0.02) / 0.04) ** 2, 0.0)
        g = SpaceTimeField(domain, times, np.outer(pulse, profile))
        shift = (12, 16)
        moved = g.with_values(np.roll(g.values, shift, axis=(0, 1)))
        kernel = SmoothingKernel(1)
        np.testing.assert_allclose(smooth(moved, eps, kernel).values,
                                   np.roll(smooth(g, eps, kernel).values, shift, axis=(0, 1)),
                                   atol=1e-13)


class TestCutoffs:

    def test_bounds_and_layers(self):
        domain = DomainSpec(dim=1, T=0.3, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        cut = build_cutoffs(domain, Config.DEFAULT_CUTOFF_SCALE)
        for eta in (cut.eta1, cut.eta2):
            assert eta.min() >= 0.0 and eta.max() <= 1.0
        assert cut.eta1[0] == 0.0 and cut.eta1[-1] == 0.0 and cut.eta1[32] == 1.0
        assert cut.eta2[0] == 0.0 and cut.eta2[-1] == 0.0
        middle = np.argmin(np.abs(domain.record_times - domain.T / 2))
        assert cut.eta2[middle] == 1.0
        assert cut.layer_scale == Config.DEFAULT_CUTOFF_SCALE

    @pytest.mark.parametrize("layer_scale, eps", [(1.0, 1 / 128), (Config.DEFAULT_CUTOFF_SCALE, 1 / 8)])
    def test_slope_bounds(self, layer_scale, eps):
        domain = DomainSpec(dim=2, T=0.3, h=eps / 8, tau=eps / 8, epsilon=eps)
        cut = build_cutoffs(domain, layer_scale)
        slope = np.sqrt(sum(g ** 2 for g in np.gradient(cut.eta1, domain.h)))
        assert slope.max() <= (1 + 1e-9) / (layer_scale * np.sqrt(eps))
        rate = np.abs(np.gradient(cut.eta2, domain.record_times))
        assert rate.max() <= (1 + 1e-9) / (layer_scale * eps)

    def test_space_layer_examples(self):
        eps = 1 / 128
        domain = DomainSpec(dim=1, T=0.2, h=1 / 1024, tau=1 / 4096, epsilon=eps)
        cut = build_cutoffs(domain)
        dist = domain.distance_to_boundary()
        root = np.sqrt(eps)
        assert cut.eta1[int(np.ceil(5 * root / domain.h))] == 1.0
        assert cut.eta1[int(np.floor(2 * root / domain.h))] == 0.0
        assert np.all(cut.eta1[dist <= 3 * root] == 0.0)
        assert np.all(cut.eta1[dist >= 4 * root * (1 + 1e-9)] == 1.0)

    def test_time_layer_examples(self):
        eps = 1 / 128
        domain = DomainSpec(dim=1, T=0.2, h=1 / 1024, tau=1 / 4096, epsilon=eps)
        cut = build_cutoffs(domain)
        t = domain.record_times
        assert np.all(cut.eta2[(t <= 4 * eps) | (t >= domain.T - 4 * eps)] == 0.0)
        core = (t >= 8 * eps * (1 + 1e-9)) & (t <= (domain.T - 8 * eps) * (1 - 1e-9))
        np.testing.assert_allclose(cut.eta2[core], 1.0, atol=1e-12)

    def test_layers_do_not_fit(self, domain):
        with pytest.raises(EpsilonTooLarge):
            build_cutoffs(domain, 1.0)
        with pytest.raises(EpsilonTooLarge):
            # 8 s eps = 1/8 > T/2
            build_cutoffs(domain, Config.DEFAULT_CUTOFF_SCALE)


def test_w_eps_vanishes_initially():
    coefficients = get_preset("harmonic-1d").build(64)
    em = build_effective_model(coefficients)
    domain = DomainSpec.for_epsilon(1, 1 / 8, 0.3)
    datum = prepare_datum(domain, datum_values("bump", domain), "well-prepared")
    f_eps = solve_divform(ParabolicProblem(domain, "oscillatory-divform", datum,
                                           zeta=coefficients.zeta, Theta=coefficients.Theta))
    f0 = solve_divform(ParabolicProblem(domain, "homogenized", datum, tensor=em.tensor_h))
    cut = build_cutoffs(domain, Config.DEFAULT_CUTOFF_SCALE)
    w = build_w_eps(f_eps, f0, em, domain, SmoothingKernel(1), cut)
    assert np.all(w.values[0] == 0.0)
    assert np.isfinite(w.diagnostics["h1_norm"]) and w.diagnostics["h1_norm"] > 0
    assert w.diagnostics["layer_scale"] == Config.DEFAULT_CUTOFF_SCALE


def test_oscillating_average_ratio_is_bounded():
    grid = TorusGrid(1, 32)
    (y,) = grid.mesh()
    tau_field = PeriodicField.scalar(grid, np.cos(2 * np.pi * y))
    domain = DomainSpec(dim=1, T=0.1, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
    x = domain.nodes
    kappa = np.where(np.abs(x - 0.5) < 0.3, np.cos(np.pi * (x - 0.5) / 0.6) ** 2, 0.0)
    ratio = oscillating_average_ratio(tau_field, kappa, domain)
    assert np.isfinite(ratio)
    assert 0.0 <= ratio < 10.0


class TestAppendixConstants:

    @pytest.fixture(scope="class")
    def frame(self):
        return appendix_constants(30, [1 / 8], dim=1, seed=11)

    def test_frame_layout(self, frame):
        assert list(frame.columns) == ["epsilon", "lemma", "ratio_max", "ratio_median", "samples"]
        assert list(frame["lemma"]) == SUITES
        assert (frame["samples"] == 30).all()
        assert np.isfinite(frame["ratio_max"]).all()
        assert (frame["ratio_median"] <= frame["ratio_max"]).all()

    def test_smoothing_is_a_contraction(self, frame):
        l1 = frame.loc[frame["lemma"] == "L1-i", "ratio_max"].iloc[0]
        assert 0 < l1 <= 1.0 + 1e-12

    def test_reproducible(self, frame):
        again = appendix_constants(30, [1 / 8], dim=1, seed=11)
        assert again.equals(frame)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            appendix_constants(29, [1 / 8])


@pytest.mark.slow
def test_appendix_constants_are_stable_down_the_ladder():
    frame = appendix_constants(30, [1 / 8, 1 / 16, 1 / 32], dim=1, seed=11)
    assert (frame["samples"] >= 30).all()
    for lemma in SUITES:
        if lemma == "remark-poisson":
            continue
        ratio_max = frame.loc[frame["lemma"] == lemma, "ratio_max"].to_numpy()
        assert len(ratio_max) == 3
        assert ratio_max.max() / ratio_max.min() < 2.0, lemma
        assert ratio_max.max() <= 2.0 * np.median(ratio_max), lemma
    gradient_defect = frame.loc[frame["lemma"] == "L2", "ratio_max"]
    assert (gradient_defect < 10.0).all()
