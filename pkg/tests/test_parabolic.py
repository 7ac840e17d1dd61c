"""
Finite-volume parabolic solves: exact solutions, energy decay, maximum principle,
solver variants, the full oscillatory problem and space-time norms
"""

import numpy as np
import pytest

from errors import InvalidCoefficients, InvalidDomain, StiffnessCap
from harness import build_cell_models, factorization_discrepancy
from models import DomainSpec, InitialDatum, ParabolicProblem, SpaceTimeField
from parabolic import (
    boundary_layer_mask,
    prepare_datum,
    solve_divform,
    solve_full_oscillatory,
    spacetime_layer_mask,
    spacetime_norm,
)
from presets import datum_values, get_preset


def sine_datum(domain):
    return InitialDatum(mode="plain", base=datum_values("sine", domain))


def divform(domain, preset, scheme="implicit-euler", linear_solver="direct", n=64):
    gc = get_preset(preset).build(n)
    return ParabolicProblem(domain, "oscillatory-divform", sine_datum(domain), zeta=gc.zeta,
                            Theta=gc.Theta, scheme=scheme, linear_solver=linear_solver)


class TestHomogenizedProblem:

    @pytest.mark.parametrize("scheme", ["implicit-euler", "crank-nicolson"])
    def test_heat_equation_decay(self, scheme):
        domain = DomainSpec(dim=1, T=0.1, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        problem = ParabolicProblem(domain, "homogenized", sine_datum(domain), tensor=np.eye(1),
                                   scheme=scheme)
        f = solve_divform(problem)
        exact = np.exp(-np.pi ** 2 * domain.T) * np.sin(np.pi * domain.nodes)
        np.testing.assert_allclose(f.values[-1], exact, atol=5e-3 * exact.max())
        assert f.values[0, 0] == 0.0 and f.values[-1, -1] == 0.0

    def test_two_dimensional_mode(self):
        domain = DomainSpec(dim=2, T=0.05, h=1 / 32, tau=1 / 4096, epsilon=1 / 4)
        problem = ParabolicProblem(domain, "homogenized", sine_datum(domain), tensor=np.diag([1.0, 2.0]))
        f = solve_divform(problem)
        x1, x2 = domain.mesh()
        exact = np.exp(-3 * np.pi ** 2 * domain.T) * np.sin(np.pi * x1) * np.sin(np.pi * x2)
        np.testing.assert_allclose(f.values[-1], exact, atol=1e-2 * exact.max())

    def test_constant_oscillatory_matches_homogenized(self):
        domain = DomainSpec(dim=1, T=0.05, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        f_eps = solve_divform(divform(domain, "constant-1d"))
        f0 = solve_divform(ParabolicProblem(domain, "homogenized", sine_datum(domain), tensor=np.eye(1)))
        np.testing.assert_allclose(f_eps.values, f0.values, rtol=0, atol=1e-14)


class TestDiagnostics:

    @pytest.mark.parametrize("preset", ["harmonic-1d", "weighted-1d"])
    def test_energy_nonincreasing(self, preset):
        domain = DomainSpec.for_epsilon(1, 1 / 8, 0.1)
        f = solve_divform(divform(domain, preset))
        energy = np.asarray(f.diagnostics["energy"])
        assert len(energy) == domain.steps + 1
        assert np.all(np.diff(energy) <= 0)
        assert f.diagnostics["energy_nonincreasing"]

    def test_energy_layered_2d(self):
        domain = DomainSpec(dim=2, T=0.02, h=1 / 32, tau=1 / 1024, epsilon=1 / 4)
        f = solve_divform(divform(domain, "layered-2d", n=32))
        assert f.diagnostics["energy_nonincreasing"]

    def test_maximum_principle(self):
        domain = DomainSpec.for_epsilon(1, 1 / 8, 0.1)
        f = solve_divform(divform(domain, "weighted-1d"))
        assert f.diagnostics["m_matrix"]
        assert f.diagnostics["min_value"] >= -1e-12

    def test_crank_nicolson_skips_maximum_principle(self):
        domain = DomainSpec.for_epsilon(1, 1 / 8, 0.05)
        f = solve_divform(divform(domain, "harmonic-1d", scheme="crank-nicolson"))
        assert f.diagnostics["max_principle"].startswith("skipped")

    def test_krylov_matches_direct(self):
        domain = DomainSpec.for_epsilon(1, 1 / 8, 0.05)
        direct = solve_divform(divform(domain, "harmonic-1d"))
        krylov = solve_divform(divform(domain, "harmonic-1d", linear_solver="krylov"))
        np.testing.assert_allclose(krylov.values, direct.values, atol=1e-8)


class TestFullOscillatory:

    def test_stiffness_cap(self):
        coeffs = get_preset("classical").build(32)
        domain = DomainSpec(dim=1, T=0.01, h=1 / 256, tau=1 / 256 ** 2, epsilon=1 / 16)
        problem = ParabolicProblem(domain, "full-oscillatory", sine_datum(domain), coefficients=coeffs)
        with pytest.raises(StiffnessCap):
            solve_full_oscillatory(problem)

    def test_resolution(self):
        coeffs = get_preset("classical").build(32)
        domain = DomainSpec(dim=1, T=0.01, h=1 / 32, tau=1 / 1024, epsilon=1 / 4)
        problem = ParabolicProblem(domain, "full-oscillatory", sine_datum(domain), coefficients=coeffs)
        with pytest.raises(InvalidDomain):
            solve_full_oscillatory(problem)

    def test_wrong_kind(self):
        domain = DomainSpec(dim=1, T=0.01, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        with pytest.raises(InvalidCoefficients):
            solve_full_oscillatory(divform(domain, "harmonic-1d"))

    def test_classical_matches_divform(self):
        coeffs = get_preset("classical").build(32)
        models = build_cell_models(coeffs)
        domain = DomainSpec(dim=1, T=0.05, h=1 / 64, tau=1 / 4096, epsilon=1 / 4)
        datum = prepare_datum(domain, datum_values("sine", domain), "well-prepared", models.eig)
        u = solve_full_oscillatory(ParabolicProblem(domain, "full-oscillatory", datum, coefficients=coeffs))
        v = solve_divform(ParabolicProblem(domain, "oscillatory-divform", datum,
                                           zeta=models.general.zeta, Theta=models.general.Theta))
        np.testing.assert_allclose(u.values, v.values, atol=1e-7)

    def test_constant_potential_factors_out(self):
        coeffs = get_preset("classical").build(32).shifted(1.0)
        domain = DomainSpec(dim=1, T=0.02, h=1 / 128, tau=1 / 16384, epsilon=1 / 8)
        u = solve_full_oscillatory(ParabolicProblem(domain, "full-oscillatory", sine_datum(domain),
                                                    coefficients=coeffs))
        heat = solve_divform(ParabolicProblem(domain, "homogenized", sine_datum(domain), tensor=np.eye(1)))
        decay = np.exp(-heat.times / domain.epsilon ** 2)[:, np.newaxis]
        np.testing.assert_allclose(u.values, decay * heat.values, atol=1e-2 * np.abs(heat.values).max())

    @pytest.mark.slow
    def test_factorization_cross_check(self):
        coeffs = get_preset("oscillatory-1d").build(64)
        models = build_cell_models(coeffs)
        coarse = factorization_discrepancy(coeffs, 1 / 4, 1 / 64, T=0.1, models=models)
        fine = factorization_discrepancy(coeffs, 1 / 4, 1 / 128, T=0.1, models=models)
        assert coarse <= 10 / 64
        assert fine < coarse


class TestPreparedData:

    def test_ill_prepared_needs_zero_theta(self):
        coeffs = get_preset("constant-drift-1d").build(64)
        models = build_cell_models(coeffs)
        domain = DomainSpec(dim=1, T=0.05, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        with pytest.raises(InvalidCoefficients):
            prepare_datum(domain, datum_values("bump", domain), "ill-prepared", models.eig)

    def test_ill_prepared_limit_factor(self):
        models = build_cell_models(get_preset("potential-1d").build(64))
        domain = DomainSpec(dim=1, T=0.05, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        datum = prepare_datum(domain, datum_values("bump", domain), "ill-prepared", models.eig)
        assert datum.limit_factor == pytest.approx(np.mean(1.0 / models.eig.psi.values))
        np.testing.assert_allclose(datum.values_for("oscillatory-divform") * datum.psi_nodes,
                                   datum.base, atol=1e-14)


class TestNorms:

    def test_trapezoid_l2(self):
        domain = DomainSpec(dim=1, T=0.2, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        profile = domain.nodes * (1 - domain.nodes)
        values = np.tile(profile, (len(domain.record_times), 1))
        field = SpaceTimeField(domain, domain.record_times, values)
        assert spacetime_norm(field) == pytest.approx(np.sqrt(domain.T / 30), rel=1e-3)
        h1 = np.sqrt(domain.T * (1 / 30 + 1 / 3))
        assert spacetime_norm(field, "H1") == pytest.approx(h1, rel=1e-2)

    def test_reference_and_subset(self):
        domain = DomainSpec(dim=1, T=0.2, h=1 / 64, tau=1 / 4096, epsilon=1 / 8)
        values = np.ones((len(domain.record_times), domain.N + 1))
        field = SpaceTimeField(domain, domain.record_times, values)
        assert spacetime_norm(field, reference=field) == 0.0
        full = spacetime_norm(field)
        part = spacetime_norm(field, "L2-subset", delta=0.05)
        assert 0 < part < full
        with pytest.raises(ValueError):
            spacetime_norm(field, "L2-subset")

    def test_masks(self):
        domain = DomainSpec(dim=2, T=0.2, h=1 / 16, tau=1 / 256, epsilon=1 / 2)
        layer = boundary_layer_mask(domain, 0.2)
        assert layer[0, 8] and layer[3, 8] and not layer[8, 8]
        spacetime = spacetime_layer_mask(domain, 0.05)
        assert spacetime[0].all() and spacetime[-1].all()
        assert spacetime.shape == (len(domain.record_times), 17, 17)
