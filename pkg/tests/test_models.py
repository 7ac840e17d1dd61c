"""
Validation of the data records: grids, fields, coefficient sets, box discretizations
and sweep configuration
"""

import numpy as np
import pytest

from errors import (
    GridMismatch,
    InvalidCoefficients,
    InvalidDomain,
    InvalidGrid,
    NonFiniteField,
    NotElliptic,
    NotSymmetric,
)
from models import (
    DomainSpec,
    EpsilonRecord,
    GeneralCoefficients,
    InitialDatum,
    NondivergenceCoefficients,
    PeriodicField,
    SweepConfig,
    SweepReport,
    TorusGrid,
)


class TestTorusGrid:

    @pytest.mark.parametrize("dim, n", [(1, 12), (1, 4), (0, 16), (4, 8)])
    def test_rejects_bad_grids(self, dim, n):
        with pytest.raises(InvalidGrid):
            TorusGrid(dim, n)

    def test_memory_budget(self):
        with pytest.raises(InvalidGrid):
            TorusGrid(3, 256)

    def test_mesh_is_component_major(self, grid_2d):
        y1, y2 = grid_2d.mesh()
        assert y1.shape == (16, 16)
        assert y1[3, 0] == pytest.approx(3 / 16)
        assert y2[0, 5] == pytest.approx(5 / 16)


class TestPeriodicField:

    def test_rejects_non_finite(self, grid_1d):
        values = np.zeros(64)
        values[7] = np.nan
        with pytest.raises(NonFiniteField):
            PeriodicField.scalar(grid_1d, values)

    def test_rejects_wrong_size(self, grid_1d):
        with pytest.raises(GridMismatch):
            PeriodicField.vector(grid_1d, np.zeros(63))

    def test_reshapes_flat_values(self, grid_2d):
        field = PeriodicField.matrix(grid_2d, np.arange(4 * 256, dtype=float))
        assert field.values.shape == (2, 2, 16, 16)
        assert not field.values.flags.writeable

    def test_constant_broadcast(self, grid_2d):
        field = PeriodicField.constant(grid_2d, "matrix", [[1.0, 2.0], [3.0, 4.0]])
        assert np.all(field.values[0, 1] == 2.0)
        assert np.all(field.values[1, 0] == 3.0)


class TestCoefficientSets:

    def test_zeta_mean_must_be_one(self, grid_1d):
        with pytest.raises(InvalidCoefficients):
            GeneralCoefficients(zeta=PeriodicField.constant(grid_1d, "scalar", 1.1),
                                Theta=PeriodicField.constant(grid_1d, "matrix", 1.0), kappa=0.5)

    def test_theta_below_kappa(self, grid_1d):
        with pytest.raises(NotElliptic):
            GeneralCoefficients(zeta=PeriodicField.constant(grid_1d, "scalar", 1.0),
                                Theta=PeriodicField.constant(grid_1d, "matrix", 0.4), kappa=0.5)

    def test_nondivergence_needs_symmetric_k(self, grid_2d):
        with pytest.raises(NotSymmetric):
            NondivergenceCoefficients(
                K=PeriodicField.constant(grid_2d, "matrix", [[1.0, 0.3], [0.0, 1.0]]),
                q=PeriodicField.constant(grid_2d, "vector", [0.0, 0.0]),
                r=PeriodicField.constant(grid_2d, "scalar", 0.0),
                ellipticity=0.5,
            )


class TestDomainSpec:

    def test_for_epsilon_standard_policy(self):
        domain = DomainSpec.for_epsilon(1, 1 / 8, 0.3)
        assert domain.h == pytest.approx(1 / 64)
        assert domain.tau == pytest.approx(1 / 4096)
        assert domain.record_stride == 8
        assert domain.steps % domain.record_stride == 0
        assert domain.dt <= domain.tau
        assert domain.record_times[-1] == pytest.approx(0.3)
        assert domain.N == 64

    def test_under_resolved_h(self):
        with pytest.raises(InvalidDomain):
            DomainSpec(dim=1, T=0.1, h=1 / 32, tau=1 / 1024, epsilon=1 / 8)

    def test_epsilon_must_be_unit_fraction(self):
        with pytest.raises(InvalidDomain):
            DomainSpec(dim=1, T=0.1, h=1 / 64, tau=1 / 4096, epsilon=0.3)

    def test_tau_above_h(self):
        with pytest.raises(InvalidDomain):
            DomainSpec(dim=1, T=0.1, h=1 / 64, tau=1 / 32, epsilon=1 / 8)

    def test_distance_to_boundary(self):
        domain = DomainSpec(dim=2, T=0.1, h=1 / 16, tau=1 / 256, epsilon=1 / 2)
        dist = domain.distance_to_boundary()
        assert dist[0, 5] == 0.0
        assert dist[8, 8] == pytest.approx(0.5)
        assert dist[2, 8] == pytest.approx(2 / 16)


def test_initial_datum_must_vanish_on_boundary():
    with pytest.raises(InvalidDomain):
        InitialDatum(mode="plain", base=np.ones(9))


class TestSweepConfig:

    def test_default_validates(self):
        SweepConfig().validate()

    @pytest.mark.parametrize("ladder", [
        [1 / 8, 1 / 16],
        [1 / 16, 1 / 8, 1 / 32],
        [1 / 8, 0.1, 1 / 32],
    ])
    def test_bad_ladders(self, ladder):
        with pytest.raises(InvalidDomain):
            SweepConfig(epsilons=ladder).validate()

    def test_unknown_pipeline(self):
        with pytest.raises(InvalidCoefficients):
            SweepConfig(pipeline="section-3").validate()

    def test_nested_schema(self):
        cfg = SweepConfig.from_dict({
            "pipeline": "section-1",
            "preset": "oscillatory-1d",
            "epsilons": [0.25, 0.125, 0.0625],
            "grid": {"n_cell": 32, "h_policy": "fine"},
            "datum": {"mode": "ill-prepared", "expr": "sine"},
            "T": 0.2,
        })
        assert cfg.n_cell == 32 and cfg.h_policy == "fine"
        assert cfg.datum_mode == "ill-prepared" and cfg.datum_expr == "sine"
        data = cfg.to_dict()
        assert data["grid"]["n_cell"] == 32
        assert data["preset"] == "oscillatory-1d"
        assert "workers" not in cfg.provenance()

    def test_import_replaces_preset(self):
        cfg = SweepConfig.from_dict({"import": {"family": "general"}})
        assert cfg.preset is None
        assert "import" in cfg.to_dict() and "preset" not in cfg.to_dict()


def test_report_dict_carries_rate_block():
    report = SweepReport(
        config={"pipeline": "section-2"},
        config_hash="abc",
        records=[EpsilonRecord(epsilon=0.125, h=1 / 64, tau=1 / 4096, l2_error=0.01, w_eps_h1=0.2)],
        tensor_h=[[1.0]],
        slope=0.6,
        half_width=0.05,
    )
    data = report.to_dict()
    assert data["rate"]["proven_exponent"] == 0.25
    assert data["rate"]["slope_minus_anticipated"] == pytest.approx(0.1)
    assert data["records"][0]["w_eps_ratio"] == pytest.approx(0.2 / 0.125 ** 0.25)
    again = SweepReport.from_dict(data)
    assert again.records[0].l2_error == 0.01 and again.slope == 0.6
