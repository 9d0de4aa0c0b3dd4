# backend/app/tests/models/test_condition_embedding.py
import numpy as np
import pytest

from app.core.exceptions import ConfigError, DimensionError
from app.models.condition_embedding import (
    BOUNDARY_SLOTS,
    ConditionBatch,
    ConditionEmbedder,
    DeepConditions,
    boundary_one_hot,
)
from app.schemas.pde_components import BoundaryKind, BoundarySpec, RobinParams, Side
from app.tests.helpers import tiny_config


@pytest.fixture
def embedder():
    return ConditionEmbedder(tiny_config(), np.random.default_rng(0))


def condition_batch(rng, b=3):
    return ConditionBatch(
        symbols=rng.normal(size=(b, 8)),
        coefficients=rng.normal(size=(b, 1)),
        boundary=np.stack([boundary_one_hot(BoundarySpec.periodic(2))] * b),
        fields={"force": rng.normal(size=(b, 4, 4))},
        field_present={"force": np.ones(b, dtype=bool)},
    )


class TestBoundaryEncoding:
    def test_one_slot_per_side(self):
        assert boundary_one_hot(BoundarySpec.periodic(1)).sum() == 2
        assert boundary_one_hot(BoundarySpec.periodic(2)).sum() == 4
        assert BOUNDARY_SLOTS == 16

    def test_kinds_map_to_different_slots(self):
        fixed = RobinParams(alpha=1.0, beta=0.0, gamma=0.0)
        dirichlet = BoundarySpec(sides={Side.LEFT: BoundaryKind.DIRICHLET, Side.RIGHT: BoundaryKind.DIRICHLET},
                                 robin={Side.LEFT: fixed, Side.RIGHT: fixed})
        overlap = boundary_one_hot(dirichlet) * boundary_one_hot(BoundarySpec.periodic(1))
        assert overlap.sum() == 0


class TestDomainwise:
    def test_absent_components_give_zero(self, embedder):
        out = embedder.embed_domainwise(batch_size=2)
        np.testing.assert_array_equal(out.data, np.zeros((2, 8)))

    def test_sum_of_adapters(self, embedder, rng):
        symbols, coefficients = rng.normal(size=(2, 8)), rng.normal(size=(2, 1))
        both = embedder.embed_domainwise(symbols=symbols, coefficients=coefficients).data
        parts = (embedder.embed_domainwise(symbols=symbols).data
                 + embedder.embed_domainwise(coefficients=coefficients).data)
        np.testing.assert_allclose(both, parts, atol=1e-14)

    def test_missing_coefficient_masked(self, embedder, rng):
        out = embedder.embed_domainwise(coefficients=rng.normal(size=(2, 1)), coefficient_present=np.array([True, False]))
        assert np.any(out.data[0] != 0.0)
        np.testing.assert_array_equal(out.data[1], np.zeros(8))

    def test_coefficient_width_checked(self, embedder):
        with pytest.raises(DimensionError):
            embedder.embed_domainwise(coefficients=np.ones((2, 3)))

    def test_inactive_adapter_starts_at_zero(self, rng):
        config = tiny_config(active_kinds=["coefficients", "boundary"])
        quiet = ConditionEmbedder(config, np.random.default_rng(0))
        out = quiet.embed_domainwise(symbols=rng.normal(size=(2, 8)))
        np.testing.assert_array_equal(out.data, np.zeros((2, 8)))


class TestPointwise:
    def test_token_shape(self, embedder, rng):
        out = embedder.embed_pointwise({"force": rng.normal(size=(3, 4, 4))})
        assert out.shape == (3, 4, 8)

    def test_single_field_broadcasts_batch_axis(self, embedder, rng):
        assert embedder.embed_pointwise({"kappa": rng.normal(size=(4, 4))}).shape == (1, 4, 8)

    def test_no_fields(self, embedder):
        out = embedder.embed_pointwise({}, batch_size=2)
        np.testing.assert_array_equal(out.data, np.zeros((2, 4, 8)))

    def test_patch_locality(self, embedder, rng):
        field = rng.normal(size=(1, 4, 4))
        base = embedder.embed_pointwise({"force": field}).data
        field[0, 3, 3] += 1.0
        moved = embedder.embed_pointwise({"force": field}).data
        changed = np.any(moved != base, axis=-1)[0]
        np.testing.assert_array_equal(changed, [False, False, False, True])

    def test_absent_rows_masked(self, embedder, rng):
        out = embedder.embed_pointwise({"force": rng.normal(size=(2, 4, 4))}, {"force": np.array([False, True])})
        np.testing.assert_array_equal(out.data[0], np.zeros((4, 8)))

    def test_errors(self, embedder, rng):
        with pytest.raises(ConfigError):
            embedder.embed_pointwise({"pressure": rng.normal(size=(1, 4, 4))})
        with pytest.raises(DimensionError):
            embedder.embed_pointwise({"force": rng.normal(size=(1, 4, 6))})

    def test_inactive_point_adapter(self, rng):
        config = tiny_config(active_kinds=["symbols", "coefficients", "boundary"])
        quiet = ConditionEmbedder(config, np.random.default_rng(0))
        out = quiet.embed_pointwise({"force": rng.normal(size=(1, 4, 4))})
        np.testing.assert_array_equal(out.data, np.zeros((1, 4, 8)))


class TestFullEmbedding:
    def test_call_shapes(self, embedder, rng):
        conditions = embedder(condition_batch(rng))
        assert conditions.c_domain.shape == (3, 8)
        assert conditions.c_point.shape == (3, 4, 8)

    def test_zero_conditions(self):
        zeros = DeepConditions.zeros(2, 4, 8)
        assert zeros.c_domain.shape == (2, 8) and not zeros.c_domain.data.any()
        assert zeros.c_point.shape == (2, 4, 8) and not zeros.c_point.data.any()

    def test_parameter_names(self, embedder):
        names = set(embedder.parameters())
        assert {"symbols.fc1.weight", "coefficients.fc2.bias", "boundary_table.table",
                "boundary.fc1.weight", "point.force.weight", "point.boundary_values.bias"} <= names
