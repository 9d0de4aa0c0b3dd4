# backend/app/tests/models/test_unisolver.py
import numpy as np
import pytest

from app.autodiff import functional as F
from app.autodiff.gradcheck import check_parameter_gradients
from app.autodiff.tensor import Tensor
from app.core.exceptions import ConfigError, DimensionError
from app.models.baselines import append_condition_channels, extra_channels, uses_deep_conditions
from app.models.condition_embedding import ConditionBatch, DeepConditions, boundary_one_hot
from app.models.unisolver import (
    TransformerBlock,
    UnisolverModel,
    block_forward,
    pinned_triple,
    rollout,
    split_subspace,
)
from app.schemas.model_config import BaselineKind
from app.schemas.pde_components import BoundarySpec
from app.tests.helpers import plain_vit, randomize_parameters, tiny_config


def random_conditions(rng, b=2, n_tokens=4, d_cond=8):
    return DeepConditions(Tensor(rng.normal(size=(b, d_cond))), Tensor(rng.normal(size=(b, n_tokens, d_cond))))


def condition_batch(rng, b=2):
    return ConditionBatch(
        symbols=rng.normal(size=(b, 8)),
        coefficients=rng.normal(size=(b, 1)),
        boundary=np.stack([boundary_one_hot(BoundarySpec.periodic(2))] * b),
        fields={"force": rng.normal(size=(b, 4, 4))},
        field_present={"force": np.ones(b, dtype=bool)},
    )


class TestSubspaceSplit:
    @pytest.mark.parametrize("width, alpha, expected", [(64, 0.5, (32, 32)), (10, 0.25, (2, 8)), (16, 0.7, (11, 5))])
    def test_floor_split(self, width, alpha, expected):
        assert split_subspace(width, alpha) == expected

    def test_from_config(self):
        assert split_subspace(tiny_config(alpha=0.25)) == (4, 12)

    def test_degenerate_alpha(self):
        with pytest.raises(ConfigError):
            split_subspace(16, 0.0)
        with pytest.raises(ConfigError):
            split_subspace(4, 0.1)


class TestInitialization:
    def test_block_is_identity(self, rng):
        config = tiny_config()
        block = TransformerBlock(config, rng)
        x = Tensor(rng.normal(size=(2, 4, 16)))
        attn, ffn = block.triples(random_conditions(rng), 4)
        np.testing.assert_array_equal(block(x, attn, ffn).data, x.data)

    def test_output_ignores_conditions_at_init(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        x = rng.normal(size=(2, 1, 4, 4))
        a = model.forward(x, random_conditions(rng)).data
        b = model.forward(x, random_conditions(rng)).data
        np.testing.assert_array_equal(a, b)

    def test_deterministic_from_seed(self):
        a = UnisolverModel(tiny_config(), np.random.default_rng(5)).state_dict()
        b = UnisolverModel(tiny_config(), np.random.default_rng(5)).state_dict()
        assert a.keys() == b.keys()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_parameter_names(self, rng):
        names = set(UnisolverModel(tiny_config(), rng).parameters())
        for expected in ("patch_embed.weight", "blocks.0.qkv.weight", "blocks.1.attn_condition.domain.weight",
                         "blocks.1.ffn_condition.point.bias", "embedder.point.force.weight",
                         "norm_final.gain", "head_condition.domain.weight", "head.bias"):
            assert expected in names
        assert not any("pos_embed" in name for name in names)

    def test_needs_resolved_layout(self):
        with pytest.raises(ConfigError):
            UnisolverModel(tiny_config(grid_h=None))


class TestPlainTransformerReduction:
    def test_pinned_forward_matches_reference_vit(self, rng):
        config = tiny_config()
        model = UnisolverModel(config, rng)
        randomize_parameters(model, seed=3)
        x = rng.normal(size=(2, 1, 4, 4))
        ours = model.forward(x, random_conditions(rng), pinned=True).data
        reference = plain_vit(model.state_dict(), model.pos_embed, config, x)
        assert np.max(np.abs(ours - reference)) < 1e-12

    def test_pinned_triple(self):
        scale, shift, select = pinned_triple((1, 2, 3))
        assert np.all(scale.data == 1.0) and np.all(select.data == 1.0) and not shift.data.any()

    def test_pinned_block_is_plain_residual(self, rng):
        block = TransformerBlock(tiny_config(), rng)
        randomize_parameters(block, seed=5)
        x = Tensor(rng.normal(size=(2, 4, 16)))
        ours = block_forward(block, x, pinned_triple(x.shape), pinned_triple(x.shape)).data
        h = x.data + block.attention(block.norm1(x)).data
        expected = h + block.feedforward(block.norm2(Tensor(h))).data
        assert np.max(np.abs(ours - expected)) < 1e-12

    def test_block_rejects_mismatched_triple(self, rng):
        block = TransformerBlock(tiny_config(), rng)
        x = Tensor(rng.normal(size=(2, 4, 16)))
        with pytest.raises(DimensionError):
            block_forward(block, x, pinned_triple((2, 3, 16)), pinned_triple(x.shape))


class TestSubspaceDecoupling:
    def test_domain_slice_ignores_point_conditions(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        randomize_parameters(model, seed=1)
        d_domain, _ = split_subspace(model.config)
        conds = random_conditions(rng)
        moved = DeepConditions(conds.c_domain, Tensor(conds.c_point.data + rng.normal(size=conds.c_point.shape)))
        for site in ("attention", "feedforward"):
            for before, after in zip(model.condition_triple(conds, 1, site), model.condition_triple(moved, 1, site)):
                np.testing.assert_array_equal(before.data[..., :d_domain], after.data[..., :d_domain])
                assert not np.allclose(before.data[..., d_domain:], after.data[..., d_domain:])

    def test_point_slice_ignores_domain_conditions(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        randomize_parameters(model, seed=2)
        d_domain, _ = split_subspace(model.config)
        conds = random_conditions(rng)
        moved = DeepConditions(Tensor(conds.c_domain.data + 1.0), conds.c_point)
        for before, after in zip(model.condition_triple(conds, 0), model.condition_triple(moved, 0)):
            np.testing.assert_array_equal(before.data[..., d_domain:], after.data[..., d_domain:])

    def test_domain_slice_shared_by_tokens(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        randomize_parameters(model, seed=4)
        d_domain, _ = split_subspace(model.config)
        for part in model.condition_triple(random_conditions(rng), 0, "feedforward"):
            dom = part.data[..., :d_domain]
            np.testing.assert_array_equal(dom, np.broadcast_to(dom[:, :1], dom.shape))

    def test_no_subspace_variant_mixes_widths(self, rng):
        model = UnisolverModel(tiny_config(baseline=BaselineKind.NO_SUBSPACE), rng)
        randomize_parameters(model, seed=1)
        conds = random_conditions(rng)
        moved = DeepConditions(conds.c_domain, Tensor(conds.c_point.data + 1.0))
        before, after = model.condition_triple(conds, 0)[1], model.condition_triple(moved, 0)[1]
        assert not np.allclose(before.data[..., :8], after.data[..., :8])

    def test_unknown_site(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        with pytest.raises(ConfigError):
            model.condition_triple(random_conditions(rng), 0, "output")


class TestGradients:
    def test_model_gradients_match_finite_differences(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        randomize_parameters(model, seed=7)
        x = rng.normal(size=(2, 1, 4, 4))
        batch = condition_batch(rng)
        w = rng.normal(size=(2, 1, 4, 4))

        def loss():
            return F.sum(F.mul(model(x, batch), w))

        result = check_parameter_gradients(loss, model.parameters(), h=1e-5, max_elements=4, seed=0)
        assert result.max_rel_error < 1e-4, result.worst()

    def test_block_gradients(self, rng):
        config = tiny_config()
        block = TransformerBlock(config, rng)
        randomize_parameters(block, seed=9)
        x = Tensor(rng.normal(size=(2, 4, 16)))
        conds = random_conditions(rng)
        w = rng.normal(size=(2, 4, 16))

        def loss():
            attn, ffn = block.triples(conds, 4)
            return F.sum(F.mul(block(x, attn, ffn), w))

        params = {name: t for name, t in block.parameters().items() if "condition" not in name}
        assert check_parameter_gradients(loss, params, h=1e-5, max_elements=8).max_rel_error < 1e-4


class TestShapeChecks:
    def test_wrong_input_grid(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        with pytest.raises(DimensionError):
            model.forward(rng.normal(size=(2, 1, 4, 6)), random_conditions(rng))

    def test_batch_size_mismatch(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        with pytest.raises(DimensionError):
            model.forward(rng.normal(size=(3, 1, 4, 4)), random_conditions(rng, b=2))

    def test_token_count_mismatch(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        with pytest.raises(DimensionError):
            model.forward(rng.normal(size=(2, 1, 4, 4)), random_conditions(rng, n_tokens=5))


class TestBaselines:
    def test_ablated_embeds_zeros(self, rng):
        model = UnisolverModel(tiny_config(baseline=BaselineKind.ABLATED), rng)
        assert not uses_deep_conditions(model.config)
        conds = model.embed(condition_batch(rng))
        assert not conds.c_domain.data.any() and not conds.c_point.data.any()

    def test_concat_channels(self, rng):
        config = tiny_config(baseline=BaselineKind.CONCAT, active_kinds=["symbols", "coefficients", "force", "kappa"])
        assert extra_channels(config) == 3
        batch = condition_batch(rng)
        x = rng.normal(size=(2, 1, 4, 4))
        out = append_condition_channels(x, batch, config)
        assert out.shape == (2, 4, 4, 4)
        np.testing.assert_array_equal(out[:, 0], x[:, 0])
        np.testing.assert_array_equal(out[1, 1], np.full((4, 4), batch.coefficients[1, 0]))
        np.testing.assert_array_equal(out[:, 2], batch.fields["force"])
        assert not out[:, 3].any()

    def test_other_variants_pass_through(self, rng):
        x = rng.normal(size=(2, 1, 4, 4))
        assert append_condition_channels(x, condition_batch(rng), tiny_config()) is x
        assert extra_channels(tiny_config()) == 0

    def test_concat_model_runs(self, rng):
        config = tiny_config(baseline=BaselineKind.CONCAT, in_channels=6)
        model = UnisolverModel(config, rng)
        batch = condition_batch(rng)
        x = append_condition_channels(rng.normal(size=(2, 1, 4, 4)), batch, config)
        assert model(x, batch).shape == (2, 1, 4, 4)


class TestRollout:
    def frames_model(self, rng):
        model = UnisolverModel(tiny_config(task_mode="frames", in_channels=2), rng)
        randomize_parameters(model, seed=5, std=0.1)
        return model

    def test_predictions_are_fed_back(self, rng):
        model = self.frames_model(rng)
        frames = rng.normal(size=(1, 2, 4, 4))
        conds = random_conditions(rng, b=1)
        out = rollout(model, frames, conds, steps=3)
        assert out.shape == (1, 3, 4, 4)
        first = model.forward(frames, conds).data
        np.testing.assert_array_equal(out[:, :1], first)
        second = model.forward(np.concatenate([frames[:, 1:], first], axis=1), conds).data
        np.testing.assert_array_equal(out[:, 1:2], second)

    def test_needs_frames_mode(self, rng):
        model = UnisolverModel(tiny_config(), rng)
        with pytest.raises(ConfigError):
            rollout(model, rng.normal(size=(1, 1, 4, 4)), random_conditions(rng, b=1), steps=1)

    def test_frame_count_checked(self, rng):
        model = self.frames_model(rng)
        with pytest.raises(DimensionError):
            rollout(model, rng.normal(size=(1, 3, 4, 4)), random_conditions(rng, b=1), steps=1)
        with pytest.raises(ConfigError):
            rollout(model, rng.normal(size=(1, 2, 4, 4)), random_conditions(rng, b=1), steps=0)
