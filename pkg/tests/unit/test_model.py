from __future__ import annotations

import numpy as np
import pytest

from gtn.errors import DimensionError, LayerStateError
from gtn.layers import Mode, grad_check
from gtn.model import (
    GROUPS,
    MODEL_VARIANTS,
    Backbone,
    BackboneSpec,
    ModelObjective,
    build_da_baseline,
    build_model,
    combine,
    combined_loss,
    list_supported_variants,
)
from gtn.tensor import Rng, Tensor
from gtn.transfer import param_count


def test_backbone_spec_defaults_and_validation():
    mlp = BackboneSpec(input_shape=(6,), widths=(8, 4))
    assert mlp.aux_tap == 0
    assert mlp.feature_dim == 4
    assert mlp.aux_dim == 8
    cnn = BackboneSpec(kind="cnn", input_shape=(1, 8, 8), channels=(4, 6, 8))
    assert cnn.aux_tap == 1
    assert cnn.aux_dim == 6
    assert BackboneSpec.from_dict(cnn.to_dict()) == cnn
    with pytest.raises(DimensionError):
        BackboneSpec(kind="cnn", input_shape=(8,))
    with pytest.raises(ValueError):
        BackboneSpec(input_shape=(6,), widths=(8,))
    with pytest.raises(ValueError):
        BackboneSpec(input_shape=(6,), widths=(8, 4), aux_tap=1)


def test_cnn_backbone_emits_pooled_features(rng):
    spec = BackboneSpec(kind="cnn", input_shape=(1, 8, 8), channels=(4, 6, 8))
    backbone = Backbone(spec, rng)
    out = backbone.forward(Tensor.wrap(rng.normal((2, 1, 8, 8))))
    assert out.shape == (2, 8)
    assert backbone.tapped.shape == (2, 6, 2, 2)
    with pytest.raises(DimensionError):
        backbone.forward(Tensor.ones((2, 1, 6, 6)))


def test_registry_lists_every_variant():
    assert list_supported_variants() == sorted(MODEL_VARIANTS)
    assert {"gtn", "residual", "classic-ft", "fixed-feature", "da-cnn", "plain"} <= set(
        MODEL_VARIANTS
    )
    backbone = Backbone(BackboneSpec(input_shape=(6,), widths=(8, 8)))
    with pytest.raises(ValueError):
        build_model("nope", backbone, 3)


def test_gtn_model_structure(make_model):
    model = make_model("gtn")
    assert model.transfer is not None
    assert model.aux_head is not None
    counts = {group: model.count_parameters([group]) for group in GROUPS}
    assert counts["adapter"] == param_count(8, 2)
    assert counts["main_head"] == 8 * 3 + 3
    assert counts["aux_head"] == 8 * 3 + 3
    assert model.count_parameters() == sum(counts.values())


def test_variant_specific_structure(make_model):
    assert make_model("classic-ft").count_parameters(["adapter"]) == 0
    assert make_model("classic-ft").aux_head is None
    fixed = make_model("fixed-feature")
    assert fixed.is_frozen("backbone")
    fixed.unfreeze("backbone")
    assert fixed.is_frozen("backbone")
    assert make_model("plain").adapter is None
    assert make_model("gtn", lam=0.0).aux_head is None


def test_forward_outputs(make_model, rng):
    model = make_model("gtn")
    x = Tensor.wrap(rng.normal((5, 6)))
    out = model.forward(x, Mode.EVAL)
    assert out.main_logits.shape == (5, 3)
    assert out.aux_logits is None
    assert out.gate.shape == (5, 8)
    assert np.allclose(out.adapted.array, out.features.array * out.gate.array)
    model.set_dropout_rng(rng.split("dropout"))
    train = model.forward(x, Mode.TRAIN)
    assert train.aux_logits.shape == (5, 3)
    assert model.predict(x).shape == (5,)


def test_combined_loss_is_main_plus_weighted_aux():
    logits = Tensor.zeros((2, 4))
    labels = np.array([0, 1])
    result = combined_loss(logits, logits, labels, 0.5)
    assert result.main == pytest.approx(np.log(4))
    assert result.total == pytest.approx(1.5 * np.log(4))
    assert combined_loss(logits, None, labels, 0.5).aux == 0.0
    with pytest.raises(ValueError):
        combine(1.0, 1.0, -0.1)


@pytest.mark.parametrize("variant", ["gtn", "residual", "classic-ft", "da-cnn"])
def test_model_gradients(variant):
    rng = Rng(17)
    backbone = Backbone(BackboneSpec(input_shape=(6,), widths=(8, 8)), rng.split("backbone"))
    model = build_model(variant, backbone, 3, rng=rng.split("model"))
    labels = rng.split("labels").integers(0, 3, 6)
    objective = ModelObjective(model, labels, compute_aux=True)
    mode = Mode.TRAIN if variant == "da-cnn" else Mode.EVAL
    assert grad_check(objective, (6, 6), rng.split("check"), mode=mode) < 1e-5


def test_zero_lambda_matches_model_without_aux(make_model, rng):
    with_aux = make_model("gtn", lam=0.2)
    with_aux.lam = 0.0
    without = make_model("gtn", lam=0.0)
    x = Tensor.wrap(rng.normal((4, 6)))
    labels = np.array([0, 1, 2, 0])
    for model in (with_aux, without):
        out = model.forward(x, Mode.EVAL, compute_aux=True)
        model.loss(out, labels)
        model.backward()
    for group in ("backbone", "adapter", "main_head"):
        for a, b in zip(with_aux.parameters([group]), without.parameters([group]), strict=True):
            assert np.array_equal(a.grad, b.grad)
    assert not any(p.grad.any() for p in with_aux.parameters(["aux_head"]))


def test_frozen_backbone_gets_no_gradient(make_model, rng):
    model = make_model("gtn")
    model.freeze("backbone")
    out = model.forward(Tensor.wrap(rng.normal((4, 6))), Mode.EVAL, compute_aux=True)
    model.loss(out, np.array([0, 1, 2, 0]))
    assert model.backward() is None
    assert not any(p.grad.any() for p in model.parameters(["backbone"]))
    assert any(p.grad.any() for p in model.parameters(["main_head"]))
    with pytest.raises(ValueError):
        model.freeze("head")


def test_backward_needs_loss(make_model):
    with pytest.raises(LayerStateError):
        make_model("gtn").backward()


def test_da_baseline_uses_batchnorm_neck():
    backbone = Backbone(BackboneSpec(input_shape=(6,), widths=(8, 8)), Rng(0))
    model = build_da_baseline(backbone, 3, Rng(1))
    assert model.variant == "da-cnn"
    assert model.transfer is None
    kinds = [layer.kind for layer in model.adapter.walk()]
    assert "batchnorm1d" in kinds


def test_checksum_tracks_backbone_values(make_model):
    model = make_model("gtn")
    before = model.backbone_checksum()
    assert before == make_model("gtn").backbone_checksum()
    model.backbone.parameters()[0].data[0, 0] += 1.0
    assert model.backbone_checksum() != before


def test_da_baseline_parameter_count(make_model):
    model = make_model("da-cnn", classes=3)
    c, k = 8, 3
    assert model.count_parameters(["adapter", "main_head"]) == c * c + c + 2 * c + c * k + k


def test_single_class_head_has_zero_loss(make_model, rng):
    model = make_model("gtn", classes=1)
    x = Tensor.wrap(rng.normal((4, 6)))
    out = model.forward(x, Mode.EVAL, compute_aux=True)
    losses = model.loss(out, np.zeros(4, dtype=np.int64))
    assert losses.main == pytest.approx(0.0, abs=1e-12)
    assert losses.total == pytest.approx(0.0, abs=1e-12)


def test_combined_loss_is_linear_in_lambda(rng):
    main_logits = Tensor.wrap(rng.normal((5, 4)))
    aux_logits = Tensor.wrap(rng.normal((5, 4)))
    labels = np.array([0, 1, 2, 3, 1])
    low = combined_loss(main_logits, aux_logits, labels, 0.2)
    high = combined_loss(main_logits, aux_logits, labels, 0.8)
    assert low.main == high.main
    assert low.aux == high.aux
    assert low.total == low.main + 0.2 * low.aux
    assert high.total - low.total == pytest.approx(0.6 * low.aux)
    assert combine(1.0, 0.5, 0.2).total == pytest.approx(1.1)


def test_classic_ft_matches_plain_model_bit_for_bit(make_model, rng):
    bypass = make_model("classic-ft", seed=4)
    plain = make_model("plain", seed=4)
    x = Tensor.wrap(rng.normal((5, 6)))
    labels = np.array([0, 1, 2, 0, 1])
    outputs, losses = [], []
    for model in (bypass, plain):
        model.zero_grad()
        out = model.forward(x, Mode.TRAIN)
        losses.append(model.loss(out, labels))
        model.backward()
        outputs.append(out.main_logits.array)
    assert np.array_equal(outputs[0], outputs[1])
    assert losses[0] == losses[1]
    for group in ("backbone", "main_head"):
        pairs = zip(bypass.parameters([group]), plain.parameters([group]), strict=True)
        for a, b in pairs:
            assert np.array_equal(a.data, b.data)
            assert np.array_equal(a.grad, b.grad)
