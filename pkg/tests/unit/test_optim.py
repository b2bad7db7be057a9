from __future__ import annotations

import numpy as np
import pytest

from gtn.errors import NonFiniteError
from gtn.layers import Parameter
from gtn.optim import (
    NO_FREEZE,
    FreezeProtocol,
    PlateauSchedule,
    SgdState,
    lr_trace,
    schedule_step,
    sgd_step,
)


def _param(value: float, grad: float) -> Parameter:
    param = Parameter("w", np.array([value]))
    param.grad[...] = grad
    return param


def test_sgd_momentum_two_steps():
    state = SgdState(lr=0.1, momentum=0.9, weight_decay=0.0)
    param = _param(1.0, 1.0)
    sgd_step(state, {"main_head": [param]})
    assert param.data[0] == pytest.approx(0.9)
    sgd_step(state, {"main_head": [param]})
    assert param.data[0] == pytest.approx(0.71)


def test_sgd_weight_decay_is_coupled():
    state = SgdState(lr=0.1, momentum=0.0, weight_decay=0.5)
    param = _param(2.0, 0.0)
    sgd_step(state, {"adapter": [param]})
    assert param.data[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


def test_sgd_skips_frozen_groups_and_buffers():
    state = SgdState(lr=0.1)
    frozen = _param(1.0, 1.0)
    buffer = Parameter("running_mean", np.array([1.0]), trainable=False)
    buffer.grad[...] = 1.0
    sgd_step(state, {"backbone": [frozen], "adapter": [buffer]}, frozen={"backbone"})
    assert frozen.data[0] == 1.0
    assert buffer.data[0] == 1.0


def test_zero_learning_rate_leaves_parameters_unchanged():
    state = SgdState(lr=0.0, momentum=0.9, weight_decay=1e-4)
    param = _param(0.3, 5.0)
    for _ in range(3):
        sgd_step(state, {"main_head": [param]})
    assert param.data[0] == 0.3


def test_sgd_refuses_non_finite_gradients():
    param = _param(1.0, 0.0)
    param.grad[0] = np.nan
    with pytest.raises(NonFiniteError):
        sgd_step(SgdState(), {"main_head": [param]})
    with pytest.raises(ValueError):
        SgdState(lr=-1.0)


def test_plateau_divides_rate_after_patience_epochs():
    sched = PlateauSchedule(initial_lr=0.01, factor=0.1, patience=3)
    assert schedule_step(sched, [0.5]) == 0.01
    assert schedule_step(sched, [0.5] * 3) == 0.01
    assert schedule_step(sched, [0.5] * 4) == pytest.approx(0.001)
    assert sched.triggers == 1


def test_plateau_trace_and_floor():
    sched = PlateauSchedule(initial_lr=0.01, factor=0.1, patience=3)
    assert lr_trace(sched, [0.5] * 7) == pytest.approx([0.01, 0.001, 0.0001])
    floored = PlateauSchedule(initial_lr=1e-4, factor=0.1, patience=1, min_lr=1e-5)
    assert lr_trace(floored, [0.5, 0.5, 0.5, 0.5]) == pytest.approx([1e-4, 1e-5])


def test_plateau_improvement_resets_wait():
    sched = PlateauSchedule(initial_lr=0.1, patience=2, min_delta=0.01)
    assert lr_trace(sched, [0.5, 0.5, 0.4, 0.5, 0.3]) == [0.1]
    with pytest.raises(ValueError):
        PlateauSchedule(factor=1.0)
    with pytest.raises(ValueError):
        PlateauSchedule(patience=0)
    with pytest.raises(ValueError):
        schedule_step(PlateauSchedule(), [])


def test_freeze_protocol_phases(make_model):
    model = make_model("gtn")
    protocol = FreezeProtocol(freeze_epochs=2)
    assert protocol.apply(model, 0)
    assert model.is_frozen("backbone")
    assert protocol.apply(model, 1)
    assert not protocol.apply(model, 2)
    assert not model.is_frozen("backbone")
    assert not NO_FREEZE.apply(model, 0)
    with pytest.raises(ValueError):
        FreezeProtocol(freeze_epochs=-1)


def test_freeze_protocol_keeps_fixed_feature_backbone_frozen(make_model):
    model = make_model("fixed-feature")
    FreezeProtocol(freeze_epochs=1).apply(model, 5)
    assert model.is_frozen("backbone")
