from __future__ import annotations

from gtn.layers.base import Layer, Mode
from gtn.tensor import Tensor
from gtn.tensor.ops import relu_array, sigmoid_array


class ReLU(Layer):
    kind = "relu"

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._save(x.array > 0.0)
        return self._output(relu_array(x.array))

    def backward(self, grad_output: Tensor) -> Tensor:
        active = self._pop()
        self._expect_grad(grad_output, active.shape)
        return self._output(grad_output.array * active)


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        out = sigmoid_array(x.array)
        self._save(out)
        return self._output(out)

    def backward(self, grad_output: Tensor) -> Tensor:
        out = self._pop()
        self._expect_grad(grad_output, out.shape)
        return self._output(grad_output.array * out * (1.0 - out))
