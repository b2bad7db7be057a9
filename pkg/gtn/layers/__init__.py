"""Layers with hand-derived forward and backward passes."""
from gtn.layers.activations import ReLU, Sigmoid
from gtn.layers.base import Layer, Mode, Parameter, Sequential
from gtn.layers.batchnorm import BatchNorm1dLayer
from gtn.layers.conv import Conv2dLayer
from gtn.layers.dropout import DropoutLayer
from gtn.layers.gradcheck import grad_check
from gtn.layers.linear import LinearLayer
from gtn.layers.loss import SoftmaxCrossEntropy
from gtn.layers.pooling import Flatten, GlobalAvgPool, MaxPool2d, global_avg_pool

__all__ = [
    "BatchNorm1dLayer",
    "Conv2dLayer",
    "DropoutLayer",
    "Flatten",
    "GlobalAvgPool",
    "Layer",
    "LinearLayer",
    "MaxPool2d",
    "Mode",
    "Parameter",
    "ReLU",
    "Sequential",
    "Sigmoid",
    "SoftmaxCrossEntropy",
    "global_avg_pool",
    "grad_check",
]
