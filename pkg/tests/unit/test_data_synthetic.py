from __future__ import annotations

import numpy as np
import pytest

from gtn.data import (
    Dataset,
    SyntheticTransferSpec,
    fisher_ratio,
    generate_synthetic,
    informative_channels,
    probe_accuracy,
    split_dataset,
)
from gtn.data.synthetic import factor_layout
from gtn.errors import DatasetError
from gtn.tensor import Rng, Tensor


def test_generation_is_a_pure_function_of_the_spec():
    spec = SyntheticTransferSpec(input_dim=16, factors_per_task=4, samples_per_class=10, seed=3)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    for split in ("train", "val", "test"):
        assert np.array_equal(a.source[split].inputs.array, b.source[split].inputs.array)
        assert np.array_equal(a.target[split].labels, b.target[split].labels)
    other = generate_synthetic(SyntheticTransferSpec(input_dim=16, factors_per_task=4, seed=4))
    assert not np.array_equal(a.source.train.inputs.array[:5], other.source.train.inputs.array[:5])


@pytest.mark.parametrize("overlap, shared", [(0.0, 0), (0.25, 2), (0.5, 4), (1.0, 8)])
def test_factor_layout_shares_the_requested_dims(overlap, shared):
    spec = SyntheticTransferSpec(input_dim=32, factors_per_task=8, overlap=overlap)
    layout = factor_layout(spec, Rng(0))
    assert len(set(layout.source_dims)) == 8
    assert len(set(layout.target_dims)) == 8
    assert len(layout.shared_dims) == shared
    assert layout.overlap == pytest.approx(shared / 8)
    union = set(layout.source_dims) | set(layout.target_dims)
    assert len(layout.complement(tuple(union), 32)) == 32 - len(union)


def test_infeasible_specs_are_rejected():
    with pytest.raises(DatasetError):
        SyntheticTransferSpec(input_dim=64, factors_per_task=40, overlap=0.0)
    with pytest.raises(DatasetError):
        SyntheticTransferSpec(overlap=1.5)
    with pytest.raises(DatasetError):
        SyntheticTransferSpec(noise_std=0.0)
    with pytest.raises(DatasetError):
        SyntheticTransferSpec(input_dim=64, image_shape=(1, 4, 4))
    with pytest.raises(DatasetError):
        SyntheticTransferSpec(source_classes=2, target_classes=3, shared_prototypes=True)


def test_splits_are_stratified_disjoint_and_complete(tiny_task):
    source = tiny_task.source
    index = source.provenance["split_indices"]
    combined = sorted(index["train"] + index["val"] + index["test"])
    assert combined == list(range(4 * 20))
    assert len(source.train) == 4 * 14
    assert len(source.val) == 4 * 3
    assert source.test.class_counts() == [3, 3, 3, 3]
    assert source.provenance["task"] == "source"


def test_split_dataset_rejects_bad_fractions():
    inputs = Tensor.ones((10, 2))
    labels = np.arange(10) % 2
    with pytest.raises(DatasetError):
        split_dataset(inputs, labels, 2, Rng(0), fractions=(0.5, 0.5, 0.5))


def test_image_shaped_generation():
    spec = SyntheticTransferSpec(
        input_dim=64, factors_per_task=8, samples_per_class=5, image_shape=(1, 8, 8)
    )
    task = generate_synthetic(spec)
    assert task.source.input_shape == (1, 8, 8)
    assert task.target.train.inputs.shape[1:] == (1, 8, 8)


def test_full_overlap_with_shared_prototypes_gives_matching_class_means():
    spec = SyntheticTransferSpec(
        input_dim=32,
        source_classes=4,
        target_classes=4,
        factors_per_task=8,
        samples_per_class=200,
        overlap=1.0,
        shared_prototypes=True,
        seed=1,
    )
    task = generate_synthetic(spec)
    assert set(task.layout.source_dims) == set(task.layout.target_dims)
    for c in range(4):
        src = task.source.train.inputs.array[task.source.train.labels == c].mean(axis=0)
        tgt = task.target.train.inputs.array[task.target.train.labels == c].mean(axis=0)
        assert np.max(np.abs(src - tgt)) < 0.3


def test_probe_separates_informative_and_noise_dims():
    spec = SyntheticTransferSpec(
        input_dim=32,
        source_classes=4,
        target_classes=4,
        factors_per_task=8,
        samples_per_class=200,
        overlap=0.0,
        seed=2,
    )
    task = generate_synthetic(spec)
    layout = task.layout
    source = task.source
    assert probe_accuracy(source.train, source.test, layout.source_dims) > 0.9
    noise = layout.complement(layout.source_dims + layout.target_dims, 32)
    assert probe_accuracy(source.train, source.test, noise) < 0.45
    with pytest.raises(DatasetError):
        probe_accuracy(source.train, source.test, [])


def test_fisher_ratio_ranks_class_dependent_channels():
    labels = np.repeat([0, 1], 50)
    rng = Rng(3)
    informative = labels * 4.0 + rng.normal(100)
    noise = rng.normal(100)
    features = np.stack([informative, noise], axis=1)
    ratio = fisher_ratio(features, labels, 2)
    assert ratio[0] > 10 * ratio[1]
    assert informative_channels(features, labels, 2).tolist() == [True, False]
    with pytest.raises(DatasetError):
        fisher_ratio(features[:10], labels, 2)


def test_dataset_validation_and_batches():
    with pytest.raises(DatasetError):
        Dataset(Tensor.ones((2, 2)), np.array([0, 1]), 0)
    ds = Dataset(Tensor(np.arange(10.0), shape=(5, 2)), np.array([0, 1, 0, 1, 1]), 2)
    sizes = [labels.size for _, labels in ds.batches(2)]
    assert sizes == [2, 2, 1]
    assert [labels.size for _, labels in ds.batches(2, min_batch=2)] == [2, 2]
    shuffled = np.concatenate([labels for _, labels in ds.batches(2, Rng(1))])
    assert sorted(shuffled.tolist()) == sorted(ds.labels.tolist())
    assert ds.class_counts() == [2, 3]
    assert ds.summary()["count"] == 5
