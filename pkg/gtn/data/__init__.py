from gtn.data.augment import AugmentationPolicy, augment, flip_horizontal, sample_crop_boxes
from gtn.data.dataset import Dataset, DatasetSplits, Split, split_dataset
from gtn.data.io import export_csv, import_csv, load_dataset, read_csv_dataset, save_dataset
from gtn.data.probe import fisher_ratio, informative_channels, probe_accuracy
from gtn.data.synthetic import (
    FactorLayout,
    SyntheticTask,
    SyntheticTransferSpec,
    generate_synthetic,
)

__all__ = [
    "AugmentationPolicy",
    "Dataset",
    "DatasetSplits",
    "FactorLayout",
    "Split",
    "SyntheticTask",
    "SyntheticTransferSpec",
    "augment",
    "export_csv",
    "fisher_ratio",
    "flip_horizontal",
    "generate_synthetic",
    "import_csv",
    "informative_channels",
    "load_dataset",
    "probe_accuracy",
    "read_csv_dataset",
    "sample_crop_boxes",
    "save_dataset",
    "split_dataset",
]
