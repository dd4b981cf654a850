from mts.dataset import MtsRecord, MtsDataset, RawStay, MissingPolicy, apply_missing_policy
from mts.ingest import load_raw_csv, write_raw_csv, window_align, stays_from_dataset
from mts.splits import split_train_test, balance_train
from mts.synth import ClusterDef, SynthSpec, generate, write_synthetic

__all__ = [
    "MtsRecord",
    "MtsDataset",
    "RawStay",
    "MissingPolicy",
    "apply_missing_policy",
    "load_raw_csv",
    "write_raw_csv",
    "window_align",
    "stays_from_dataset",
    "split_train_test",
    "balance_train",
    "ClusterDef",
    "SynthSpec",
    "generate",
    "write_synthetic",
]
