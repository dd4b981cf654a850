from tck.gmm import (
    EmSettings,
    PartitionConfig,
    GmmPartition,
    fit_map_em,
    posterior,
    posteriors,
)
from tck.ensemble import (
    SubsetSettings,
    TckKernel,
    sample_partition_configs,
    build_tck,
    kernel_rows,
    self_similarity_of,
)

__all__ = [
    "EmSettings",
    "PartitionConfig",
    "GmmPartition",
    "fit_map_em",
    "posterior",
    "posteriors",
    "SubsetSettings",
    "TckKernel",
    "sample_partition_configs",
    "build_tck",
    "kernel_rows",
    "self_similarity_of",
]
