from pipeline.config import (
    PipelineConfig,
    DataSettings,
    TckSettings,
    DimredSettings,
    AutoencoderSettings,
    ClassifySettings,
    derive_seed,
)
from pipeline.stages import RunPaths, run_synth, run_ingest, run_tck, run_embed, run_classify, run_report
from pipeline.cli import main

__all__ = [
    "PipelineConfig",
    "DataSettings",
    "TckSettings",
    "DimredSettings",
    "AutoencoderSettings",
    "ClassifySettings",
    "derive_seed",
    "RunPaths",
    "run_synth",
    "run_ingest",
    "run_tck",
    "run_embed",
    "run_classify",
    "run_report",
    "main",
]
