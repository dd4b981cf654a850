"""
run_pipeline.py — Run one stage of the kernel pipeline

Usage:
    python run_pipeline.py synth    --out runs/demo
    python run_pipeline.py ingest   --out runs/demo
    python run_pipeline.py tck      --out runs/demo --config configs/default.json
    python run_pipeline.py embed    --out runs/demo
    python run_pipeline.py classify --out runs/demo
    python run_pipeline.py report   --out runs/demo

This creates, under runs/demo:
    - data/       the windowed, split cohort
    - tck/        the kernel model, kernel CSV and test kernel rows
    - embed/      PCA, KPCA and AE representations with t-SNE coordinates
    - classify/   test metrics per (representation, classifier) and CV folds
    - report/     the results table as CSV, markdown and text
    - run.log     timestamped log of every command
"""

import sys

from pipeline.cli import main


if __name__ == "__main__":
    sys.exit(main())
