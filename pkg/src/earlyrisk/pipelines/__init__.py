"""End-to-end modelling pipelines over extracted cohort features."""
from .cnn import CnnPipelineConfig, CnnRun, duplicate_balance, ffill_bfill, run_cnn_pipeline
from .data import CohortData, cohort_to_data, daily_tensor, make_cohort_data, weekly_table
from .lr import LrPipelineConfig, LrRun, cfs_select, prune_collinear, run_lr_pipeline, smote
from .mtl import (TransferConfig, TransferResult, run_cnn_transfer, run_lr_transfer, run_mtl_pipeline,
                  run_one_rule_transfer, run_zero_rule_transfer)

__all__ = [
    "CnnPipelineConfig", "CnnRun", "duplicate_balance", "ffill_bfill", "run_cnn_pipeline",
    "CohortData", "cohort_to_data", "daily_tensor", "make_cohort_data", "weekly_table",
    "LrPipelineConfig", "LrRun", "cfs_select", "prune_collinear", "run_lr_pipeline", "smote",
    "TransferConfig", "TransferResult", "run_cnn_transfer", "run_lr_transfer", "run_mtl_pipeline",
    "run_one_rule_transfer", "run_zero_rule_transfer",
]
