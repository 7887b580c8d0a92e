"""Deployment-risk validation pipeline: sampling, failure dictionaries,
boundary analysis, risk model, deployment gate and drift monitor."""

from ._core import (
    Dataset,
    DeployGateError,
    DomainError,
    DriftMonitor,
    NumericalError,
    OracleServer,
    ParamSpace,
    RemoteError,
    RiskModel,
    SchemaError,
    SpaceMismatch,
    bin_success_rates,
    bootstrap_threshold,
    boundary_curve,
    builtin_space,
    confidence_score,
    detect_boundary,
    fit_risk_model,
    franka_space,
    lhs_unit,
    merge_datasets,
    read_dataset,
    roc_auc,
    run_gate,
    run_stage1,
    run_stage2,
    ur5e_space,
    zone_for_sr,
)

__version__ = "0.1.0"
