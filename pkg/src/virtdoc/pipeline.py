"""End-to-end training pipeline: split, balance, normalize, train, calibrate.

Shared by the train CLI command and the evaluation helpers so every caller
performs the steps in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calibration import (
    GuessModel,
    PlattModel,
    calibrate_guess,
    calibrate_platt,
    expected_calibration_error,
    fit_guess,
    fit_platt,
)
from .dataset import (
    FEATURE_SETS,
    Cohort,
    SplitSpec,
    balance_subsample,
    feature_matrix,
    fit_normalization,
    split,
)
from .errors import InvalidConfigError
from .evaluation import auc
from .neuralnet import (
    Network,
    NetworkConfig,
    TrainingReport,
    forward_batch,
    init_network,
    train,
)


@dataclass(frozen=True)
class PipelineResult:
    network: Network
    calibration: GuessModel | PlattModel
    calibration_method: str
    report: TrainingReport
    test_auc: float
    test_ece_raw: float
    test_ece_calibrated: float
    n_train: int
    n_test: int


def train_pipeline(
    cohort: Cohort,
    feature_set: str,
    config: NetworkConfig,
    split_spec: SplitSpec | None = None,
    calibrate: str = "guess",
    balance: bool = True,
    priors: tuple[float, float] | None = None,
) -> PipelineResult:
    """Run the full pipeline on a cohort and evaluate on the held-out test split.

    Normalization stats are fitted on the (balanced) training partition only.
    Calibration is fitted on the training scores and evaluated on the test
    scores; pass priors to override the balanced set's empirical proportions.
    """
    if feature_set not in FEATURE_SETS:
        raise InvalidConfigError(f"unknown feature set {feature_set!r}")
    if calibrate not in ("guess", "platt"):
        raise InvalidConfigError(f"calibrate must be 'guess' or 'platt', got {calibrate!r}")
    features = FEATURE_SETS[feature_set]
    split_spec = split_spec or SplitSpec(seed=config.seed)

    train_cohort, test_cohort = split(cohort, split_spec)
    if balance:
        train_cohort = balance_subsample(train_cohort, seed=split_spec.seed)
    stats = fit_normalization(train_cohort, features)

    cfg = replace(config, input_dim=1 + len(features))
    net = init_network(cfg, feature_set=feature_set, norm_stats=stats)
    X_train, y_train = feature_matrix(train_cohort, stats)
    trained, report = train(net, X_train, y_train, cfg)

    train_scores = forward_batch(trained, X_train)
    if calibrate == "guess":
        cal_model = fit_guess(train_scores, y_train.astype(int), priors=priors)
        apply = calibrate_guess
    else:
        cal_model = fit_platt(train_scores, y_train.astype(int))
        apply = calibrate_platt

    X_test, y_test = feature_matrix(test_cohort, stats)
    test_scores = forward_batch(trained, X_test)
    test_labels = y_test.astype(int)
    calibrated = np.clip(np.asarray(apply(cal_model, test_scores), dtype=float), 0.0, 1.0)

    return PipelineResult(
        network=trained,
        calibration=cal_model,
        calibration_method=calibrate,
        report=report,
        test_auc=auc(test_scores, test_labels),
        test_ece_raw=expected_calibration_error(test_scores, test_labels),
        test_ece_calibrated=expected_calibration_error(calibrated, test_labels),
        n_train=len(train_cohort),
        n_test=len(test_cohort),
    )
