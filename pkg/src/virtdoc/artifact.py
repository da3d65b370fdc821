"""Model artifact: one JSON document bundling the trained network, its
normalization stats, the fitted calibration model, and training metadata.

This file is the contract between `virtdoc train` and `virtdoc serve`.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import GuessModel, PlattModel, calibrate_guess, calibrate_platt
from .dataset import FEATURE_SETS, NormalizationStats, PatientRecord
from .errors import ArtifactError, InvalidConfigError
from .neuralnet import Network, NetworkConfig, predict_score

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ModelArtifact:
    """In-memory form of a loaded artifact file."""

    network: Network
    calibration: GuessModel | PlattModel
    calibration_method: str  # "guess" | "platt"
    metadata: dict
    file_hash: str = ""

    def calibrate(self, raw_score: float) -> float:
        if self.calibration_method == "guess":
            return float(calibrate_guess(self.calibration, raw_score))
        return float(calibrate_platt(self.calibration, raw_score))

    def score_record(self, record: PatientRecord) -> tuple[float, float]:
        """Raw network score and its calibrated probability for one record."""
        raw = predict_score(self.network, record)
        return raw, self.calibrate(raw)

    def session_predictor(self):
        """Callable (sex, age, bmi) -> (raw, calibrated) for the interview flow.

        Only basic-feature artifacts can serve interviews; the workflow never
        measures hba1c (it is the recommended follow-up, not an input).
        """
        if self.network.feature_set != "basic":
            raise ArtifactError(
                "interactive sessions require a basic-feature model; "
                f"this artifact was trained with feature set {self.network.feature_set!r}"
            )

        def predict(sex: str, age: int, bmi: float) -> tuple[float, float]:
            record = PatientRecord(sex=sex, age=age, bmi=bmi, label=0)
            return self.score_record(record)

        return predict


def _created_at() -> str:
    """UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible artifacts."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def artifact_dict(
    network: Network,
    calibration: GuessModel | PlattModel,
    calibration_method: str,
    data_hash: str = "",
    extra_metadata: dict | None = None,
) -> dict:
    """Assemble the serializable artifact document."""
    if network.norm_stats is None:
        raise ArtifactError("network has no normalization stats; cannot serialize")
    return {
        "schema_version": SCHEMA_VERSION,
        "config": network.config.to_dict(),
        "feature_set": network.feature_set,
        "norm_stats": network.norm_stats.to_dict(),
        "layers": [
            {"weights": W.tolist(), "bias": b.tolist()}
            for W, b in zip(network.weights, network.biases)
        ],
        "calibration": {"method": calibration_method, "params": calibration.to_dict()},
        "metadata": {
            "created_at": _created_at(),
            "data_hash": data_hash,
            **(extra_metadata or {}),
        },
    }


def save_artifact(path: str | Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(doc: dict, key: str, artifact_path):
    if key not in doc:
        raise ArtifactError(f"{artifact_path}: missing key {key!r}")
    return doc[key]


def load_artifact(path: str | Path) -> ModelArtifact:
    """Load and validate an artifact file; any schema violation raises."""
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
        doc = json.loads(raw_bytes.decode("utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"{path}: no such file")
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ArtifactError(f"{path}: expected a JSON object")

    config = NetworkConfig.from_dict(_require(doc, "config", path))
    try:
        config.validate()
    except InvalidConfigError as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    feature_set = _require(doc, "feature_set", path)
    if feature_set not in FEATURE_SETS:
        raise ArtifactError(f"{path}: unknown feature_set {feature_set!r}")
    stats = NormalizationStats.from_dict(_require(doc, "norm_stats", path))
    if tuple(stats.features) != FEATURE_SETS[feature_set]:
        raise ArtifactError(
            f"{path}: norm_stats features {stats.features} do not match "
            f"feature set {feature_set!r}"
        )

    layers = _require(doc, "layers", path)
    expected_dims = [config.input_dim, *config.hidden_layers, 1]
    if len(layers) != len(expected_dims) - 1:
        raise ArtifactError(
            f"{path}: expected {len(expected_dims) - 1} layers, got {len(layers)}"
        )
    weights, biases = [], []
    for i, layer in enumerate(layers):
        W = np.asarray(_require(layer, "weights", path), dtype=float)
        b = np.asarray(_require(layer, "bias", path), dtype=float)
        if W.shape != (expected_dims[i + 1], expected_dims[i]) or b.shape != (expected_dims[i + 1],):
            raise ArtifactError(
                f"{path}: layer {i} has shape {W.shape}/{b.shape}, "
                f"expected ({expected_dims[i + 1]}, {expected_dims[i]})/({expected_dims[i + 1]},)"
            )
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ArtifactError(f"{path}: layer {i} contains non-finite parameters")
        weights.append(W)
        biases.append(b)

    cal = _require(doc, "calibration", path)
    method = _require(cal, "method", path)
    params = _require(cal, "params", path)
    if method == "guess":
        calibration = GuessModel.from_dict(params)
    elif method == "platt":
        calibration = PlattModel.from_dict(params)
    else:
        raise ArtifactError(f"{path}: unknown calibration method {method!r}")

    network = Network(
        weights=weights, biases=biases, config=config,
        feature_set=feature_set, norm_stats=stats,
    )
    return ModelArtifact(
        network=network,
        calibration=calibration,
        calibration_method=method,
        metadata=doc.get("metadata", {}),
        file_hash=hashlib.sha256(raw_bytes).hexdigest(),
    )


def cohort_file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
