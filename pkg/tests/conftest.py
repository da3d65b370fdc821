import json

import pytest

from virtdoc.artifact import artifact_dict, save_artifact
from virtdoc.dataset import SplitSpec, generate_synthetic_cohort, write_csv
from virtdoc.neuralnet import NetworkConfig
from virtdoc.pipeline import train_pipeline
from virtdoc.sensors import duration_from_distance


@pytest.fixture(scope="session")
def work_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("virtdoc")


@pytest.fixture(scope="session")
def cohort_csv(work_dir):
    path = work_dir / "cohort.csv"
    write_csv(generate_synthetic_cohort(1200, seed=3), path)
    return path


@pytest.fixture(scope="session")
def hba1c_cohort_csv(work_dir):
    path = work_dir / "cohort_hba1c.csv"
    write_csv(generate_synthetic_cohort(1200, seed=3, with_hba1c=True), path)
    return path


def _train_artifact(csv_path, out_path, feature_set):
    from virtdoc.dataset import ingest_csv

    cohort = ingest_csv(csv_path)
    config = NetworkConfig(input_dim=1, hidden_layers=(6,), epochs=40, seed=5)
    result = train_pipeline(
        cohort, feature_set=feature_set, config=config,
        split_spec=SplitSpec(seed=5), calibrate="guess",
    )
    doc = artifact_dict(result.network, result.calibration, result.calibration_method)
    save_artifact(out_path, doc)
    return out_path


@pytest.fixture(scope="session")
def model_path(work_dir, cohort_csv):
    """Small trained basic-feature artifact reused across service/CLI tests."""
    return _train_artifact(cohort_csv, work_dir / "model.json", "basic")


@pytest.fixture(scope="session")
def hba1c_model_path(work_dir, hba1c_cohort_csv):
    return _train_artifact(hba1c_cohort_csv, work_dir / "model_hba1c.json", "with_hba1c")


def canonical_script_items():
    """Interview for the reference male: 86.2 kg, 1.748 m, mild answers."""
    duration = duration_from_distance(25.2)
    return [
        {"utterance": "hello"},
        {"utterance": "male"},
        {"utterance": "43"},
        {"frame": "W:43.1:43.1"},
        {"frame": f"U:{duration!r}"},
        {"utterance": "yes"},
        {"utterance": "no"},
        {"utterance": "3"},
        {"utterance": "1"},
    ]


@pytest.fixture(scope="session")
def canonical_script(work_dir):
    path = work_dir / "script.json"
    path.write_text(json.dumps(canonical_script_items()), encoding="utf-8")
    return path
