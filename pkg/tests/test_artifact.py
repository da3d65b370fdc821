import json

import numpy as np
import pytest

from virtdoc.artifact import artifact_dict, cohort_file_hash, load_artifact, save_artifact
from virtdoc.dataset import generate_synthetic_cohort
from virtdoc.errors import ArtifactError
from virtdoc.neuralnet import predict_score


@pytest.fixture(scope="module")
def loaded(model_path):
    return load_artifact(model_path)


class TestRoundTrip:
    def test_scores_survive_serialization(self, loaded, tmp_path):
        path = tmp_path / "copy.json"
        save_artifact(path, artifact_dict(loaded.network, loaded.calibration,
                                          loaded.calibration_method))
        again = load_artifact(path)
        for record in generate_synthetic_cohort(120, seed=21).records[:20]:
            assert predict_score(again.network, record) == predict_score(loaded.network, record)
            assert again.calibrate(0.37) == loaded.calibrate(0.37)

    def test_hash_present(self, loaded):
        assert len(loaded.file_hash) == 64

    def test_metadata_created_at(self, model_path):
        doc = json.loads(open(model_path).read())
        assert "created_at" in doc["metadata"]

    def test_calibrated_scores_are_probabilities(self, loaded):
        for s in np.linspace(0.01, 0.99, 20):
            assert 0.0 <= loaded.calibrate(float(s)) <= 1.0


class TestValidation:
    def _doc(self, model_path):
        return json.loads(open(model_path).read())

    def _expect_error(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactError):
            load_artifact(path)

    def test_truncated_json(self, model_path, tmp_path):
        path = tmp_path / "trunc.json"
        path.write_text(open(model_path).read()[:100])
        with pytest.raises(ArtifactError):
            load_artifact(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactError):
            load_artifact(tmp_path / "nope.json")

    def test_missing_key(self, model_path, tmp_path):
        doc = self._doc(model_path)
        del doc["layers"]
        self._expect_error(tmp_path, doc)

    def test_shape_mismatch(self, model_path, tmp_path):
        doc = self._doc(model_path)
        doc["layers"][0]["weights"] = [[0.0, 0.0]]
        self._expect_error(tmp_path, doc)

    def test_non_finite_parameter(self, model_path, tmp_path):
        doc = self._doc(model_path)
        doc["layers"][0]["weights"][0][0] = 1e999  # becomes Infinity in JSON
        path = tmp_path / "inf.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ArtifactError):
            load_artifact(path)

    def test_unknown_calibration_method(self, model_path, tmp_path):
        doc = self._doc(model_path)
        doc["calibration"]["method"] = "isotonic"
        self._expect_error(tmp_path, doc)

    def test_bad_feature_set(self, model_path, tmp_path):
        doc = self._doc(model_path)
        doc["feature_set"] = "everything"
        self._expect_error(tmp_path, doc)

    def test_config_bounds_enforced(self, model_path, tmp_path):
        doc = self._doc(model_path)
        doc["config"]["hidden_layers"] = [5, 5, 5, 5]
        doc["layers"] = doc["layers"][:1] * 5
        self._expect_error(tmp_path, doc)


class TestSessionPredictor:
    def test_basic_artifact_scores_sessions(self, loaded):
        predict = loaded.session_predictor()
        raw, calibrated = predict("male", 43, 28.2)
        assert 0.0 < raw < 1.0
        assert 0.0 <= calibrated <= 1.0

    def test_hba1c_artifact_rejected(self, hba1c_model_path):
        art = load_artifact(hba1c_model_path)
        with pytest.raises(ArtifactError):
            art.session_predictor()


class TestDeterminism:
    def test_same_inputs_same_artifact_bytes(self, cohort_csv, tmp_path, monkeypatch):
        from virtdoc.dataset import SplitSpec, ingest_csv
        from virtdoc.neuralnet import NetworkConfig
        from virtdoc.pipeline import train_pipeline

        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        cohort = ingest_csv(cohort_csv)
        config = NetworkConfig(input_dim=1, hidden_layers=(4,), epochs=10, seed=2)
        paths = []
        for name in ("a.json", "b.json"):
            result = train_pipeline(cohort, "basic", config, split_spec=SplitSpec(seed=2))
            doc = artifact_dict(result.network, result.calibration,
                                result.calibration_method,
                                data_hash=cohort_file_hash(cohort_csv))
            path = tmp_path / name
            save_artifact(path, doc)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()
