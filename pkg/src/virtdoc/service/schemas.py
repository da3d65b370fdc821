"""Pydantic request/response models for the session API.

Field names are snake_case; every response carries schema_version so the
kiosk UI can detect contract drift.
"""

from __future__ import annotations

from pydantic import BaseModel, model_validator

SCHEMA_VERSION = 1


class SubmitInputRequest(BaseModel):
    utterance: str | None = None
    frame: str | None = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.utterance is None) == (self.frame is None):
            raise ValueError("provide exactly one of 'utterance' or 'frame'")
        return self


class SessionStateResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    session_id: str
    stage: str
    prompt: str
    retry_count: int = 0
    needs_handover: bool = False
    done: bool = False
    base_probability: float | None = None
    adjusted_probability: float | None = None
    decision: str | None = None


class TranscriptEntryModel(BaseModel):
    stage: str
    prompt: str
    input: str
    timestamp: int


class SessionDetailResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    session_id: str
    stage: str
    prompt: str
    sex: str | None
    age: int | None
    weight_kg: float | None
    height_m: float | None
    bmi: float | None
    polyuria: str | None
    polydipsia: str | None
    alcohol: int | None
    tobacco: int | None
    raw_score: float | None
    base_probability: float | None
    adjusted_probability: float | None
    decision: str | None
    retry_counts: dict[str, int]
    needs_handover: bool
    step: int
    transcript: list[TranscriptEntryModel]


class ReportResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    session_id: str
    sex: str
    age: int
    bmi: float
    raw_score: float
    base_probability: float
    adjusted_probability: float
    decision: str
    transcript: list[TranscriptEntryModel]


class HealthResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    status: str
    model_hash: str | None
    session_count: int


class ErrorBody(BaseModel):
    code: str  # not_found | bad_input | conflict | internal
    message: str
