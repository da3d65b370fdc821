"""Interview workflow as a deterministic state machine.

A session walks a fixed stage order: greeting, sex, age, weight and height
measurements, the four symptom/consumption questions, then the decision.
Utterances are matched against a constrained vocabulary (numbers 1..100 and
the categories male, female, yes, no); anything else re-prompts, with a bound
on retries before the session is flagged for human handover. The calibrated
model probability is shifted in log-odds space by the interview answers, and
the final probability is routed through the twilight-zone rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    DegenerateBaseError,
    InvalidConfigError,
    SessionDoneError,
    SessionNotDoneError,
    TooManyRetriesError,
    VirtdocError,
    WrongInputKindError,
)
from .numerics import clamp_probability, logit, sigmoid
from .sensors import (
    SensorFrame,
    bmi as compute_bmi,
    distance_from_duration,
    height_from_distance,
    weight_from_cells,
)


class Stage(str, Enum):
    GREETING = "Greeting"
    ASK_SEX = "AskSex"
    ASK_AGE = "AskAge"
    MEASURE_WEIGHT = "MeasureWeight"
    MEASURE_HEIGHT = "MeasureHeight"
    ASK_POLYURIA = "AskPolyuria"
    ASK_POLYDIPSIA = "AskPolydipsia"
    ASK_ALCOHOL = "AskAlcohol"
    ASK_TOBACCO = "AskTobacco"
    DECIDE = "Decide"
    DONE = "Done"


STAGE_ORDER = tuple(Stage)

# What each interactive stage expects from the patient.
STAGE_EXPECTS = {
    Stage.GREETING: "any",
    Stage.ASK_SEX: "sex",
    Stage.ASK_AGE: "number",
    Stage.MEASURE_WEIGHT: "scale",
    Stage.MEASURE_HEIGHT: "ultrasonic",
    Stage.ASK_POLYURIA: "yesno",
    Stage.ASK_POLYDIPSIA: "yesno",
    Stage.ASK_ALCOHOL: "severity",
    Stage.ASK_TOBACCO: "severity",
}

PROMPTS = {
    Stage.GREETING: "Hello, I am your virtual doctor. Say anything when you are ready to begin.",
    Stage.ASK_SEX: "Are you male or female?",
    Stage.ASK_AGE: "How old are you?",
    Stage.MEASURE_WEIGHT: "Please step on the scale.",
    Stage.MEASURE_HEIGHT: "Please stand upright under the height sensor.",
    Stage.ASK_POLYURIA: "Do you feel the need to urinate unusually often?",
    Stage.ASK_POLYDIPSIA: "Are you unusually thirsty lately?",
    Stage.ASK_ALCOHOL: "How would you rate your alcohol consumption, from 1 for very little to 10 for a lot?",
    Stage.ASK_TOBACCO: "How would you rate your tobacco consumption, from 1 for very little to 10 for a lot?",
    Stage.DECIDE: "Let me look at your results.",
    Stage.DONE: "Thank you. Your assessment is ready.",
}

RETRY_PROMPT = "Sorry, I did not understand that. "

AGE_RANGE = (18, 100)
WEIGHT_RANGE_KG = (20.0, 250.0)
HEIGHT_RANGE_M = (1.00, 1.99)

DEFAULT_SYNONYMS = {
    "male": ("male", "man", "m"),
    "female": ("female", "woman", "f"),
    "yes": ("yes", "y", "yeah", "yep", "sure"),
    "no": ("no", "n", "nope"),
}

_UNITS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9,
}
_TEENS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}


class Decision(str, Enum):
    LOW_RISK = "LowRisk"
    RECOMMEND_HBA1C = "RecommendHbA1cTest"
    HIGH_RISK = "HighRiskSeePhysician"


@dataclass(frozen=True)
class Utterance:
    """A raw patient utterance plus its constrained-vocabulary parse."""

    raw: str
    kind: str  # "number" | "sex" | "yesno" | "unrecognized"
    value: int | str | None = None


@dataclass(frozen=True)
class AnamnesisAnswers:
    polyuria: str  # "yes" | "no"
    polydipsia: str
    alcohol: int  # severity 1..10
    tobacco: int

    def __post_init__(self):
        for name in ("polyuria", "polydipsia"):
            if getattr(self, name) not in ("yes", "no"):
                raise InvalidConfigError(f"{name} must be 'yes' or 'no'")
        for name in ("alcohol", "tobacco"):
            v = getattr(self, name)
            if not (1 <= v <= 10):
                raise InvalidConfigError(f"{name} severity must be in [1, 10], got {v}")


@dataclass(frozen=True)
class AdjustmentConfig:
    """Log-odds shifts applied per answer, plus the twilight-zone bounds."""

    delta_polyuria: float = 0.5
    delta_polydipsia: float = 0.5
    delta_alcohol_max: float = 0.4
    delta_tobacco_max: float = 0.4
    twilight_lo: float = 0.30
    twilight_hi: float = 0.70

    def __post_init__(self):
        for name in ("delta_polyuria", "delta_polydipsia", "delta_alcohol_max", "delta_tobacco_max"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be >= 0")
        if not (0.0 <= self.twilight_lo < self.twilight_hi <= 1.0):
            raise InvalidConfigError(
                f"need 0 <= twilight_lo < twilight_hi <= 1, got "
                f"({self.twilight_lo}, {self.twilight_hi})"
            )


@dataclass(frozen=True)
class TranscriptEntry:
    stage: str
    prompt: str
    input: str
    timestamp: int  # logical step counter, so replays are byte-identical


@dataclass(frozen=True)
class Session:
    """Complete interview state; advance() returns updated copies."""

    id: str
    stage: Stage = Stage.GREETING
    sex: str | None = None
    age: int | None = None
    weight_kg: float | None = None
    height_m: float | None = None
    bmi: float | None = None
    polyuria: str | None = None
    polydipsia: str | None = None
    alcohol: int | None = None
    tobacco: int | None = None
    raw_score: float | None = None
    base_probability: float | None = None
    adjusted_probability: float | None = None
    decision: str | None = None
    transcript: tuple[TranscriptEntry, ...] = ()
    retry_counts: tuple[tuple[str, int], ...] = ()
    needs_handover: bool = False
    step: int = 0

    def retry_count(self, stage: Stage | None = None) -> int:
        key = (stage or self.stage).value
        return dict(self.retry_counts).get(key, 0)

    @property
    def prompt(self) -> str:
        base = PROMPTS[self.stage]
        if self.retry_count() > 0 and self.stage not in (Stage.DONE, Stage.DECIDE):
            return RETRY_PROMPT + base
        return base

    def to_dict(self) -> dict:
        return {
            "session_id": self.id,
            "stage": self.stage.value,
            "sex": self.sex,
            "age": self.age,
            "weight_kg": self.weight_kg,
            "height_m": self.height_m,
            "bmi": self.bmi,
            "polyuria": self.polyuria,
            "polydipsia": self.polydipsia,
            "alcohol": self.alcohol,
            "tobacco": self.tobacco,
            "raw_score": self.raw_score,
            "base_probability": self.base_probability,
            "adjusted_probability": self.adjusted_probability,
            "decision": self.decision,
            "transcript": [
                {"stage": t.stage, "prompt": t.prompt, "input": t.input, "timestamp": t.timestamp}
                for t in self.transcript
            ],
            "retry_counts": {k: v for k, v in self.retry_counts},
            "needs_handover": self.needs_handover,
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        return cls(
            id=d["session_id"],
            stage=Stage(d["stage"]),
            sex=d.get("sex"),
            age=d.get("age"),
            weight_kg=d.get("weight_kg"),
            height_m=d.get("height_m"),
            bmi=d.get("bmi"),
            polyuria=d.get("polyuria"),
            polydipsia=d.get("polydipsia"),
            alcohol=d.get("alcohol"),
            tobacco=d.get("tobacco"),
            raw_score=d.get("raw_score"),
            base_probability=d.get("base_probability"),
            adjusted_probability=d.get("adjusted_probability"),
            decision=d.get("decision"),
            transcript=tuple(
                TranscriptEntry(t["stage"], t["prompt"], t["input"], t["timestamp"])
                for t in d.get("transcript", ())
            ),
            retry_counts=tuple(sorted(d.get("retry_counts", {}).items())),
            needs_handover=d.get("needs_handover", False),
            step=d.get("step", 0),
        )


@dataclass(frozen=True)
class RiskReport:
    session_id: str
    sex: str
    age: int
    bmi: float
    raw_score: float
    base_probability: float
    adjusted_probability: float
    decision: str
    transcript: tuple[TranscriptEntry, ...]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "sex": self.sex,
            "age": self.age,
            "bmi": self.bmi,
            "raw_score": self.raw_score,
            "base_probability": self.base_probability,
            "adjusted_probability": self.adjusted_probability,
            "decision": self.decision,
            "transcript": [
                {"stage": t.stage, "prompt": t.prompt, "input": t.input, "timestamp": t.timestamp}
                for t in self.transcript
            ],
        }


def _parse_number_words(text: str) -> int | None:
    words = re.split(r"[\s-]+", text)
    if not words:
        return None
    if words in (["hundred"], ["a", "hundred"], ["one", "hundred"]):
        return 100
    if len(words) == 1:
        w = words[0]
        return _UNITS.get(w) or _TEENS.get(w) or _TENS.get(w)
    if len(words) == 2 and words[0] in _TENS and words[1] in _UNITS:
        return _TENS[words[0]] + _UNITS[words[1]]
    return None


def parse_utterance(raw: str, expected: str, synonyms: dict | None = None) -> Utterance:
    """Match an utterance against the expected category's vocabulary.

    Unrecognized input is a value (it triggers a re-prompt), never an error.
    Severity reuses the number vocabulary restricted to 1..10.
    """
    vocab = synonyms or DEFAULT_SYNONYMS
    text = raw.strip().lower()
    if expected in ("number", "severity"):
        value: int | None = None
        if re.fullmatch(r"\d+", text):
            value = int(text)
        else:
            value = _parse_number_words(text)
        hi = 10 if expected == "severity" else 100
        if value is not None and 1 <= value <= hi:
            return Utterance(raw=raw, kind="number", value=value)
        return Utterance(raw=raw, kind="unrecognized")
    if expected == "sex":
        for sex in ("male", "female"):
            if text in vocab[sex]:
                return Utterance(raw=raw, kind="sex", value=sex)
        # "male" is a substring of "female"; exact matches above avoid that trap
        return Utterance(raw=raw, kind="unrecognized")
    if expected == "yesno":
        for answer in ("yes", "no"):
            if text in vocab[answer]:
                return Utterance(raw=raw, kind="yesno", value=answer)
        return Utterance(raw=raw, kind="unrecognized")
    if expected == "any":
        return Utterance(raw=raw, kind="any", value=text)
    raise InvalidConfigError(f"unknown expected category {expected!r}")


def adjust_probability(base: float, answers: AnamnesisAnswers, cfg: AdjustmentConfig) -> float:
    """Shift the calibrated probability in log-odds space by the answers.

    Yes/no answers add or subtract their full delta; consumption severities
    scale their delta linearly from 0 at severity 1 to the maximum at 10.
    """
    if not (0.0 < base < 1.0):
        raise DegenerateBaseError(f"base probability must be in (0, 1), got {base}")
    shift = 0.0
    shift += cfg.delta_polyuria * (1.0 if answers.polyuria == "yes" else -1.0)
    shift += cfg.delta_polydipsia * (1.0 if answers.polydipsia == "yes" else -1.0)
    shift += cfg.delta_alcohol_max * (answers.alcohol - 1) / 9.0
    shift += cfg.delta_tobacco_max * (answers.tobacco - 1) / 9.0
    return clamp_probability(sigmoid(logit(base) + shift))


def decide(p: float, cfg: AdjustmentConfig) -> Decision:
    """Twilight-zone routing; both zone boundaries are inclusive."""
    if not (0.0 <= p <= 1.0):
        raise DegenerateBaseError(f"probability must be in [0, 1], got {p}")
    if p < cfg.twilight_lo:
        return Decision.LOW_RISK
    if p <= cfg.twilight_hi:
        return Decision.RECOMMEND_HBA1C
    return Decision.HIGH_RISK


def render_report(session: Session) -> RiskReport:
    """Copy the finished session into a report; fails for sessions mid-flight."""
    if session.stage is not Stage.DONE:
        raise SessionNotDoneError(f"session {session.id} is at {session.stage.value}")
    return RiskReport(
        session_id=session.id,
        sex=session.sex,
        age=session.age,
        bmi=session.bmi,
        raw_score=session.raw_score,
        base_probability=session.base_probability,
        adjusted_probability=session.adjusted_probability,
        decision=session.decision,
        transcript=session.transcript,
    )


class AnamnesisMachine:
    """Drives sessions through the fixed stage order.

    The predictor is any callable (sex, age, bmi) -> (raw_score, calibrated
    probability); the machine itself has no model dependency.
    """

    def __init__(
        self,
        predictor,
        adjustment: AdjustmentConfig | None = None,
        max_retries: int = 3,
        synonyms: dict | None = None,
    ):
        self.predictor = predictor
        self.adjustment = adjustment or AdjustmentConfig()
        self.max_retries = max_retries
        self.synonyms = synonyms or DEFAULT_SYNONYMS

    def new_session(self, session_id: str) -> Session:
        return Session(id=session_id)

    def handle_text(self, session: Session, raw: str) -> Session:
        """Parse a text utterance for the session's current stage and advance."""
        if session.stage is Stage.DONE:
            raise SessionDoneError(f"session {session.id} is complete")
        expected = STAGE_EXPECTS.get(session.stage)
        if expected is None or expected in ("scale", "ultrasonic"):
            raise WrongInputKindError(
                f"stage {session.stage.value} does not accept an utterance"
            )
        utterance = parse_utterance(raw, expected, self.synonyms)
        return self.advance(session, utterance)

    def advance(self, session: Session, item) -> Session:
        """Apply one input (Utterance or SensorFrame) to the session."""
        if session.stage is Stage.DONE:
            raise SessionDoneError(f"session {session.id} is complete")
        if isinstance(item, SensorFrame):
            return self._advance_frame(session, item)
        if isinstance(item, Utterance):
            return self._advance_utterance(session, item)
        raise WrongInputKindError(f"unsupported input type {type(item).__name__}")

    # -- internals -----------------------------------------------------------

    def _advance_utterance(self, session: Session, utt: Utterance) -> Session:
        stage = session.stage
        expected = STAGE_EXPECTS[stage]
        if expected in ("scale", "ultrasonic"):
            raise WrongInputKindError(
                f"stage {stage.value} expects a sensor frame, not an utterance"
            )
        if stage is Stage.GREETING:
            return self._accept(session, utt.raw, {})
        if stage is Stage.ASK_SEX:
            if utt.kind == "sex":
                return self._accept(session, utt.raw, {"sex": utt.value})
            return self._retry(session, utt.raw)
        if stage is Stage.ASK_AGE:
            if utt.kind == "number" and AGE_RANGE[0] <= utt.value <= AGE_RANGE[1]:
                return self._accept(session, utt.raw, {"age": int(utt.value)})
            return self._retry(session, utt.raw)
        if stage is Stage.ASK_POLYURIA:
            if utt.kind == "yesno":
                return self._accept(session, utt.raw, {"polyuria": utt.value})
            return self._retry(session, utt.raw)
        if stage is Stage.ASK_POLYDIPSIA:
            if utt.kind == "yesno":
                return self._accept(session, utt.raw, {"polydipsia": utt.value})
            return self._retry(session, utt.raw)
        if stage is Stage.ASK_ALCOHOL:
            if utt.kind == "number" and 1 <= utt.value <= 10:
                return self._accept(session, utt.raw, {"alcohol": int(utt.value)})
            return self._retry(session, utt.raw)
        if stage is Stage.ASK_TOBACCO:
            if utt.kind == "number" and 1 <= utt.value <= 10:
                updated = self._accept(session, utt.raw, {"tobacco": int(utt.value)})
                return self._decide(updated)
            return self._retry(session, utt.raw)
        raise WrongInputKindError(f"stage {stage.value} accepts no utterances")

    def _advance_frame(self, session: Session, frame: SensorFrame) -> Session:
        stage = session.stage
        expected = STAGE_EXPECTS.get(stage)
        if expected not in ("scale", "ultrasonic"):
            raise WrongInputKindError(
                f"stage {stage.value} expects an utterance, not a sensor frame"
            )
        if frame.kind != expected:
            raise WrongInputKindError(
                f"stage {stage.value} expects a {expected} frame, got {frame.kind}"
            )
        raw = f"{frame.kind}:{frame.payload}"
        if stage is Stage.MEASURE_WEIGHT:
            weight = weight_from_cells(*frame.payload)
            if not (WEIGHT_RANGE_KG[0] <= weight <= WEIGHT_RANGE_KG[1]):
                return self._retry(session, raw)
            return self._accept(session, raw, {"weight_kg": weight})
        # MeasureHeight: derive height, gate plausibility, then invoke the model
        try:
            distance = distance_from_duration(frame.payload[0])
            # millimeter rounding matches the ultrasonic sensor's resolution
            height = round(height_from_distance(distance), 3)
        except VirtdocError:
            return self._retry(session, raw)
        if not (HEIGHT_RANGE_M[0] <= height <= HEIGHT_RANGE_M[1]):
            return self._retry(session, raw)
        bmi_value = compute_bmi(session.weight_kg, height)
        raw_score, calibrated = self.predictor(session.sex, session.age, bmi_value)
        return self._accept(
            session, raw,
            {
                "height_m": height,
                "bmi": bmi_value,
                "raw_score": float(raw_score),
                "base_probability": clamp_probability(calibrated),
            },
        )

    def _accept(self, session: Session, raw_input: str, updates: dict) -> Session:
        entry = TranscriptEntry(
            stage=session.stage.value,
            prompt=session.prompt,
            input=raw_input,
            timestamp=session.step,
        )
        next_stage = STAGE_ORDER[STAGE_ORDER.index(session.stage) + 1]
        return replace(
            session,
            stage=next_stage,
            transcript=session.transcript + (entry,),
            step=session.step + 1,
            **updates,
        )

    def _retry(self, session: Session, raw_input: str) -> Session:
        entry = TranscriptEntry(
            stage=session.stage.value,
            prompt=session.prompt,
            input=raw_input,
            timestamp=session.step,
        )
        counts = dict(session.retry_counts)
        key = session.stage.value
        counts[key] = counts.get(key, 0) + 1
        updated = replace(
            session,
            transcript=session.transcript + (entry,),
            retry_counts=tuple(sorted(counts.items())),
            step=session.step + 1,
        )
        if counts[key] > self.max_retries:
            flagged = replace(updated, needs_handover=True)
            raise TooManyRetriesError(
                f"stage {key} failed {counts[key]} times; handing over to a human",
                session=flagged,
            )
        return updated

    def _decide(self, session: Session) -> Session:
        answers = AnamnesisAnswers(
            polyuria=session.polyuria,
            polydipsia=session.polydipsia,
            alcohol=session.alcohol,
            tobacco=session.tobacco,
        )
        adjusted = adjust_probability(session.base_probability, answers, self.adjustment)
        decision = decide(adjusted, self.adjustment)
        entry = TranscriptEntry(
            stage=Stage.DECIDE.value,
            prompt=PROMPTS[Stage.DECIDE],
            input="",
            timestamp=session.step,
        )
        return replace(
            session,
            stage=Stage.DONE,
            adjusted_probability=adjusted,
            decision=decision.value,
            transcript=session.transcript + (entry,),
            step=session.step + 1,
        )

    def replay(self, session: Session, items) -> Session:
        """Drive a session through a sequence of inputs."""
        for item in items:
            session = self.advance(session, item)
        return session
