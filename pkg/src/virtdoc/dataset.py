"""Cohort handling: CSV ingestion, synthetic cohort generation, z-normalization,
stratified splitting, and class-balancing subsampling.

All operations are pure given their inputs and seeds; cohorts and records are
immutable once constructed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFileError,
    FeatureMismatchError,
    InvalidConfigError,
    InvalidCountError,
    MissingColumnError,
    MissingFeatureError,
    RowParseError,
    SingleClassError,
    TooFewPerClassError,
    ZeroVarianceError,
)
from .numerics import sigmoid

SEXES = ("male", "female")

CSV_COLUMNS = ("sex", "age", "height_m", "weight_kg", "bmi", "hba1c", "label")

# Continuous model features per feature set; sex enters the model as a raw
# 0/1 indicator and is never z-normalized.
FEATURE_SETS = {
    "basic": ("age", "bmi"),
    "with_hba1c": ("age", "bmi", "hba1c"),
}

BMI_CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class PatientRecord:
    """One person's features plus the binary T2DM label."""

    sex: str
    age: int
    bmi: float
    label: int
    height_m: float | None = None
    weight_kg: float | None = None
    hba1c: float | None = None

    def __post_init__(self):
        if self.sex not in SEXES:
            raise ValueError(f"sex must be one of {SEXES}, got {self.sex!r}")
        if not (18 <= int(self.age) <= 100):
            raise ValueError(f"age must be in [18, 100], got {self.age}")
        if not self.bmi > 0:
            raise ValueError(f"bmi must be positive, got {self.bmi}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.height_m is not None and not self.height_m > 0:
            raise ValueError(f"height must be positive, got {self.height_m}")
        if self.weight_kg is not None and not self.weight_kg > 0:
            raise ValueError(f"weight must be positive, got {self.weight_kg}")
        if self.hba1c is not None and not (3.0 < self.hba1c < 20.0):
            raise ValueError(f"hba1c must be in (3.0, 20.0), got {self.hba1c}")
        if self.height_m is not None and self.weight_kg is not None:
            implied = self.weight_kg / self.height_m**2
            if abs(self.bmi - implied) > BMI_CONSISTENCY_RTOL * max(abs(implied), 1.0):
                raise ValueError(
                    f"bmi {self.bmi} inconsistent with weight/height^2 = {implied}"
                )

    @property
    def sex_code(self) -> float:
        """Model encoding: male 1.0, female 0.0."""
        return 1.0 if self.sex == "male" else 0.0

    def feature(self, name: str) -> float | None:
        if name == "sex":
            return self.sex_code
        if name == "age":
            return float(self.age)
        if name == "bmi":
            return float(self.bmi)
        if name == "hba1c":
            return None if self.hba1c is None else float(self.hba1c)
        raise KeyError(name)


@dataclass(frozen=True)
class Cohort:
    """Ordered, immutable collection of patient records."""

    records: tuple[PatientRecord, ...]
    name: str = "cohort"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=int)

    @property
    def has_hba1c(self) -> bool:
        """True when every record carries hba1c, False when none does.

        A mixed cohort has no well-defined feature set and is rejected.
        """
        present = sum(r.hba1c is not None for r in self.records)
        if present == 0:
            return False
        if present == len(self.records):
            return True
        raise FeatureMismatchError(
            f"cohort {self.name!r} mixes records with and without hba1c"
        )

    @property
    def feature_set(self) -> str:
        return "with_hba1c" if self.has_hba1c else "basic"


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature sample mean and standard deviation for the z-transform."""

    features: tuple[str, ...]
    mean: tuple[float, ...]
    sd: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "mean": list(self.mean),
            "sd": list(self.sd),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            features=tuple(d["features"]),
            mean=tuple(float(x) for x in d["mean"]),
            sd=tuple(float(x) for x in d["sd"]),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split request: fraction, seed, and stratification flag."""

    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise InvalidConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs of the synthetic cohort generator.

    Demographic means and spreads follow the reference population; the label
    model coefficients and the hba1c mixture are designer choices chosen so
    hba1c is strongly informative for the outcome.
    """

    male_fraction: float = 0.5
    age_mean: dict = field(default_factory=lambda: {"male": 59.7, "female": 59.6})
    age_sd: float = 7.8
    age_range: tuple[int, int] = (45, 75)
    height_mean: dict = field(default_factory=lambda: {"male": 1.748, "female": 1.621})
    height_sd: dict = field(default_factory=lambda: {"male": 0.068, "female": 0.062})
    height_range: tuple[float, float] = (1.30, 1.98)
    weight_mean: dict = field(default_factory=lambda: {"male": 86.2, "female": 72.6})
    weight_sd: dict = field(default_factory=lambda: {"male": 13.2, "female": 13.8})
    weight_range: tuple[float, float] = (35.0, 240.0)
    prevalence: dict = field(default_factory=lambda: {"male": 0.175, "female": 0.098})
    beta_age: float = 0.4   # log-odds per decade of age above 60
    beta_bmi: float = 0.9   # log-odds per 5 kg/m^2 of BMI above 28
    hba1c_pos: tuple[float, float] = (7.0, 1.2)
    hba1c_neg: tuple[float, float] = (5.4, 0.4)
    hba1c_range: tuple[float, float] = (3.0, 20.0)


def ingest_csv(path: str | Path) -> Cohort:
    """Read a cohort from CSV (columns: sex,age,height_m,weight_kg,bmi,hba1c,label).

    BMI is recomputed from weight and height when both are present; otherwise
    the bmi column is used. hba1c may be empty.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFileError(f"{path}: file is empty")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise MissingColumnError(f"{path}: missing columns {', '.join(missing)}")
        records = []
        for i, row in enumerate(reader, start=2):  # header is line 1
            records.append(_record_from_row(row, i))
    if not records:
        raise EmptyFileError(f"{path}: no data rows")
    return Cohort(records=tuple(records), name=path.stem)


def _record_from_row(row: dict, line: int) -> PatientRecord:
    def cell(name: str) -> str:
        value = row.get(name)
        return "" if value is None else value.strip()

    for required in ("sex", "age", "label"):
        if cell(required) == "":
            raise MissingColumnError(f"row {line}: required column {required!r} is empty")
    try:
        sex = cell("sex").lower()
        age = int(cell("age"))
        label = int(cell("label"))
        height = float(cell("height_m")) if cell("height_m") else None
        weight = float(cell("weight_kg")) if cell("weight_kg") else None
        hba1c = float(cell("hba1c")) if cell("hba1c") else None
        if height is not None and weight is not None:
            bmi = weight / height**2
        elif cell("bmi"):
            bmi = float(cell("bmi"))
        else:
            raise MissingColumnError(
                f"row {line}: need either bmi or both height_m and weight_kg"
            )
        return PatientRecord(
            sex=sex, age=age, bmi=bmi, label=label,
            height_m=height, weight_kg=weight, hba1c=hba1c,
        )
    except MissingColumnError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise RowParseError(line, str(exc)) from exc


def write_csv(cohort: Cohort, path: str | Path) -> None:
    """Write a cohort in the same schema ingest_csv reads (lossless round trip)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in cohort:
            writer.writerow([
                r.sex,
                r.age,
                "" if r.height_m is None else repr(r.height_m),
                "" if r.weight_kg is None else repr(r.weight_kg),
                repr(r.bmi),
                "" if r.hba1c is None else repr(r.hba1c),
                r.label,
            ])


def _truncated_normal(rng, mean, sd, lo, hi, size):
    """Rejection-sample a truncated normal; mean/sd may be per-element arrays."""
    mean = np.broadcast_to(np.asarray(mean, dtype=float), size)
    sd = np.broadcast_to(np.asarray(sd, dtype=float), size)
    out = rng.normal(mean, sd)
    bad = (out <= lo) | (out >= hi)
    while np.any(bad):
        out[bad] = rng.normal(mean[bad], sd[bad])
        bad = (out <= lo) | (out >= hi)
    return out


def _solve_intercept(offsets: np.ndarray, target: float) -> float:
    """Bisect for b0 such that mean(sigmoid(b0 + offsets)) == target."""
    lo, hi = -20.0, 20.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.mean(sigmoid(mid + offsets))) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_synthetic_cohort(
    n: int,
    seed: int,
    with_hba1c: bool = False,
    params: SyntheticParams | None = None,
) -> Cohort:
    """Generate a cohort that mirrors the reference population's demographics.

    Per-sex age/height/weight are truncated normals; BMI is weight/height^2;
    the label comes from a logistic model in (sex, age, bmi) whose per-sex
    intercept is tuned by bisection to hit the target prevalences. When
    with_hba1c is set, hba1c is drawn from label-conditional normals.
    """
    if n < 100:
        raise InvalidCountError(f"need n >= 100 for a stable cohort, got {n}")
    p = params or SyntheticParams()
    rng = np.random.default_rng(seed)

    male = rng.random(n) < p.male_fraction
    sexes = np.where(male, "male", "female")

    age_mean = np.where(male, p.age_mean["male"], p.age_mean["female"])
    ages = rng.normal(age_mean, p.age_sd)
    ages = np.clip(np.rint(ages), p.age_range[0], p.age_range[1]).astype(int)

    height_mean = np.where(male, p.height_mean["male"], p.height_mean["female"])
    height_sd = np.where(male, p.height_sd["male"], p.height_sd["female"])
    heights = _truncated_normal(rng, height_mean, height_sd, *p.height_range, size=n)

    weight_mean = np.where(male, p.weight_mean["male"], p.weight_mean["female"])
    weight_sd = np.where(male, p.weight_sd["male"], p.weight_sd["female"])
    weights = _truncated_normal(rng, weight_mean, weight_sd, *p.weight_range, size=n)

    bmis = weights / heights**2

    offsets = p.beta_age * (ages - 60.0) / 10.0 + p.beta_bmi * (bmis - 28.0) / 5.0
    logits = np.empty(n)
    for sex in SEXES:
        mask = sexes == sex
        if not np.any(mask):
            continue
        b0 = _solve_intercept(offsets[mask], p.prevalence[sex])
        logits[mask] = b0 + offsets[mask]
    labels = (rng.random(n) < sigmoid(logits)).astype(int)

    hba1cs = np.full(n, np.nan)
    if with_hba1c:
        mean = np.where(labels == 1, p.hba1c_pos[0], p.hba1c_neg[0])
        sd = np.where(labels == 1, p.hba1c_pos[1], p.hba1c_neg[1])
        hba1cs = _truncated_normal(rng, mean, sd, *p.hba1c_range, size=n)

    records = tuple(
        PatientRecord(
            sex=str(sexes[i]),
            age=int(ages[i]),
            bmi=float(bmis[i]),
            label=int(labels[i]),
            height_m=float(heights[i]),
            weight_kg=float(weights[i]),
            hba1c=float(hba1cs[i]) if with_hba1c else None,
        )
        for i in range(n)
    )
    return Cohort(records=records, name=f"synthetic-{seed}")


def fit_normalization(cohort: Cohort, features: tuple[str, ...]) -> NormalizationStats:
    """Fit per-feature sample mean and sd (n-1 denominator) for the z-transform."""
    if len(cohort) == 0:
        raise EmptyFileError("cannot fit normalization on an empty cohort")
    means, sds = [], []
    for name in features:
        values = _feature_column(cohort, name, FeatureMismatchError)
        mean = float(np.mean(values))
        sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        if not sd > 0:
            raise ZeroVarianceError(f"feature {name!r} has zero variance")
        means.append(mean)
        sds.append(sd)
    return NormalizationStats(features=tuple(features), mean=tuple(means), sd=tuple(sds))


def _feature_column(cohort: Cohort, name: str, error_cls) -> np.ndarray:
    values = []
    for r in cohort:
        v = r.feature(name)
        if v is None:
            raise error_cls(f"record is missing feature {name!r}")
        values.append(v)
    return np.asarray(values, dtype=float)


def apply_normalization(data, stats: NormalizationStats):
    """z-transform the stats' features of a record (1-D) or cohort (2-D)."""
    mean = np.asarray(stats.mean)
    sd = np.asarray(stats.sd)
    if isinstance(data, PatientRecord):
        raw = _record_values(data, stats.features, FeatureMismatchError)
        return (raw - mean) / sd
    rows = [_record_values(r, stats.features, FeatureMismatchError) for r in data]
    return (np.asarray(rows) - mean) / sd


def _record_values(record: PatientRecord, features, error_cls) -> np.ndarray:
    values = []
    for name in features:
        v = record.feature(name)
        if v is None:
            raise error_cls(f"record is missing feature {name!r}")
        values.append(v)
    return np.asarray(values, dtype=float)


def feature_vector(record: PatientRecord, stats: NormalizationStats) -> np.ndarray:
    """Model input for one record: raw sex indicator plus z-scored features."""
    z = (_record_values(record, stats.features, MissingFeatureError) - np.asarray(stats.mean)) / np.asarray(stats.sd)
    return np.concatenate(([record.sex_code], z))


def feature_matrix(cohort: Cohort, stats: NormalizationStats) -> tuple[np.ndarray, np.ndarray]:
    """Model inputs and labels for a whole cohort."""
    X = np.vstack([feature_vector(r, stats) for r in cohort])
    y = cohort.labels.astype(float)
    return X, y


def split(cohort: Cohort, spec: SplitSpec) -> tuple[Cohort, Cohort]:
    """Disjoint, exhaustive train/test partition, stratified by default."""
    n = len(cohort)
    if n < 2:
        raise TooFewPerClassError("need at least 2 records to split")
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        train_idx: list[int] = []
        test_idx: list[int] = []
        labels = cohort.labels
        for cls in sorted(set(labels.tolist())):
            cls_idx = np.flatnonzero(labels == cls)
            if len(cls_idx) < 2:
                raise TooFewPerClassError(
                    f"class {cls} has {len(cls_idx)} record(s); need >= 2 to stratify"
                )
            perm = rng.permutation(cls_idx)
            k = int(round(spec.train_fraction * len(cls_idx)))
            k = min(max(k, 1), len(cls_idx) - 1)
            train_idx.extend(perm[:k].tolist())
            test_idx.extend(perm[k:].tolist())
    else:
        perm = rng.permutation(n)
        k = int(round(spec.train_fraction * n))
        k = min(max(k, 1), n - 1)
        train_idx = perm[:k].tolist()
        test_idx = perm[k:].tolist()
    train_records = tuple(cohort.records[i] for i in sorted(train_idx))
    test_records = tuple(cohort.records[i] for i in sorted(test_idx))
    return (
        Cohort(records=train_records, name=f"{cohort.name}-train"),
        Cohort(records=test_records, name=f"{cohort.name}-test"),
    )


def balance_subsample(cohort: Cohort, seed: int) -> Cohort:
    """Undersample the majority class to the minority count, without replacement."""
    labels = cohort.labels
    pos_idx = np.flatnonzero(labels == 1)
    neg_idx = np.flatnonzero(labels == 0)
    if len(pos_idx) == 0 or len(neg_idx) == 0:
        raise SingleClassError("both classes must be present to balance")
    minority, majority = (pos_idx, neg_idx) if len(pos_idx) <= len(neg_idx) else (neg_idx, pos_idx)
    rng = np.random.default_rng(seed)
    kept_majority = rng.choice(majority, size=len(minority), replace=False)
    keep = np.sort(np.concatenate([minority, kept_majority]))
    return Cohort(
        records=tuple(cohort.records[i] for i in keep),
        name=f"{cohort.name}-balanced",
    )
