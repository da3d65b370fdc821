"""Simulated scale and ultrasonic height sensor.

Wire format is an ASCII line protocol, one frame per line:

    W:<kg>:<kg>[#seq]     two load-cell readings, kilograms each
    U:<micros>[#seq]      ultrasonic echo duration, microseconds

Height comes from the ceiling-mounted distance sensor: the cabin ceiling sits
at 200 cm, so height_m = (200 - distance_cm) / 100. BMI = weight / height^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ImplausibleProfileError,
    MalformedFrameError,
    NonPositiveDurationError,
    NonPositiveInputError,
    OutOfRangeError,
)

LOAD_CELL_CAPACITY_KG = 200.0
CEILING_CM = 200.0
SPEED_OF_SOUND_M_PER_S = 343.0  # dry air at 20 degC

# One-way distance in cm per microsecond of echo round-trip time.
_CM_PER_MICROSECOND = SPEED_OF_SOUND_M_PER_S * 100.0 * 1e-6 / 2.0

# Plausibility window for simulated people (enforced at the anamnesis layer
# for live measurements; the simulator refuses to even generate outside it).
PROFILE_WEIGHT_RANGE_KG = (20.0, 250.0)
PROFILE_HEIGHT_RANGE_M = (1.0, 1.99)


@dataclass(frozen=True)
class SensorFrame:
    """One parsed wire message from the scale or the ultrasonic sensor."""

    kind: str  # "scale" | "ultrasonic"
    payload: tuple  # (cell1_kg, cell2_kg) or (duration_us,)
    sequence: int | None = None

    def __post_init__(self):
        if self.kind == "scale":
            c1, c2 = self.payload
            for c in (c1, c2):
                if not (0.0 <= c <= LOAD_CELL_CAPACITY_KG):
                    raise ValueError(
                        f"load cell reading {c} outside [0, {LOAD_CELL_CAPACITY_KG}] kg"
                    )
        elif self.kind == "ultrasonic":
            (duration,) = self.payload
            if not duration > 0:
                raise ValueError(f"echo duration must be positive, got {duration}")
        else:
            raise ValueError(f"unknown frame kind {self.kind!r}")


@dataclass(frozen=True)
class Measurement:
    """Derived body metrics for one person."""

    weight_kg: float
    distance_cm: float
    height_m: float
    bmi: float


def parse_frame(line: str) -> SensorFrame:
    """Parse one protocol line into a SensorFrame."""
    text = line.strip()
    seq: int | None = None
    if "#" in text:
        text, _, seq_part = text.partition("#")
        try:
            seq = int(seq_part)
        except ValueError as exc:
            raise MalformedFrameError(f"bad sequence suffix in {line!r}") from exc
    parts = text.split(":")
    try:
        if parts[0] == "W" and len(parts) == 3:
            cells = (float(parts[1]), float(parts[2]))
            for c in cells:
                if not (0.0 <= c <= LOAD_CELL_CAPACITY_KG):
                    raise MalformedFrameError(
                        f"load cell reading {c} exceeds {LOAD_CELL_CAPACITY_KG} kg capacity"
                    )
            return SensorFrame(kind="scale", payload=cells, sequence=seq)
        if parts[0] == "U" and len(parts) == 2:
            duration = float(parts[1])
            if not duration > 0:
                raise MalformedFrameError(f"echo duration must be positive: {line!r}")
            return SensorFrame(kind="ultrasonic", payload=(duration,), sequence=seq)
    except MalformedFrameError:
        raise
    except ValueError as exc:
        raise MalformedFrameError(f"non-numeric payload in {line!r}") from exc
    raise MalformedFrameError(f"unrecognized frame {line!r}")


def format_frame(frame: SensorFrame) -> str:
    """Inverse of parse_frame (modulo float repr)."""
    if frame.kind == "scale":
        body = f"W:{frame.payload[0]!r}:{frame.payload[1]!r}"
    else:
        body = f"U:{frame.payload[0]!r}"
    if frame.sequence is not None:
        body += f"#{frame.sequence}"
    return body


def weight_from_cells(cell1_kg: float, cell2_kg: float) -> float:
    """Total weight: the two cells share the load, so readings sum."""
    for c in (cell1_kg, cell2_kg):
        if not (0.0 <= c <= LOAD_CELL_CAPACITY_KG):
            raise OutOfRangeError(
                f"load cell reading {c} outside [0, {LOAD_CELL_CAPACITY_KG}] kg"
            )
    return cell1_kg + cell2_kg


def distance_from_duration(duration_us: float) -> float:
    """Echo duration (microseconds) to one-way distance in centimeters."""
    if not duration_us > 0:
        raise NonPositiveDurationError(f"duration must be positive, got {duration_us}")
    return _CM_PER_MICROSECOND * duration_us


def duration_from_distance(distance_cm: float) -> float:
    """Inverse of distance_from_duration, used by the simulator and the UI."""
    if not distance_cm > 0:
        raise NonPositiveInputError(f"distance must be positive, got {distance_cm}")
    return distance_cm / _CM_PER_MICROSECOND


def height_from_distance(distance_cm: float) -> float:
    """Body height in meters from the ceiling-to-head distance in centimeters."""
    if not (0.0 < distance_cm < CEILING_CM):
        raise OutOfRangeError(
            f"distance must be in (0, {CEILING_CM}) cm, got {distance_cm}"
        )
    return (CEILING_CM - distance_cm) / 100.0


def distance_from_height(height_m: float) -> float:
    """Inverse of height_from_distance."""
    if not (0.0 < height_m < CEILING_CM / 100.0):
        raise OutOfRangeError(
            f"height must be in (0, {CEILING_CM / 100.0}) m, got {height_m}"
        )
    return CEILING_CM - height_m * 100.0


def bmi(weight_kg: float, height_m: float) -> float:
    """Body mass index, kg/m^2."""
    if not weight_kg > 0 or not height_m > 0:
        raise NonPositiveInputError(
            f"weight and height must be positive, got {weight_kg}, {height_m}"
        )
    return weight_kg / height_m**2


def measurement(weight_kg: float, distance_cm: float) -> Measurement:
    """Bundle the derived metrics for one weight/distance reading pair."""
    h = height_from_distance(distance_cm)
    return Measurement(
        weight_kg=weight_kg,
        distance_cm=distance_cm,
        height_m=h,
        bmi=bmi(weight_kg, h),
    )


def simulate_sensor_stream(
    profile: tuple[float, float],
    noise_sd: float,
    seed: int,
    n_pairs: int = 1,
) -> list[SensorFrame]:
    """Emit alternating scale/ultrasonic frames for a (weight_kg, height_m) profile.

    Scale frames split the weight across the two cells, each perturbed by
    Gaussian noise of sd noise_sd (kg). Ultrasonic durations invert the
    distance conversion for the profile height, with noise_sd applied in the
    distance domain (cm). noise_sd 0 round-trips exactly.
    """
    weight, height = profile
    lo_w, hi_w = PROFILE_WEIGHT_RANGE_KG
    lo_h, hi_h = PROFILE_HEIGHT_RANGE_M
    if not (lo_w <= weight <= hi_w) or not (lo_h <= height <= hi_h):
        raise ImplausibleProfileError(
            f"profile ({weight} kg, {height} m) outside plausible ranges "
            f"{PROFILE_WEIGHT_RANGE_KG} kg x {PROFILE_HEIGHT_RANGE_M} m"
        )
    rng = np.random.default_rng(seed)
    distance = distance_from_height(height)
    frames: list[SensorFrame] = []
    seq = 0
    for _ in range(n_pairs):
        half = weight / 2.0
        c1 = half + (rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0)
        c2 = half + (rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0)
        c1 = float(np.clip(c1, 0.0, LOAD_CELL_CAPACITY_KG))
        c2 = float(np.clip(c2, 0.0, LOAD_CELL_CAPACITY_KG))
        frames.append(SensorFrame(kind="scale", payload=(c1, c2), sequence=seq))
        seq += 1
        d = distance + (rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0)
        d = float(np.clip(d, 1e-6, CEILING_CM - 1e-6))
        frames.append(
            SensorFrame(kind="ultrasonic", payload=(duration_from_distance(d),), sequence=seq)
        )
        seq += 1
    return frames
