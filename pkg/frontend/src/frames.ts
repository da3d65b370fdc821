// Converts the operator's weight/height controls into the sensor wire
// protocol the service expects. This is measurement plumbing, not medical
// logic: every probability and decision still comes from the service.

export const CEILING_CM = 200;
export const SPEED_OF_SOUND_M_PER_S = 343;

const CM_PER_MICROSECOND = (SPEED_OF_SOUND_M_PER_S * 100 * 1e-6) / 2;

export const WEIGHT_RANGE_KG: readonly [number, number] = [20, 250];
export const HEIGHT_RANGE_M: readonly [number, number] = [1.0, 1.99];

export function distanceFromHeight(heightM: number): number {
  return CEILING_CM - heightM * 100;
}

export function durationFromDistance(distanceCm: number): number {
  return distanceCm / CM_PER_MICROSECOND;
}

export function heightFromDuration(durationUs: number): number {
  return (CEILING_CM - durationUs * CM_PER_MICROSECOND) / 100;
}

/** Scale frame: the person's weight rests evenly on the two load cells. */
export function weightFrame(weightKg: number): string {
  const half = weightKg / 2;
  return `W:${half}:${half}`;
}

/** Ultrasonic frame: echo duration for the ceiling-to-head distance. */
export function heightFrame(heightM: number): string {
  return `U:${durationFromDistance(distanceFromHeight(heightM))}`;
}

/** Client-side validation message, or null when the values are plausible. */
export function validateMeasurement(weightKg: number, heightM: number): string | null {
  if (!Number.isFinite(weightKg) || weightKg < WEIGHT_RANGE_KG[0] || weightKg > WEIGHT_RANGE_KG[1]) {
    return `Weight must be between ${WEIGHT_RANGE_KG[0]} and ${WEIGHT_RANGE_KG[1]} kg.`;
  }
  if (!Number.isFinite(heightM) || heightM < HEIGHT_RANGE_M[0] || heightM > HEIGHT_RANGE_M[1]) {
    return `Height must be between ${HEIGHT_RANGE_M[0]} and ${HEIGHT_RANGE_M[1]} m.`;
  }
  return null;
}
