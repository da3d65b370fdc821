import { describe, expect, it } from "vitest";

import {
  distanceFromHeight,
  durationFromDistance,
  heightFrame,
  heightFromDuration,
  validateMeasurement,
  weightFrame,
} from "../src/frames.js";

describe("weightFrame", () => {
  it("splits the reference male weight across the two cells", () => {
    expect(weightFrame(86.2)).toBe("W:43.1:43.1");
  });

  it("halves odd weights exactly", () => {
    expect(weightFrame(75)).toBe("W:37.5:37.5");
  });
});

describe("heightFrame", () => {
  it("encodes the echo duration for the ceiling distance", () => {
    // independent arithmetic: 1.748 m -> 25.2 cm gap; sound travels
    // 0.01715 cm per microsecond one-way, so the echo takes d / 0.01715 us
    const expected = (200 - 1.748 * 100) / ((343 * 100 * 1e-6) / 2);
    expect(heightFrame(1.748)).toBe(`U:${expected}`);
    expect(expected).toBeCloseTo(1469.3877551, 4);
  });

  it("round-trips through the inverse conversion", () => {
    for (const h of [1.0, 1.21, 1.5, 1.748, 1.99]) {
      const frame = heightFrame(h);
      const duration = Number(frame.slice(2));
      expect(heightFromDuration(duration)).toBeCloseTo(h, 9);
    }
  });

  it("is monotone: taller person, shorter echo", () => {
    const d1 = durationFromDistance(distanceFromHeight(1.6));
    const d2 = durationFromDistance(distanceFromHeight(1.8));
    expect(d2).toBeLessThan(d1);
  });
});

describe("validateMeasurement", () => {
  it("accepts plausible values", () => {
    expect(validateMeasurement(86.2, 1.748)).toBeNull();
  });

  it("rejects out-of-range weight", () => {
    expect(validateMeasurement(10, 1.7)).toMatch(/Weight/);
    expect(validateMeasurement(300, 1.7)).toMatch(/Weight/);
  });

  it("rejects out-of-range height", () => {
    expect(validateMeasurement(80, 0.5)).toMatch(/Height/);
    expect(validateMeasurement(80, 2.5)).toMatch(/Height/);
    expect(validateMeasurement(80, Number.NaN)).toMatch(/Height/);
  });
});
