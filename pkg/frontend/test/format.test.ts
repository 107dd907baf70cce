import { describe, expect, it } from "vitest";

import { formatProb, formatSig, roundSig } from "../src/format.js";

describe("roundSig", () => {
  it("keeps four significant figures", () => {
    expect(roundSig(0.0012345678)).toBe(0.001235);
    expect(roundSig(3688.4921)).toBe(3688);
    expect(roundSig(1.75)).toBe(1.75);
    expect(roundSig(-0.0599999)).toBe(-0.06);
  });

  it("is idempotent", () => {
    for (const v of [123.456789, 6.0204e-6, 0.999999, 88.8888]) {
      expect(roundSig(roundSig(v))).toBe(roundSig(v));
    }
  });

  it("passes zero and non-finite values through", () => {
    expect(roundSig(0)).toBe(0);
    expect(roundSig(Infinity)).toBe(Infinity);
  });
});

describe("formatSig", () => {
  it("uses exponential notation only for extreme magnitudes", () => {
    expect(formatSig(6.02042e-6)).toBe("6.020e-6");
    expect(formatSig(3.52e7)).toBe("3.520e+7");
    expect(formatSig(1.75)).toBe("1.75");
    expect(formatSig(3688.49)).toBe("3688");
  });

  it("round-trips through Number for in-range values", () => {
    for (const v of [0.001066, 0.458, 12.3456, 3688.49, 2.04e-5]) {
      expect(Number(formatSig(v))).toBe(roundSig(v));
    }
  });

  it("handles missing values", () => {
    expect(formatSig(null)).toBe("–");
    expect(formatSig(undefined)).toBe("–");
  });
});

describe("formatProb", () => {
  it("preserves an exact one (censored p-values)", () => {
    expect(formatProb(1)).toBe("1");
  });

  it("otherwise matches formatSig", () => {
    expect(formatProb(0.0259846)).toBe(formatSig(0.0259846));
  });
});
