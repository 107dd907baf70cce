/**
 * Display rounding. The client never computes statistics; it only rounds
 * service numbers to 4 significant figures for the screen.
 */

export const DISPLAY_SIG_FIGS = 4;

/** Round to the display precision, returning a number (for comparisons). */
export function roundSig(value: number, sig: number = DISPLAY_SIG_FIGS): number {
  if (!Number.isFinite(value) || value === 0) return value;
  return Number(value.toPrecision(sig));
}

/** Render a service number at display precision. */
export function formatSig(value: number | null | undefined, sig: number = DISPLAY_SIG_FIGS): string {
  if (value === null || value === undefined) return "–";
  if (Number.isNaN(value)) return "NaN";
  if (!Number.isFinite(value)) return value > 0 ? "∞" : "-∞";
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e6 || abs < 1e-4) {
    return value.toExponential(sig - 1);
  }
  return String(roundSig(value, sig));
}

/** Probabilities get the same treatment, with an exact "1" preserved. */
export function formatProb(value: number | null | undefined): string {
  if (value === 1) return "1";
  return formatSig(value);
}
