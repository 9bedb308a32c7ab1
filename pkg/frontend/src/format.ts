/**
 * Display formatting for numbers that came off the wire. Every element
 * showing a server-derived value also carries the raw value in
 * data-value, so tests can trace the text back to one response field.
 */

export const fmtIndex = (v: number): string => v.toFixed(3);

export const fmtMoney = (v: number): string => v.toFixed(2);

export const fmtInt = (v: number): string => String(v);

/** Raw wire representation for data-value attributes. */
export const rawValue = (v: number | null | undefined): string =>
  v === null || v === undefined ? 'null' : String(v);
