/**
 * What-if state: the full set of knobs a reload must reproduce.
 *
 * Mortgage fields are kept in the units the controls use (annual %,
 * years, percents) and converted to API units only when a request is
 * built. Conversions are exact: annual/12 and years*12, no rounding.
 */

export interface WhatIfState {
  /** Annual interest rate in percent, e.g. 2 means 2 %/year. */
  annualRatePct: number;
  termYears: number;
  transactionCostPct: number;
  downPaymentPct: number;
  /** Size-bucket slug, or "avg" for the per-neighborhood average view. */
  bucket: string;
  /** Registered model id driving the ranking; empty when none chosen. */
  model: string;
  /** Pinned listing id in the ranking table; empty when none. */
  pinned: string;
  sortDir: 'asc' | 'desc';
  page: number;
}

export const BUCKET_SLUGS = ['30_60', '60_90', '90_120', '120_150', '150_up'] as const;

export const BUCKET_LABELS: Record<string, string> = {
  avg: 'All buckets (average)',
  '30_60': '30-60 m²',
  '60_90': '60-90 m²',
  '90_120': '90-120 m²',
  '120_150': '120-150 m²',
  '150_up': '150+ m²',
};

/** Bucket labels as the index endpoint spells them in its cells. */
export const API_LABEL_BY_SLUG: Record<string, string> = {
  '30_60': '30-60',
  '60_90': '60-90',
  '90_120': '90-120',
  '120_150': '120-150',
  '150_up': '150+',
};

export const defaultState = (): WhatIfState => ({
  annualRatePct: 2,
  termYears: 30,
  transactionCostPct: 6.7,
  downPaymentPct: 30,
  bucket: 'avg',
  model: '',
  pinned: '',
  sortDir: 'desc',
  page: 1,
});

export const monthlyRate = (state: WhatIfState): number => state.annualRatePct / 100 / 12;
export const totalMonths = (state: WhatIfState): number => state.termYears * 12;
export const costFraction = (state: WhatIfState): number => state.transactionCostPct / 100;
export const downFraction = (state: WhatIfState): number => state.downPaymentPct / 100;

const clampNumber = (raw: string | null, fallback: number, lo: number, hi: number): number => {
  if (raw === null) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) return fallback;
  return Math.min(Math.max(value, lo), hi);
};

/** Mirror of the server-side term invariants, in control units. */
export const clampState = (state: WhatIfState): WhatIfState => ({
  ...state,
  annualRatePct: Math.max(state.annualRatePct, 0),
  termYears: Math.max(Math.round(state.termYears), 1),
  transactionCostPct: Math.min(Math.max(state.transactionCostPct, 0), 99.999),
  downPaymentPct: Math.min(Math.max(state.downPaymentPct, 0), 99.999),
  bucket: state.bucket === 'avg' || (BUCKET_SLUGS as readonly string[]).includes(state.bucket)
    ? state.bucket
    : 'avg',
  sortDir: state.sortDir === 'asc' ? 'asc' : 'desc',
  page: Math.max(Math.round(state.page), 1),
});

/** Serialize into a query string; fields at their default are omitted. */
export const encodeState = (state: WhatIfState): string => {
  const defaults = defaultState();
  const params = new URLSearchParams();
  if (state.annualRatePct !== defaults.annualRatePct) params.set('rate', String(state.annualRatePct));
  if (state.termYears !== defaults.termYears) params.set('years', String(state.termYears));
  if (state.transactionCostPct !== defaults.transactionCostPct) params.set('tcost', String(state.transactionCostPct));
  if (state.downPaymentPct !== defaults.downPaymentPct) params.set('down', String(state.downPaymentPct));
  if (state.bucket !== defaults.bucket) params.set('bucket', state.bucket);
  if (state.model !== defaults.model) params.set('model', state.model);
  if (state.pinned !== defaults.pinned) params.set('pin', state.pinned);
  if (state.sortDir !== defaults.sortDir) params.set('sort', state.sortDir);
  if (state.page !== defaults.page) params.set('page', String(state.page));
  return params.toString();
};

export const decodeState = (search: string): WhatIfState => {
  const params = new URLSearchParams(search.startsWith('?') ? search.slice(1) : search);
  const defaults = defaultState();
  return clampState({
    annualRatePct: clampNumber(params.get('rate'), defaults.annualRatePct, 0, 100),
    termYears: clampNumber(params.get('years'), defaults.termYears, 1, 100),
    transactionCostPct: clampNumber(params.get('tcost'), defaults.transactionCostPct, 0, 99.999),
    downPaymentPct: clampNumber(params.get('down'), defaults.downPaymentPct, 0, 99.999),
    bucket: params.get('bucket') ?? defaults.bucket,
    model: params.get('model') ?? defaults.model,
    pinned: params.get('pin') ?? defaults.pinned,
    sortDir: params.get('sort') === 'asc' ? 'asc' : 'desc',
    page: clampNumber(params.get('page'), defaults.page, 1, 10_000),
  });
};
