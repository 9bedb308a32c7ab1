import type {
  HealthResponse,
  IndexGeojson,
  IndexResponse,
  ListingsResponse,
  RankingResponse,
} from './types';
import type { WhatIfState } from './state';
import { costFraction, downFraction, monthlyRate, totalMonths } from './state';

/** HTTP-level failure with the service's {code, message} body attached. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** The request lost a latest-wins race against a newer one on its channel. */
export class RequestSuperseded extends Error {
  constructor(channel: string) {
    super(`request superseded on channel ${channel}`);
    this.name = 'RequestSuperseded';
  }
}

/** The service could not be reached at all. */
export class ServerUnreachable extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${cause instanceof Error ? cause.message : String(cause)}`);
    this.name = 'ServerUnreachable';
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const termsParams = (state: WhatIfState): Record<string, string> => ({
  rate: String(monthlyRate(state)),
  months: String(totalMonths(state)),
  tcost: String(costFraction(state)),
  down: String(downFraction(state)),
});

/**
 * Thin typed client. Every call names a channel; starting a new request
 * on a channel aborts the previous in-flight one, so stale responses
 * can never land on top of fresh ones.
 */
export class ApiClient {
  private inflight = new Map<string, AbortController>();

  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init)
  ) {}

  private async get<T>(
    channel: string,
    path: string,
    params?: Record<string, string>
  ): Promise<T> {
    this.inflight.get(channel)?.abort();
    const controller = new AbortController();
    this.inflight.set(channel, controller);
    const query = params ? `?${new URLSearchParams(params).toString()}` : '';
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${path}${query}`, {
        signal: controller.signal,
      });
    } catch (cause) {
      if (controller.signal.aborted) throw new RequestSuperseded(channel);
      throw new ServerUnreachable(cause);
    } finally {
      if (this.inflight.get(channel) === controller) this.inflight.delete(channel);
    }
    if (controller.signal.aborted) throw new RequestSuperseded(channel);
    if (!response.ok) {
      let code = 'http_error';
      let message = `${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        if (body && typeof body.code === 'string') code = body.code;
        if (body && typeof body.message === 'string') message = body.message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  fetchHealth(): Promise<HealthResponse> {
    return this.get('health', '/api/health');
  }

  fetchIndex(state: WhatIfState): Promise<IndexResponse> {
    return this.get('index', '/api/index', termsParams(state));
  }

  fetchIndexGeojson(state: WhatIfState): Promise<IndexGeojson> {
    return this.get('geojson', '/api/index.geojson', termsParams(state));
  }

  fetchRanking(state: WhatIfState, limit = 200): Promise<RankingResponse> {
    return this.get('ranking', '/api/yield/ranking', {
      ...termsParams(state),
      model: state.model,
      limit: String(limit),
    });
  }

  /** Sale listings for the pinned-row feature breakdown, first 500. */
  fetchSaleListings(): Promise<ListingsResponse> {
    return this.get('listings', '/api/listings', {
      operation: 'sale',
      page_size: '500',
    });
  }
}
