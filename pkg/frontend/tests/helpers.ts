/**
 * Test doubles: an in-memory service the ApiClient talks to, which also
 * captures every request and response so single-source-of-truth checks
 * can compare the DOM against exactly what went over the wire.
 */

import type { FetchLike } from '../src/api';

export const jsonResponse = (data: unknown, status = 200): Response =>
  ({
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(JSON.stringify(data)),
  }) as unknown as Response;

export interface CapturedCall {
  path: string;
  params: URLSearchParams;
  status: number;
  body: unknown;
}

type Handler = (params: URLSearchParams) => { status: number; body: unknown } | unknown;

export class FakeServer {
  captured: CapturedCall[] = [];
  down = false;

  constructor(private readonly routes: Record<string, Handler>) {}

  fetch: FetchLike = async (input, init) => {
    if (this.down) throw new TypeError('fetch failed');
    const url = new URL(input, 'http://fake.test');
    const handler = this.routes[url.pathname];
    if (!handler) {
      const body = { code: 'not_found', message: `no route ${url.pathname}` };
      this.captured.push({ path: url.pathname, params: url.searchParams, status: 404, body });
      return jsonResponse(body, 404);
    }
    const raw = handler(url.searchParams);
    const { status, body } =
      raw && typeof raw === 'object' && 'status' in raw && 'body' in raw
        ? (raw as { status: number; body: unknown })
        : { status: 200, body: raw };
    this.captured.push({ path: url.pathname, params: url.searchParams, status, body });
    if (init?.signal?.aborted) throw new DOMException('aborted', 'AbortError');
    return jsonResponse(body, status);
  };

  calls(path: string): CapturedCall[] {
    return this.captured.filter((c) => c.path === path);
  }

  lastCall(path: string): CapturedCall {
    const hits = this.calls(path);
    if (hits.length === 0) throw new Error(`no captured call to ${path}`);
    return hits[hits.length - 1];
  }
}

/** Every primitive leaf of the captured response bodies, stringified. */
export const capturedLeafValues = (captured: CapturedCall[]): Set<string> => {
  const leaves = new Set<string>();
  const walk = (node: unknown): void => {
    if (node === null || ['string', 'number', 'boolean'].includes(typeof node)) {
      leaves.add(String(node));
      return;
    }
    if (Array.isArray(node)) {
      for (const item of node) walk(item);
      return;
    }
    if (typeof node === 'object') {
      for (const value of Object.values(node as Record<string, unknown>)) walk(value);
    }
  };
  for (const call of captured) walk(call.body);
  return leaves;
};

export const flush = (): Promise<void> => new Promise((resolve) => setTimeout(resolve, 0));
