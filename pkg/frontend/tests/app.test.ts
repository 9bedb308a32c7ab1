/**
 * End-to-end behavior with an intercepted fetch: every rendered server
 * number must be traceable to a captured response field, the URL must
 * reproduce the full what-if state, and failure modes must degrade the
 * way the controls contract says.
 */

import { describe, expect, it } from 'vitest';
import { ApiClient } from '../src/api';
import { App } from '../src/app';
import { decodeState, defaultState } from '../src/state';
import { FakeServer, capturedLeafValues, flush } from './helpers';
import { indexGeojson, makeRoutes, rankingResponse } from './fixtures';

interface Booted {
  app: App;
  root: HTMLElement;
  server: FakeServer;
}

const bootApp = async (
  search = '',
  server = new FakeServer(makeRoutes())
): Promise<Booted> => {
  window.history.replaceState(null, '', `/${search}`);
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById('app') as HTMLElement;
  const app = new App(root, new ApiClient('', server.fetch), window);
  await app.boot();
  await flush();
  await flush();
  return { app, root, server };
};

const input = (root: HTMLElement, id: string): HTMLInputElement => {
  const el = root.querySelector<HTMLInputElement>(`#${id}`);
  if (!el) throw new Error(`missing #${id}`);
  return el;
};

const setNumber = async (root: HTMLElement, id: string, value: string): Promise<void> => {
  const el = input(root, id);
  el.value = value;
  el.dispatchEvent(new Event('change'));
  await flush();
  await flush();
};

const selectValue = async (root: HTMLElement, id: string, value: string): Promise<void> => {
  const el = root.querySelector<HTMLSelectElement>(`#${id}`);
  if (!el) throw new Error(`missing #${id}`);
  el.value = value;
  el.dispatchEvent(new Event('change'));
  await flush();
  await flush();
};

describe('single source of truth', () => {
  it('every rendered data value equals a captured API response field', async () => {
    const { root, server } = await bootApp('?model=forest-v1&pin=L01');
    // materialize the hover card too, so its values are checked as well
    root
      .querySelector<SVGPathElement>('path.map-area')
      ?.dispatchEvent(new MouseEvent('mouseenter'));

    const leaves = capturedLeafValues(server.captured);
    const bound = [...document.querySelectorAll<HTMLElement>('[data-value]')];
    expect(bound.length).toBeGreaterThan(20);
    for (const el of bound) {
      const value = el.getAttribute('data-value') ?? '';
      expect(leaves.has(value), `data-value ${value} not in any captured response`).toBe(true);
    }
  });

  it('ranking cells map one-to-one onto captured ranking fields', async () => {
    const { root, server } = await bootApp('?model=forest-v1');
    const body = server.lastCall('/api/yield/ranking').body as ReturnType<typeof rankingResponse>;
    const indexes = new Set(body.rows.map((r) => String(r.implied_index)));
    const rents = new Set(body.rows.map((r) => String(r.predicted_rent)));
    const cells = [...root.querySelectorAll<HTMLElement>('tbody .col-index')];
    expect(cells.length).toBeGreaterThan(0);
    for (const cell of cells) {
      expect(indexes.has(cell.getAttribute('data-value') ?? '')).toBe(true);
    }
    for (const cell of root.querySelectorAll<HTMLElement>('tbody .col-rent')) {
      expect(rents.has(cell.getAttribute('data-value') ?? '')).toBe(true);
    }
  });

  it('map fills come from the captured geojson properties', async () => {
    const { root, server } = await bootApp('?bucket=60_90');
    const body = server.lastCall('/api/index.geojson').body as ReturnType<typeof indexGeojson>;
    const byName = new Map(
      body.features.map((f) => [f.properties.neighborhood, f.properties.index_60_90])
    );
    for (const path of root.querySelectorAll<SVGPathElement>('path.map-area')) {
      const name = path.getAttribute('data-neighborhood') ?? '';
      const expected = byName.get(name);
      expect(path.getAttribute('data-value')).toBe(String(expected ?? null));
    }
  });
});

describe('what-if controls', () => {
  it('issues a fresh index request with exactly converted terms', async () => {
    const { root, server } = await bootApp();
    server.captured.length = 0;
    await setNumber(root, 'ctl-rate', '3');
    expect(server.calls('/api/index')).toHaveLength(1);
    const call = server.lastCall('/api/index');
    expect(call.params.get('rate')).toBe(String(3 / 100 / 12));
    expect(call.params.get('months')).toBe('360');

    server.captured.length = 0;
    await setNumber(root, 'ctl-years', '25');
    expect(server.lastCall('/api/index').params.get('months')).toBe('300');
    expect(server.lastCall('/api/index').params.get('rate')).toBe(String(3 / 100 / 12));
  });

  it('refreshes the ranking too while a listing is pinned', async () => {
    const { root, server } = await bootApp('?model=forest-v1&pin=L05');
    server.captured.length = 0;
    await setNumber(root, 'ctl-down', '45');
    expect(server.calls('/api/index')).toHaveLength(1);
    expect(server.calls('/api/yield/ranking')).toHaveLength(1);
    expect(server.lastCall('/api/yield/ranking').params.get('down')).toBe(String(45 / 100));
    // the pinned panel survives the refresh
    expect(root.querySelector<HTMLElement>('.pin-panel')?.dataset.id).toBe('L05');
  });

  it('re-queries when the bucket changes', async () => {
    const { root, server } = await bootApp();
    server.captured.length = 0;
    await selectValue(root, 'ctl-bucket', '60_90');
    expect(server.calls('/api/index')).toHaveLength(1);
  });

  it('loads the ranking when a model is picked', async () => {
    const { root, server } = await bootApp();
    expect(root.querySelector('.banner-empty')?.textContent).toMatch(/no model loaded/i);
    await selectValue(root, 'ctl-model', 'forest-v1');
    expect(server.calls('/api/yield/ranking')).toHaveLength(1);
    expect(root.querySelectorAll('tbody tr').length).toBeGreaterThan(0);
  });

  it('reset restores the default terms but keeps bucket and model', async () => {
    const { app, root, server } = await bootApp(
      '?rate=4&years=20&tcost=10&down=50&bucket=60_90&model=forest-v1'
    );
    server.captured.length = 0;
    root.querySelector<HTMLButtonElement>('#ctl-reset')?.click();
    await flush();
    await flush();
    expect(app.state.annualRatePct).toBe(2);
    expect(app.state.termYears).toBe(30);
    expect(app.state.transactionCostPct).toBe(6.7);
    expect(app.state.downPaymentPct).toBe(30);
    expect(app.state.bucket).toBe('60_90');
    expect(app.state.model).toBe('forest-v1');
    expect(input(root, 'ctl-rate').value).toBe('2');
    expect(input(root, 'ctl-years').value).toBe('30');
    expect(input(root, 'ctl-tcost').value).toBe('6.7');
    expect(input(root, 'ctl-down').value).toBe('30');
    const call = server.lastCall('/api/index');
    expect(call.params.get('rate')).toBe(String(2 / 100 / 12));
    expect(call.params.get('months')).toBe('360');
    expect(call.params.get('tcost')).toBe(String(6.7 / 100));
    expect(call.params.get('down')).toBe(String(30 / 100));
  });
});

describe('URL state', () => {
  it('writes control changes into the query string', async () => {
    const { root } = await bootApp();
    await setNumber(root, 'ctl-rate', '3.5');
    expect(window.location.search).toContain('rate=3.5');
    expect(decodeState(window.location.search).annualRatePct).toBe(3.5);
  });

  it('reload with the same query reproduces the exact view', async () => {
    const search = '?rate=3.5&years=25&tcost=8&down=40&bucket=60_90&model=forest-v1&pin=L02&sort=asc&page=2';
    const first = await bootApp(search);
    const firstState = { ...first.app.state };
    const firstRows = [...first.root.querySelectorAll<HTMLTableRowElement>('tbody tr')].map(
      (tr) => tr.dataset.id
    );
    const second = await bootApp(search);
    expect(second.app.state).toEqual(firstState);
    const secondRows = [...second.root.querySelectorAll<HTMLTableRowElement>('tbody tr')].map(
      (tr) => tr.dataset.id
    );
    expect(secondRows).toEqual(firstRows);
    expect(second.root.querySelector<HTMLElement>('.pin-panel')?.dataset.id).toBe('L02');
    expect(input(second.root, 'ctl-rate').value).toBe('3.5');
  });

  it('defaults produce a clean URL', async () => {
    const { root } = await bootApp('?rate=4');
    await setNumber(root, 'ctl-rate', '2');
    expect(window.location.search).toBe('');
  });
});

describe('failure modes', () => {
  it('disables controls and shows the stale banner when the server is down', async () => {
    const server = new FakeServer(makeRoutes());
    server.down = true;
    const { root } = await bootApp('', server);
    expect(root.querySelector<HTMLElement>('.banner-stale')?.hidden).toBe(false);
    for (const el of root.querySelectorAll<HTMLInputElement>('.controls input, .controls select, .controls button')) {
      expect(el.disabled).toBe(true);
    }
    expect(root.querySelectorAll('.toast')).toHaveLength(1);
  });

  it('recovers through the retry toast once the server returns', async () => {
    const server = new FakeServer(makeRoutes());
    server.down = true;
    const { root } = await bootApp('', server);
    server.down = false;
    root.querySelector<HTMLButtonElement>('.toast-retry')?.click();
    await flush();
    await flush();
    await flush();
    expect(root.querySelector<HTMLElement>('.banner-stale')?.hidden).toBe(true);
    expect(input(root, 'ctl-rate').disabled).toBe(false);
    expect(root.querySelectorAll('path.map-area').length).toBeGreaterThan(0);
  });

  it('keeps controls usable on an API error and offers a retry toast', async () => {
    const routes = makeRoutes();
    const failing = {
      ...routes,
      '/api/yield/ranking': () => ({
        status: 422,
        body: { code: 'unscorable', message: 'listing missing features' },
      }),
    };
    const { root } = await bootApp('?model=forest-v1', new FakeServer(failing));
    expect(root.querySelector<HTMLElement>('.banner-stale')?.hidden).toBe(true);
    expect(input(root, 'ctl-rate').disabled).toBe(false);
    const toast = root.querySelector('.toast');
    expect(toast?.textContent).toContain('unscorable');
    expect(toast?.querySelector('.toast-retry')).not.toBeNull();
    // the index panel still rendered fine
    expect(root.querySelectorAll('path.map-area').length).toBeGreaterThan(0);
  });

  it('drops the map quietly when the server has no boundaries', async () => {
    const routes = makeRoutes();
    const noGeo = {
      ...routes,
      '/api/health': () => ({ ...routes['/api/health'](), has_boundaries: false }),
    };
    const { root, server } = await bootApp('', new FakeServer(noGeo));
    expect(server.calls('/api/index.geojson')).toHaveLength(0);
    expect(root.querySelector('.map-missing')).not.toBeNull();
    expect(root.querySelectorAll('.toast')).toHaveLength(0);
  });
});

describe('state sanity', () => {
  it('boots into the documented defaults', async () => {
    const { app } = await bootApp();
    expect(app.state).toEqual(defaultState());
  });
});
