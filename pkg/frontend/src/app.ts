/**
 * Page controller: owns the what-if state, keeps it mirrored in the
 * URL, and routes every control change through the HTTP API. All yield
 * math happens server-side; this file only moves responses into views.
 */

import { ApiClient, ApiError, RequestSuperseded, ServerUnreachable } from './api';
import { renderChoropleth } from './choropleth';
import { renderRankingTable } from './table';
import { ToastStack, escapeHtml } from './toast';
import { fmtInt, rawValue } from './format';
import {
  BUCKET_LABELS,
  BUCKET_SLUGS,
  clampState,
  decodeState,
  defaultState,
  encodeState,
  type WhatIfState,
} from './state';
import type {
  HealthResponse,
  IndexGeojson,
  IndexResponse,
  ListingRecord,
  RankingResponse,
} from './types';

interface Els {
  stale: HTMLElement;
  health: HTMLElement;
  rate: HTMLInputElement;
  years: HTMLInputElement;
  tcost: HTMLInputElement;
  down: HTMLInputElement;
  bucket: HTMLSelectElement;
  model: HTMLSelectElement;
  reset: HTMLButtonElement;
  mapHost: HTMLElement;
  tableHost: HTMLElement;
  toastHost: HTMLElement;
}

const bucketOptions = (): string =>
  ['avg', ...BUCKET_SLUGS]
    .map((slug) => `<option value="${slug}">${escapeHtml(BUCKET_LABELS[slug])}</option>`)
    .join('');

export class App {
  state: WhatIfState = defaultState();

  private els!: Els;
  private lastIndex: IndexResponse | null = null;
  private lastGeojson: IndexGeojson | null = null;
  private lastRanking: RankingResponse | null = null;
  private listingById = new Map<string, ListingRecord>();
  private hasBoundaries = false;
  private stale = false;
  private staleToastUp = false;
  private toasts!: ToastStack;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly win: Window = window
  ) {}

  async boot(): Promise<void> {
    this.state = decodeState(this.win.location.search);
    this.renderSkeleton();
    this.syncControls();
    this.win.addEventListener('popstate', () => {
      this.state = decodeState(this.win.location.search);
      this.syncControls();
      void this.refresh();
    });
    await this.loadHealth();
    await this.refresh();
  }

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <header class="topbar">
        <h1>Yield explorer</h1>
        <span class="health-line"></span>
      </header>
      <div class="banner banner-stale" hidden>
        Service unreachable — showing the last loaded data. Controls are disabled until it returns.
      </div>
      <section class="controls">
        <label>annual rate %
          <input id="ctl-rate" type="number" step="0.1" min="0">
        </label>
        <label>term (years)
          <input id="ctl-years" type="number" step="1" min="1">
        </label>
        <label>transaction cost %
          <input id="ctl-tcost" type="number" step="0.1" min="0">
        </label>
        <label>down payment %
          <input id="ctl-down" type="number" step="1" min="0">
        </label>
        <label>size bucket
          <select id="ctl-bucket">${bucketOptions()}</select>
        </label>
        <label>model
          <select id="ctl-model"><option value="">(none)</option></select>
        </label>
        <button id="ctl-reset" type="button">Reset terms</button>
      </section>
      <main class="panels">
        <section class="panel map-panel">
          <h2>Neighborhood index</h2>
          <div class="map-host"></div>
        </section>
        <section class="panel table-panel">
          <h2>Ranked sale listings</h2>
          <div class="table-host"></div>
        </section>
      </main>
      <div class="toast-host"></div>
    `;
    const pick = <T extends Element>(sel: string): T => {
      const el = this.root.querySelector<T>(sel);
      if (!el) throw new Error(`skeleton is missing ${sel}`);
      return el;
    };
    this.els = {
      stale: pick('.banner-stale'),
      health: pick('.health-line'),
      rate: pick('#ctl-rate'),
      years: pick('#ctl-years'),
      tcost: pick('#ctl-tcost'),
      down: pick('#ctl-down'),
      bucket: pick('#ctl-bucket'),
      model: pick('#ctl-model'),
      reset: pick('#ctl-reset'),
      mapHost: pick('.map-host'),
      tableHost: pick('.table-host'),
      toastHost: pick('.toast-host'),
    };
    this.toasts = new ToastStack(this.els.toastHost);

    const numberChange = (el: HTMLInputElement, apply: (v: number) => Partial<WhatIfState>) => {
      el.addEventListener('change', () => {
        const v = Number(el.value);
        if (Number.isFinite(v)) this.updateTerms(apply(v));
        else this.syncControls();
      });
    };
    numberChange(this.els.rate, (v) => ({ annualRatePct: v }));
    numberChange(this.els.years, (v) => ({ termYears: v }));
    numberChange(this.els.tcost, (v) => ({ transactionCostPct: v }));
    numberChange(this.els.down, (v) => ({ downPaymentPct: v }));
    this.els.bucket.addEventListener('change', () => {
      this.updateTerms({ bucket: this.els.bucket.value });
    });
    this.els.model.addEventListener('change', () => {
      this.updateTerms({ model: this.els.model.value, pinned: '', page: 1 });
    });
    this.els.reset.addEventListener('click', () => {
      const d = defaultState();
      this.updateTerms({
        annualRatePct: d.annualRatePct,
        termYears: d.termYears,
        transactionCostPct: d.transactionCostPct,
        downPaymentPct: d.downPaymentPct,
      });
    });
  }

  /** Term/bucket/model changes: state, URL, then fresh server data. */
  private updateTerms(partial: Partial<WhatIfState>): void {
    this.state = clampState({ ...this.state, ...partial });
    this.syncControls();
    this.pushUrl();
    void this.refresh();
  }

  /** Table-only view changes: no new data needed, keep the URL exact. */
  private updateView(partial: Partial<WhatIfState>): void {
    this.state = clampState({ ...this.state, ...partial });
    this.pushUrl();
    this.renderTable();
  }

  private pushUrl(): void {
    const qs = encodeState(this.state);
    const href = qs ? `?${qs}` : this.win.location.pathname;
    this.win.history.pushState(null, '', href);
  }

  private syncControls(): void {
    this.els.rate.value = String(this.state.annualRatePct);
    this.els.years.value = String(this.state.termYears);
    this.els.tcost.value = String(this.state.transactionCostPct);
    this.els.down.value = String(this.state.downPaymentPct);
    this.els.bucket.value = this.state.bucket;
    this.els.model.value = this.state.model;
    if (this.els.model.value !== this.state.model) {
      // model not yet in the option list; keep the option around
      const opt = this.win.document.createElement('option');
      opt.value = this.state.model;
      opt.textContent = this.state.model;
      this.els.model.appendChild(opt);
      this.els.model.value = this.state.model;
    }
  }

  private controls(): (HTMLInputElement | HTMLSelectElement | HTMLButtonElement)[] {
    const e = this.els;
    return [e.rate, e.years, e.tcost, e.down, e.bucket, e.model, e.reset];
  }

  private enterStale(): void {
    this.stale = true;
    this.els.stale.hidden = false;
    for (const el of this.controls()) el.disabled = true;
  }

  private exitStale(): void {
    if (!this.stale) return;
    this.stale = false;
    this.staleToastUp = false;
    this.els.stale.hidden = true;
    for (const el of this.controls()) el.disabled = false;
  }

  private handleError(err: unknown, what: string, retry: () => void): void {
    if (err instanceof RequestSuperseded) return;
    if (err instanceof ServerUnreachable) {
      this.enterStale();
      if (!this.staleToastUp) {
        this.staleToastUp = true;
        this.toasts.show(`Could not reach the service while loading ${what}.`, {
          retry: () => {
            this.staleToastUp = false;
            retry();
          },
          ttl: 0,
        });
      }
      return;
    }
    if (err instanceof ApiError) {
      this.toasts.show(`${what}: ${err.message} [${err.code}]`, { retry });
      return;
    }
    this.toasts.show(`${what}: ${String(err)}`, { retry });
  }

  private async loadHealth(): Promise<void> {
    try {
      const health = await this.api.fetchHealth();
      this.exitStale();
      this.applyHealth(health);
      if (health.listings > 0) void this.loadListings();
    } catch (err) {
      this.handleError(err, 'service status', () => void this.boot());
    }
  }

  private applyHealth(health: HealthResponse): void {
    this.hasBoundaries = health.has_boundaries;
    this.els.health.innerHTML =
      `<span data-value="${rawValue(health.listings)}">${fmtInt(health.listings)} listings</span>` +
      ` · dataset <code>${escapeHtml(health.dataset_hash.slice(0, 12))}</code>`;
    const current = this.state.model;
    this.els.model.innerHTML =
      '<option value="">(none)</option>' +
      health.models
        .map((m) => `<option value="${escapeHtml(m)}">${escapeHtml(m)}</option>`)
        .join('');
    this.state = clampState({ ...this.state, model: current });
    this.syncControls();
  }

  private async loadListings(): Promise<void> {
    try {
      const page = await this.api.fetchSaleListings();
      for (const item of page.items) this.listingById.set(item.id, item);
      this.renderTable();
    } catch (err) {
      if (err instanceof RequestSuperseded) return;
      // breakdown details are a nice-to-have; the table works without them
    }
  }

  async refresh(): Promise<void> {
    const jobs: Promise<void>[] = [this.loadIndex()];
    if (this.hasBoundaries) jobs.push(this.loadGeojson());
    if (this.state.model) {
      jobs.push(this.loadRanking());
    } else {
      this.lastRanking = null;
      this.renderTable();
    }
    await Promise.all(jobs);
  }

  private async loadIndex(): Promise<void> {
    try {
      this.lastIndex = await this.api.fetchIndex(this.state);
      this.exitStale();
      this.renderMap();
    } catch (err) {
      this.handleError(err, 'index', () => void this.loadIndex());
    }
  }

  private async loadGeojson(): Promise<void> {
    try {
      this.lastGeojson = await this.api.fetchIndexGeojson(this.state);
      this.exitStale();
      this.renderMap();
    } catch (err) {
      if (err instanceof ApiError && err.code === 'no_boundaries') {
        this.hasBoundaries = false;
        this.lastGeojson = null;
        this.renderMap();
        return;
      }
      this.handleError(err, 'map', () => void this.loadGeojson());
    }
  }

  private async loadRanking(): Promise<void> {
    try {
      this.lastRanking = await this.api.fetchRanking(this.state);
      this.exitStale();
      this.renderTable();
    } catch (err) {
      this.lastRanking = null;
      this.renderTable();
      this.handleError(err, 'ranking', () => void this.loadRanking());
    }
  }

  private renderMap(): void {
    renderChoropleth(this.els.mapHost, {
      geojson: this.lastGeojson,
      index: this.lastIndex,
      bucket: this.state.bucket,
    });
  }

  private renderTable(): void {
    renderRankingTable(
      this.els.tableHost,
      {
        ranking: this.lastRanking,
        modelId: this.state.model,
        sortDir: this.state.sortDir,
        page: this.state.page,
        pinned: this.state.pinned,
        listingById: this.listingById,
      },
      {
        onSort: (dir) => this.updateView({ sortDir: dir, page: 1 }),
        onPage: (page) => this.updateView({ page }),
        onPin: (id) => this.updateView({ pinned: id }),
      }
    );
  }
}
