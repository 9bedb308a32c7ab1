/**
 * Ranking table: sale listings ordered by the implied index the server
 * computed for the current what-if terms. Pure view code; rows arrive
 * fully scored and are only paged, re-ordered and pinned here.
 */

import type { ListingRecord, RankingResponse, RankingRowDto } from './types';
import { fmtIndex, fmtInt, fmtMoney, rawValue } from './format';
import { escapeHtml } from './toast';

export const PAGE_SIZE = 10;

export interface TableInputs {
  ranking: RankingResponse | null;
  modelId: string;
  sortDir: 'asc' | 'desc';
  page: number;
  pinned: string;
  listingById: Map<string, ListingRecord>;
}

export interface TableCallbacks {
  onSort(dir: 'asc' | 'desc'): void;
  onPage(page: number): void;
  onPin(id: string): void;
}

export const sortedRows = (rows: RankingRowDto[], dir: 'asc' | 'desc'): RankingRowDto[] => {
  const out = [...rows];
  out.sort((a, b) =>
    dir === 'desc' ? b.implied_index - a.implied_index : a.implied_index - b.implied_index
  );
  return out;
};

export const pageCount = (total: number): number => Math.max(Math.ceil(total / PAGE_SIZE), 1);

const cell = (raw: number, text: string, cls = ''): string =>
  `<td class="num ${cls}" data-value="${rawValue(raw)}">${text}</td>`;

const rowHtml = (row: RankingRowDto, pinned: boolean): string => `
  <tr class="rank-row${pinned ? ' pinned' : ''}" data-id="${escapeHtml(row.id)}">
    <td>${escapeHtml(row.id)}</td>
    <td>${escapeHtml(row.neighborhood)}</td>
    ${cell(row.price, fmtMoney(row.price), 'col-price')}
    ${cell(row.size, String(row.size), 'col-size')}
    ${cell(row.predicted_rent, fmtMoney(row.predicted_rent), 'col-rent')}
    ${cell(row.monthly_mortgage, fmtMoney(row.monthly_mortgage), 'col-mortgage')}
    ${cell(row.implied_index, fmtIndex(row.implied_index), 'col-index')}
  </tr>
`;

const isScalar = (v: unknown): v is string | number | boolean | null =>
  v === null || ['string', 'number', 'boolean'].includes(typeof v);

const breakdownHtml = (row: RankingRowDto, listing: ListingRecord | undefined): string => {
  const facts: string[] = [];
  if (listing) {
    const keys = Object.keys(listing)
      .filter((k) => k !== 'id' && isScalar(listing[k]))
      .sort();
    for (const key of keys) {
      const value = listing[key] as string | number | boolean | null;
      const shown = value === null ? 'n/a' : String(value);
      facts.push(
        `<div class="fact"><span class="fact-key">${escapeHtml(key)}</span>` +
          `<span class="fact-value" data-value="${escapeHtml(String(value))}">${escapeHtml(shown)}</span></div>`
      );
    }
  }
  return `
    <div class="pin-panel" data-id="${escapeHtml(row.id)}">
      <h3>Listing ${escapeHtml(row.id)} (${escapeHtml(row.neighborhood)})</h3>
      <div class="pin-scores">
        predicted rent <span data-value="${rawValue(row.predicted_rent)}">${fmtMoney(row.predicted_rent)}</span>,
        monthly mortgage <span data-value="${rawValue(row.monthly_mortgage)}">${fmtMoney(row.monthly_mortgage)}</span>,
        implied index <span data-value="${rawValue(row.implied_index)}">${fmtIndex(row.implied_index)}</span>
      </div>
      <div class="pin-facts">${facts.join('') || '<em>no stored features for this listing</em>'}</div>
    </div>
  `;
};

export const renderRankingTable = (
  host: HTMLElement,
  inputs: TableInputs,
  callbacks: TableCallbacks
): void => {
  const { ranking, modelId, sortDir, pinned, listingById } = inputs;
  host.replaceChildren();

  if (!modelId) {
    const empty = document.createElement('div');
    empty.className = 'banner banner-empty';
    empty.textContent = 'No model loaded. Pick a registered model to rank sale listings.';
    host.appendChild(empty);
    return;
  }
  if (ranking === null) return;

  if (ranking.rows.length === 0) {
    const empty = document.createElement('div');
    empty.className = 'banner banner-empty';
    empty.textContent = 'The model scored no sale listings under the current filters.';
    host.appendChild(empty);
    return;
  }

  const rows = sortedRows(ranking.rows, sortDir);
  const pages = pageCount(rows.length);
  const page = Math.min(Math.max(inputs.page, 1), pages);
  const visible = rows.slice((page - 1) * PAGE_SIZE, page * PAGE_SIZE);
  const arrow = sortDir === 'desc' ? '▾' : '▴';

  const wrap = document.createElement('div');
  wrap.className = 'rank-wrap';
  wrap.innerHTML = `
    <table class="rank-table">
      <thead>
        <tr>
          <th>id</th><th>neighborhood</th><th>price</th><th>m²</th>
          <th>predicted rent</th><th>mortgage</th>
          <th class="sortable" data-sort>implied index ${arrow}</th>
        </tr>
      </thead>
      <tbody>${visible.map((r) => rowHtml(r, r.id === pinned)).join('')}</tbody>
    </table>
    <div class="rank-footer">
      <button type="button" class="pg-prev" ${page <= 1 ? 'disabled' : ''}>&laquo; prev</button>
      <span class="pg-where">page ${page} of ${pages}</span>
      <button type="button" class="pg-next" ${page >= pages ? 'disabled' : ''}>next &raquo;</button>
      <span class="rank-skipped" data-value="${rawValue(ranking.skipped)}">
        ${fmtInt(ranking.skipped)} listings excluded (missing model features)
      </span>
    </div>
  `;

  wrap.querySelector<HTMLElement>('[data-sort]')?.addEventListener('click', () => {
    callbacks.onSort(sortDir === 'desc' ? 'asc' : 'desc');
  });
  wrap.querySelector<HTMLButtonElement>('.pg-prev')?.addEventListener('click', () => {
    callbacks.onPage(page - 1);
  });
  wrap.querySelector<HTMLButtonElement>('.pg-next')?.addEventListener('click', () => {
    callbacks.onPage(page + 1);
  });
  for (const tr of wrap.querySelectorAll<HTMLTableRowElement>('tbody tr')) {
    tr.addEventListener('click', () => {
      const id = tr.dataset.id ?? '';
      callbacks.onPin(id === pinned ? '' : id);
    });
  }

  host.appendChild(wrap);

  if (pinned) {
    const row = ranking.rows.find((r) => r.id === pinned);
    if (row) {
      const panel = document.createElement('div');
      panel.innerHTML = breakdownHtml(row, listingById.get(pinned));
      host.appendChild(panel.firstElementChild as HTMLElement);
    }
  }
};
