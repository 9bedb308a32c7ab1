/**
 * SVG choropleth of the rental-yield index.
 *
 * Fill colors come straight from the index properties the server writes
 * onto each boundary feature (index_<bucket> / index_avg); the client
 * projects coordinates and picks colors but never computes an index.
 */

import type { IndexCellDto, IndexGeojson, IndexResponse } from './types';
import { colorForIndex, legendStops, MISSING_COLOR, SCALE_CENTER, SCALE_MAX, SCALE_MIN } from './scale';
import { fmtIndex, fmtInt, rawValue } from './format';
import { escapeHtml } from './toast';
import { API_LABEL_BY_SLUG } from './state';

type Position = [number, number];
type Ring = Position[];

const VIEW_W = 720;
const VIEW_H = 520;
const PAD = 18;

const SVG_NS = 'http://www.w3.org/2000/svg';

const isPosition = (value: unknown): value is Position =>
  Array.isArray(value) &&
  value.length >= 2 &&
  typeof value[0] === 'number' &&
  typeof value[1] === 'number';

const asRing = (value: unknown): Ring | null => {
  if (!Array.isArray(value)) return null;
  const ring = value.filter(isPosition);
  return ring.length >= 3 ? ring : null;
};

/** Outer + hole rings of a Polygon or MultiPolygon, flattened. */
export const ringsOf = (geometry: { type: string; coordinates: unknown }): Ring[] => {
  const rings: Ring[] = [];
  const push = (candidate: unknown) => {
    const ring = asRing(candidate);
    if (ring) rings.push(ring);
  };
  if (geometry.type === 'Polygon' && Array.isArray(geometry.coordinates)) {
    for (const ring of geometry.coordinates) push(ring);
  } else if (geometry.type === 'MultiPolygon' && Array.isArray(geometry.coordinates)) {
    for (const polygon of geometry.coordinates) {
      if (!Array.isArray(polygon)) continue;
      for (const ring of polygon) push(ring);
    }
  }
  return rings;
};

const displayName = (props: Record<string, unknown>): string => {
  for (const key of ['neighborhood', 'name']) {
    const value = props[key];
    if (typeof value === 'string' && value.trim()) return value.trim();
  }
  return '?';
};

const normName = (name: string): string => name.trim().toLowerCase();

/** Value of the server-written index property for the selected bucket. */
export const indexProperty = (
  props: Record<string, unknown>,
  bucket: string
): number | null => {
  const key = bucket === 'avg' ? 'index_avg' : `index_${bucket}`;
  const value = props[key];
  return typeof value === 'number' && Number.isFinite(value) ? value : null;
};

export interface CellCounts {
  nRent: number;
  nSale: number;
}

/**
 * Sample counts per neighborhood for the hover card. Bucket view uses
 * the matching cell; the average view sums counts across buckets.
 */
export const countsByNeighborhood = (
  cells: IndexCellDto[],
  bucket: string
): Map<string, CellCounts> => {
  const wanted = bucket === 'avg' ? null : API_LABEL_BY_SLUG[bucket];
  const out = new Map<string, CellCounts>();
  for (const cell of cells) {
    if (wanted !== null && cell.bucket !== wanted) continue;
    const key = normName(cell.neighborhood);
    const prev = out.get(key) ?? { nRent: 0, nSale: 0 };
    out.set(key, { nRent: prev.nRent + cell.n_rent, nSale: prev.nSale + cell.n_sale });
  }
  return out;
};

interface Projector {
  x(lon: number): number;
  y(lat: number): number;
}

const makeProjector = (rings: Ring[]): Projector => {
  let minLon = Infinity;
  let maxLon = -Infinity;
  let minLat = Infinity;
  let maxLat = -Infinity;
  for (const ring of rings) {
    for (const [lon, lat] of ring) {
      minLon = Math.min(minLon, lon);
      maxLon = Math.max(maxLon, lon);
      minLat = Math.min(minLat, lat);
      maxLat = Math.max(maxLat, lat);
    }
  }
  const spanLon = maxLon - minLon || 1;
  const spanLat = maxLat - minLat || 1;
  const scale = Math.min((VIEW_W - 2 * PAD) / spanLon, (VIEW_H - 2 * PAD) / spanLat);
  const ox = (VIEW_W - spanLon * scale) / 2;
  const oy = (VIEW_H - spanLat * scale) / 2;
  return {
    x: (lon) => ox + (lon - minLon) * scale,
    y: (lat) => VIEW_H - oy - (lat - minLat) * scale,
  };
};

const pathData = (rings: Ring[], proj: Projector): string =>
  rings
    .map((ring) => {
      const pts = ring.map(([lon, lat]) => `${proj.x(lon).toFixed(2)},${proj.y(lat).toFixed(2)}`);
      return `M${pts.join('L')}Z`;
    })
    .join('');

const legendHtml = (): string => {
  const swatches = legendStops(7)
    .map(
      (stop) =>
        `<span class="legend-swatch" style="background:${stop.color}" title="${stop.value.toFixed(2)}"></span>`
    )
    .join('');
  return `
    <span class="legend-label">${SCALE_MIN.toFixed(1)}</span>
    ${swatches}
    <span class="legend-label">${SCALE_MAX.toFixed(1)}</span>
    <span class="legend-center">center ${SCALE_CENTER.toFixed(1)} (rent = mortgage)</span>
    <span class="legend-swatch" style="background:${MISSING_COLOR}"></span>
    <span class="legend-label">no data</span>
  `;
};

const hoverHtml = (
  name: string,
  value: number | null,
  counts: CellCounts | undefined
): string => {
  const indexPart =
    value === null
      ? '<span class="tt-index" data-value="null">no data</span>'
      : `<span class="tt-index" data-value="${rawValue(value)}">${fmtIndex(value)}</span>`;
  const nRent = counts?.nRent ?? 0;
  const nSale = counts?.nSale ?? 0;
  return `
    <strong class="tt-name">${escapeHtml(name)}</strong><br>
    index: ${indexPart}<br>
    <span class="tt-counts">${fmtInt(nRent)} rent / ${fmtInt(nSale)} sale listings</span>
  `;
};

export interface ChoroplethInputs {
  geojson: IndexGeojson | null;
  index: IndexResponse | null;
  bucket: string;
}

/**
 * Rebuild the map panel in place. `host` owns a banner slot, the svg
 * and a shared tooltip element; everything is replaced per render.
 */
export const renderChoropleth = (host: HTMLElement, inputs: ChoroplethInputs): void => {
  const { geojson, index, bucket } = inputs;
  host.replaceChildren();

  const cells = index?.cells ?? [];
  if (index !== null && cells.length === 0) {
    const banner = document.createElement('div');
    banner.className = 'banner banner-empty';
    banner.textContent = 'No index cells for these settings; nothing to color.';
    host.appendChild(banner);
  }

  if (geojson === null) {
    const note = document.createElement('div');
    note.className = 'map-missing';
    note.textContent = 'No neighborhood boundaries on the server; map unavailable.';
    host.appendChild(note);
    return;
  }

  const features = geojson.features.filter((f) => ringsOf(f.geometry).length > 0);
  const allRings = features.flatMap((f) => ringsOf(f.geometry));
  if (allRings.length === 0) {
    const note = document.createElement('div');
    note.className = 'map-missing';
    note.textContent = 'Boundary file contains no drawable polygons.';
    host.appendChild(note);
    return;
  }
  const proj = makeProjector(allRings);
  const counts = countsByNeighborhood(cells, bucket);

  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${VIEW_W} ${VIEW_H}`);
  svg.setAttribute('class', 'map-svg');
  svg.setAttribute('role', 'img');

  const tooltip = document.createElement('div');
  tooltip.className = 'map-tooltip';
  tooltip.hidden = true;

  for (const feature of features) {
    const name = displayName(feature.properties);
    const value = indexProperty(feature.properties, bucket);
    const path = document.createElementNS(SVG_NS, 'path');
    path.setAttribute('d', pathData(ringsOf(feature.geometry), proj));
    path.setAttribute('fill', colorForIndex(value));
    path.setAttribute('stroke', '#5a5a5a');
    path.setAttribute('stroke-width', '0.8');
    path.setAttribute('class', 'map-area');
    path.setAttribute('data-neighborhood', name);
    path.setAttribute('data-value', rawValue(value));
    path.addEventListener('mouseenter', () => {
      tooltip.innerHTML = hoverHtml(name, value, counts.get(normName(name)));
      tooltip.hidden = false;
    });
    path.addEventListener('mousemove', (ev) => {
      const rect = host.getBoundingClientRect();
      tooltip.style.left = `${ev.clientX - rect.left + 12}px`;
      tooltip.style.top = `${ev.clientY - rect.top + 12}px`;
    });
    path.addEventListener('mouseleave', () => {
      tooltip.hidden = true;
    });
    svg.appendChild(path);
  }

  const legend = document.createElement('div');
  legend.className = 'map-legend';
  legend.innerHTML = legendHtml();

  host.appendChild(svg);
  host.appendChild(legend);
  host.appendChild(tooltip);
};
