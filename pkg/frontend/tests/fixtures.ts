/** Canned service payloads shared by the view and app tests. */

import type {
  HealthResponse,
  IndexCellDto,
  IndexGeojson,
  IndexResponse,
  ListingsResponse,
  RankingResponse,
  RankingRowDto,
} from '../src/types';

export const PROSPERIDAD_INDEX = 0.8673024968131309;
export const ACACIAS_INDEX = 1.2183817062445;

export const health = (): HealthResponse => ({
  status: 'ok',
  listings: 44,
  models: ['forest-v1', 'ols-v1'],
  dataset_hash: 'abc123def4567890abcd',
  has_boundaries: true,
});

export const indexCells = (): IndexCellDto[] => [
  {
    neighborhood: 'prosperidad',
    bucket: '60-90',
    n_rent: 12,
    n_sale: 9,
    mean_rent: 1371.95,
    mean_mortgage: 1581.86,
    index: PROSPERIDAD_INDEX,
  },
  {
    neighborhood: 'prosperidad',
    bucket: '30-60',
    n_rent: 4,
    n_sale: 0,
    mean_rent: 880.5,
    mean_mortgage: null,
    index: null,
  },
  {
    neighborhood: 'acacias',
    bucket: '60-90',
    n_rent: 7,
    n_sale: 11,
    mean_rent: 1410.0,
    mean_mortgage: 1157.27,
    index: ACACIAS_INDEX,
  },
];

export const indexResponse = (params?: URLSearchParams): IndexResponse => ({
  terms: {
    monthly_rate: Number(params?.get('rate') ?? 0.0016666666666666668),
    months: Number(params?.get('months') ?? 360),
    transaction_cost_rate: Number(params?.get('tcost') ?? 0.067),
    down_payment_fraction: Number(params?.get('down') ?? 0.3),
  },
  cells: indexCells(),
  neighborhood_averages: { prosperidad: PROSPERIDAD_INDEX, acacias: ACACIAS_INDEX },
});

const square = (lon: number, lat: number): number[][][] => [
  [
    [lon, lat],
    [lon + 0.02, lat],
    [lon + 0.02, lat + 0.02],
    [lon, lat + 0.02],
    [lon, lat],
  ],
];

const nullBuckets = {
  index_30_60: null,
  index_60_90: null,
  index_90_120: null,
  index_120_150: null,
  index_150_up: null,
  index_avg: null,
};

export const indexGeojson = (): IndexGeojson => ({
  type: 'FeatureCollection',
  features: [
    {
      type: 'Feature',
      properties: {
        neighborhood: 'Prosperidad',
        ...nullBuckets,
        index_60_90: PROSPERIDAD_INDEX,
        index_avg: PROSPERIDAD_INDEX,
      },
      geometry: { type: 'Polygon', coordinates: square(-3.68, 40.44) },
    },
    {
      type: 'Feature',
      properties: {
        neighborhood: 'Acacias',
        ...nullBuckets,
        index_60_90: ACACIAS_INDEX,
        index_avg: ACACIAS_INDEX,
      },
      geometry: { type: 'Polygon', coordinates: square(-3.71, 40.4) },
    },
    {
      type: 'Feature',
      properties: { neighborhood: 'Chamberi', ...nullBuckets },
      geometry: { type: 'Polygon', coordinates: square(-3.7, 40.43) },
    },
  ],
});

export const rankingRows = (): RankingRowDto[] => {
  const indexes = [1.93, 1.71, 1.55, 1.42, 1.31, 1.18, 1.04, 0.93, 0.81, 0.72, 0.61, 0.44];
  return indexes.map((implied, i) => ({
    id: `L${String(i + 1).padStart(2, '0')}`,
    neighborhood: i % 2 === 0 ? 'acacias' : 'prosperidad',
    price: 150000 + i * 10000,
    size: 45 + i * 5,
    predicted_rent: 905.5 + i * 37.25,
    monthly_mortgage: 601.75 + i * 23.5,
    implied_index: implied,
  }));
};

export const rankingResponse = (params?: URLSearchParams): RankingResponse => ({
  model: params?.get('model') ?? 'forest-v1',
  terms: indexResponse(params).terms,
  rows: rankingRows(),
  skipped: 3,
});

export const listingsResponse = (): ListingsResponse => {
  const items = rankingRows().map((row, i) => ({
    id: row.id,
    operation: 'sale',
    neighborhood: row.neighborhood,
    price: row.price,
    size: row.size,
    rooms: 1 + (i % 4),
    bathrooms: 1 + (i % 2),
    floor: i % 6,
    elevator: i % 2 === 0,
  }));
  return { items, page: 1, page_size: 500, total: items.length };
};

export const makeRoutes = () => ({
  '/api/health': () => health(),
  '/api/index': (params: URLSearchParams) => indexResponse(params),
  '/api/index.geojson': () => indexGeojson(),
  '/api/yield/ranking': (params: URLSearchParams) => rankingResponse(params),
  '/api/listings': () => listingsResponse(),
});
