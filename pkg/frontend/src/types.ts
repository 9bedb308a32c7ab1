/**
 * Wire types for the yieldfinder HTTP API.
 *
 * Field names deliberately match the JSON payloads one to one; the
 * dashboard never reshapes server numbers, it only displays them.
 */

export interface TermsDto {
  monthly_rate: number;
  months: number;
  transaction_cost_rate: number;
  down_payment_fraction: number;
}

export interface IndexCellDto {
  neighborhood: string;
  bucket: string;
  n_rent: number;
  n_sale: number;
  mean_rent: number | null;
  mean_mortgage: number | null;
  index: number | null;
}

export interface IndexResponse {
  terms: TermsDto;
  cells: IndexCellDto[];
  neighborhood_averages: Record<string, number>;
}

export interface HealthResponse {
  status: string;
  listings: number;
  models: string[];
  dataset_hash: string;
  has_boundaries: boolean;
}

export interface RankingRowDto {
  id: string;
  neighborhood: string;
  price: number;
  size: number;
  predicted_rent: number;
  monthly_mortgage: number;
  implied_index: number;
}

export interface RankingResponse {
  model: string;
  terms: TermsDto;
  rows: RankingRowDto[];
  skipped: number;
}

/** One sale listing as served by /api/listings, used for the pinned-row breakdown. */
export type ListingRecord = Record<string, unknown> & { id: string };

export interface ListingsResponse {
  items: ListingRecord[];
  page: number;
  page_size: number;
  total: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export interface BoundaryFeature {
  type: 'Feature';
  properties: Record<string, unknown>;
  geometry: {
    type: 'Polygon' | 'MultiPolygon';
    coordinates: unknown;
  };
}

export interface IndexGeojson {
  type: 'FeatureCollection';
  features: BoundaryFeature[];
  unknown_neighborhoods?: string[];
}
