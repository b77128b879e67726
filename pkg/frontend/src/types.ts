/** Wire types mirroring the gateway's JSON API. */

export interface LevelScheme {
  names: string[];
  percentiles: number[];
  cuts: number[];
}

export interface SchemeResponse {
  rel: LevelScheme | null;
  aes: LevelScheme | null;
}

export interface HealthResponse {
  status: string;
  gallery_n: number;
  dim: number;
  levels: { rel: string[]; aes: string[] };
}

export interface Condition {
  rel: string;
  aes: string;
}

export interface Candidate {
  text: string;
  suffix: string;
  source: string;
  condition: Condition;
  matched_record_id: string | null;
  exact_condition_match: boolean;
}

export interface Hit {
  id: string;
  score: number;
  caption: string;
  aes: number | null;
  rel: number | null;
  rel_level: string | null;
  aes_level: string | null;
}

export interface CompleteRequest {
  prefix: string;
  rel: string;
  aes: string;
  method: string;
  k: number;
}

export interface CompleteResponse {
  candidates: Candidate[];
}

export interface RetrieveRequest {
  query_text: string;
  eta: number;
}

export interface RetrieveResponse {
  hits: Hit[];
}

export interface GridRequest {
  prefixes: string[];
  method: string;
  eta: number;
}

export interface GridCell {
  condition: Condition | null;
  k: number | null;
  ave_aes: number;
  ave_rel: number;
  n_items: number;
  n_skipped: number;
}

export interface GridResponse {
  method: string;
  rel_names: string[];
  aes_names: string[];
  cells: GridCell[];
}

/** A saved condition -> results snapshot for side-by-side comparison. */
export interface Pin {
  rel: string;
  aes: string;
  candidateText: string;
  hits: Hit[];
}
