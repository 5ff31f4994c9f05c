/** Payload shapes of the session service, mirrored verbatim. */

export interface UnitNode {
  row: number;
  col: number;
  label: string;
  weight: number[];
  qe: number;
  sample_ids: string[];
  child: MapNode | null;
}

export interface MapNode {
  path: string;
  rows: number;
  cols: number;
  units: UnitNode[];
}

export interface TreeExport {
  format: string;
  dim: number;
  n_samples: number;
  qe_layer0: number;
  root: MapNode;
}

export interface TreeResponse {
  session_id: string;
  revision: number;
  tree: TreeExport;
  dominant_groups: Record<string, string>;
}

export interface ExpandResponse {
  revision: number;
  changed_paths: string[];
}

export interface RecordPayload {
  id: string;
  name: string;
  lat: number;
  lon: number;
  evaluation: number;
  comment: string;
  group: string;
  image_sim: number;
  tfidf: number;
}

export interface UnitDetail {
  path: string;
  label: string;
  count: number;
  qe: number;
  weight?: number[];
  sample_ids: string[];
  records: RecordPayload[];
  dominant_group?: string | null;
  has_child: boolean;
}

/** Thrown by the API client on a 409 (another mutation in flight). */
export class ConflictError extends Error {
  constructor(public revision: number) {
    super(`mutation conflict at revision ${revision}`);
    this.name = "ConflictError";
  }
}
