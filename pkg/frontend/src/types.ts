/** Wire types of the chartpipe HTTP service, mirrored verbatim. */

export type ColumnType = "nominal" | "quantitative" | "temporal";

export interface TableColumn {
  name: string;
  type: ColumnType;
}

export interface TableInfo {
  table_id: string;
  name: string;
  columns: TableColumn[];
  n_rows: number;
}

export interface SessionInfo {
  session_id: string;
  table_id: string;
  created_at: string;
}

export interface StepAnswer {
  step: number;
  title: string;
  answer: string;
}

/** The eight spec slots; column names keep the table's spelling. */
export interface SpecSlots {
  mark: string;
  x: string;
  x_aggregation: string;
  y: string;
  y_aggregation: string;
  color: string;
  filter: string;
  sort: string;
}

/** Vega-Lite documents are opaque here; the UI never edits them. */
export type VegaLiteDoc = Record<string, unknown>;

export interface ResultPayload {
  rank: number;
  score: number;
  steps: StepAnswer[];
  spec: SpecSlots;
  vegalite: VegaLiteDoc;
}

export interface ResultsEnvelope {
  session_id: string;
  table_id: string;
  utterance: string;
  results: ResultPayload[];
}

export interface HealthInfo {
  status: string;
  sessions: number;
  tables: number;
}

/** PATCH body for config mode; only changed keys are sent. */
export interface ConfigPatch {
  mark?: string;
  x?: string;
  y?: string;
  color?: string;
  aggregations?: { x?: string; y?: string };
  filter?: string;
  sort?: string;
}

export const STEP_TITLES: readonly string[] = [
  "Select Columns",
  "Filter Rows",
  "Add Aggregations",
  "Choose Mark",
  "Determine Encoding",
  "Add Sort",
];
