// Payload shapes of the warehouse HTTP API. Field names mirror the server's
// documented JSON exactly; every number the UI shows comes from these
// payloads verbatim.

export interface AttributeInfo {
  name: string;
  type: string;
}

export interface LevelInfo {
  id: string;
  attributes: AttributeInfo[];
  members: string[];
}

export interface DimensionInfo {
  id: string;
  path: string;
  levels: LevelInfo[];
}

export interface ModelInfo {
  dimensions: DimensionInfo[];
  facts: {
    id: string;
    path: string;
    measures: { id: string; type: string }[];
    dimensions: string[];
    rows: number;
  };
  version: number;
  validation: ValidationReport;
}

export interface AxisInfo {
  dimension: string;
  level: string;
  members: string[];
}

export interface CellInfo {
  coordinate: string[];
  sum: number;
  count: number;
  min: number;
  max: number;
  value: number;
  label?: string;
}

export interface CubeRendering {
  id: string;
  stale: boolean;
  measure: string;
  aggregate: string;
  axes: AxisInfo[];
  filters: { dimension: string; level: string; members: string[] }[];
  cells: CellInfo[];
  cell_total: number;
  cell_offset: number;
}

export interface Finding {
  severity: string;
  kind: string;
  message: string;
  where: string;
}

export interface ValidationReport {
  ok: boolean;
  findings: Finding[];
}

export interface ApplyResult extends ValidationReport {
  applied: boolean;
  change?: {
    dimension: string;
    source_level: string;
    new_level: string;
    groups: Record<string, string[]>;
  };
  version?: number;
}

export interface ConditionTerm {
  attr: string;
  op: "in" | "not-in" | "=";
  values?: string[];
  value?: string;
}

export interface RuleBody {
  dimension?: string;
  structure: {
    source_level: string;
    condition_attributes: string[];
    target_level: string;
    target_attributes: string[];
  };
  data: { condition: ConditionTerm[]; target: Record<string, string> }[];
}

export interface DendrogramNode {
  member?: string;
  children?: DendrogramNode[];
  height: number;
}

export interface QualityRow {
  k: number;
  within: number;
  between: number;
  total: number;
  ratio: number;
}

export interface OpacResult {
  dimension: string;
  linkage: string;
  members: string[];
  dendrogram: DendrogramNode;
  quality: QualityRow[];
  partition?: string[][];
  partition_quality?: QualityRow;
  ruleset?: { json: RuleBody; text: string };
}

export interface HomogeneityInfo {
  value: number;
  cells: number;
  full_cells: number;
}

export interface McaResult {
  eigenvalues: number[];
  test_values: { dimension: string; level: string; member: string; values: number[] }[];
  untestable: string[][];
  homogeneity_before: HomogeneityInfo;
  homogeneity_after: HomogeneityInfo;
  arranged_cube: CubeRendering;
}

export interface MinedRule {
  antecedent: string[][];
  consequent: string[][];
  support: number;
  confidence: number;
  lift: number;
  loevinger: number | null;
}

export interface RulesMiningResult {
  min_support: number;
  min_confidence: number;
  frequent: { items: string[][]; support: number }[];
  rules: MinedRule[];
}

export interface ApiErrorBody {
  error: { code: string; message: string; where?: string };
}
