/** Payload shapes of the session service (mirrors its JSON responses). */

export interface HyperParams {
  mu: number;
  h: number;
  tau: number;
  n: number;
}

export interface SessionSummary {
  id: string;
  created_at: string;
  names: string[];
  n: number;
  nu: number;
  declared_nu: number;
  mode: string;
  excluded_names: string[];
  hyper: HyperParams;
  n_models: number;
  correlation?: number[][];
}

export interface Block {
  indices: number[];
  names: string[];
}

export interface BlocksPayload {
  rho: number;
  blocks: Block[];
}

export interface TestResponse {
  tested: number[];
  tested_names: string[];
  po: number;
  log_po: number;
  p_unadj: number;
  p_adj: number;
  p_adj_raw: number;
  fdr_bound: number | null;
  rejected_bayes: boolean;
  rejected_fwer: boolean;
  tau: number;
  alpha: number;
  declared_nu: number;
  mode: string;
  excluded_names: string[];
  admissible: boolean;
  grouping: BlocksPayload;
}

export interface ServiceError {
  error: string;
  detail: string;
  block?: Block;
  grouping?: BlocksPayload;
}

export interface EstimateRow {
  variable: number;
  name: string;
  classical_mean: number;
  classical_se: number;
  bayes_mean: number;
  bayes_se: number;
  inclusion_prob: number;
  classical_interval: [number, number];
  credibility_interval: [number, number];
}

export interface EstimatesPayload {
  estimates: EstimateRow[];
  alpha: number;
  tau: number;
}
