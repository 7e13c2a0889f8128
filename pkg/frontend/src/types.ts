/** API schema (schema_version 1) exchanged with the report server. */

export type Label = "satisfactory" | "unsatisfactory";
export type Highlight = "good" | "bad" | "neutral";

export interface TreeParams {
  max_depth: number;
  min_samples_leaf: number;
  min_gain: number;
  excluded_features: string[];
  seed: number;
}

export interface SplitNode {
  id: number;
  kind: "split";
  feature: string;
  op: "eq" | "le";
  threshold: number;
  gain: number;
  samples: [number, number];
  left: TreeNode;
  right: TreeNode;
}

export interface LeafNode {
  id: number;
  kind: "leaf";
  label: Label;
  samples: [number, number];
  instance_ids: string[];
}

export type TreeNode = SplitNode | LeafNode;

export interface TreeDoc {
  root: TreeNode;
  feature_names: string[];
  params: TreeParams;
}

export interface CvResult {
  fold_accuracies: number[];
  mean_accuracy: number;
  fold_assignment: Record<string, number>;
}

export interface Ranking {
  entries: [string, number][];
  single_class: boolean;
}

export interface Spec {
  view_kind: "content" | "component";
  data_source: "crowd" | "system";
  clustering_source: "crowd" | "system";
  k: number;
  merges: number[][];
  good_threshold: number;
  bad_threshold: number;
  tree: TreeParams;
}

export interface ClusterBlock {
  cluster_id: number;
  label: string;
  size: number;
  member_ids: string[];
  top_terms: string[];
  satisfaction_rate: number;
  human_agreement: number | null;
  highlight: Highlight;
  ranking: Ranking;
  tree: TreeDoc | null;
  cv: CvResult | null;
  skip_reason: string | null;
}

export interface Report {
  schema_version: number;
  kind: "performance_report";
  config_hash: string;
  dataset_digest: string;
  provenance: string;
  weighting: string;
  spec: Spec;
  generic: { tree: TreeDoc; cv: CvResult; ranking: Ranking };
  clusters: ClusterBlock[];
  all_clusters_accuracy: number;
}

export interface ClusterSummary {
  cluster_id: number;
  label: string;
  size: number;
  top_terms: string[];
  satisfaction_rate: number;
  human_agreement: number | null;
  cv_accuracy: number | null;
  highlight: Highlight;
  skip_reason: string | null;
}

export interface ClustersResponse {
  schema_version: number;
  config_hash: string;
  clusters: ClusterSummary[];
}

export interface LeafInstance {
  id: string;
  label: Label;
  features: Record<string, number>;
}

export interface LeafInstancesResponse {
  schema_version: number;
  tree: string;
  leaf: number;
  instances: LeafInstance[];
}

export interface DendrogramMerge {
  left: number;
  right: number;
  distance: number;
  size: number;
}

export interface DendrogramResponse {
  schema_version: number;
  leaves: string[];
  merges: DendrogramMerge[];
}

export interface WhatIfDelta {
  excluded_features: string[];
  merges: number[][];
  k: number | null;
}

export interface PendingResponse {
  status: "pending";
  config_hash: string;
}
