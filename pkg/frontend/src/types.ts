// Wire types for the review-service HTTP API (v1). Field names mirror the
// service documents exactly; nothing here is invented client-side.

export type Stage = 'annotator' | 'senior';
export type TaskStatus = 'pending' | 'claimed' | 'approved' | 'rejected' | 'edited';

export interface ReviewTask {
  task_id: string;
  case_id: string;
  graph_id: string;
  stage: Stage;
  status: TaskStatus;
  reviewer_id: string;
  decision_note: string;
  edit_log: EditOp[];
  derived_graph_id: string;
  created_at: string;
  claimed_at: string;
  decided_at: string;
  lease_expires_at: string;
}

export type NodeKind = 'Entity' | 'Evidence' | 'Event' | 'State' | 'Policy' | 'Decision';
export type Coupling = 'Strong' | 'Weak';

export type AttrValue = string | number | boolean;

export interface GraphNode {
  node_id: string;
  kind: NodeKind;
  label: string;
  attributes: Record<string, AttrValue>;
  coupling: Coupling;
}

export interface GraphEdge {
  edge_id: string;
  src: string;
  dst: string;
  relation: string;
  attributes: Record<string, AttrValue>;
}

export interface GraphDoc {
  schema_version: string;
  graph_id: string;
  base_case_id: string;
  provenance: { type: string; parent_graph_id?: string; edit_log?: EditOp[] };
  scene_dims: Record<string, string>;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface EvidenceAssetDoc {
  asset_id: string;
  medium: string;
  uri: string;
  integrity_hash: string;
  extracted_text?: string;
  captured_at?: string;
}

export interface CaseDoc {
  schema_version: string;
  case_id: string;
  narrative: string;
  evidence_assets: EvidenceAssetDoc[];
  metadata: Record<string, AttrValue>;
  history: { timestamp: string; actor: string; text: string }[];
  policy_clauses: { clause_id: string; title: string; body: string }[];
}

export type EditOp =
  | { op: 'set_attribute'; target: 'node' | 'edge'; target_id: string; key: string; value: AttrValue | null }
  | { op: 'set_dim'; dim: string; value: string }
  | { op: 'add_node'; node: GraphNode }
  | { op: 'remove_node'; node_id: string }
  | { op: 'add_edge'; edge: GraphEdge }
  | { op: 'remove_edge'; edge_id: string };

export interface Violation {
  rule_id: string;
  severity: 'blocking' | 'advisory';
  message: string;
  node_ids: string[];
  edge_ids: string[];
}

export interface ViolationsResponse {
  schema_version: string;
  graph_id: string;
  ruleset_id: string;
  violations: Violation[];
}

export interface AuditEntry {
  seq: number;
  key: string;
  kind: string;
  written_at: string;
  refs: string[];
}

export interface ApiErrorBody {
  schema_version: string;
  error_code: string;
  message: string;
  details: Record<string, unknown>;
}

export type Decision = 'approve' | 'reject' | 'edit';

export interface Session {
  reviewerId: string;
  role: Stage;
  token: string;
}
