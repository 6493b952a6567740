/** Wire types of the gateway websocket API and the scenario document. */

export interface NodePosition {
  x: number;
  y: number;
}

export interface SimulatorSpec {
  id: string;
  registry_key: string;
  display_name: string;
  init_params: Record<string, unknown>;
}

export type EntitySource =
  | { kind: "create_fixed"; count: number; create_params: Record<string, unknown> }
  | { kind: "create_matching"; size_of: string; create_params: Record<string, unknown> }
  | {
      kind: "select";
      id_pattern: string;
      predicates: { key: string; op: "eq" | "ne" | "lt" | "le" | "gt" | "ge"; value: unknown }[];
    };

export interface TesseraSpec {
  id: string;
  name: string;
  icon: string;
  simulator_id: string;
  model: string;
  sources: EntitySource[];
}

export type CompositionStep = { connection: string; direction: "forward" | "backward" };

export type Relation =
  | { kind: "empty" }
  | { kind: "one_to_one" }
  | { kind: "random"; allow_repeat: boolean; seed: number }
  | { kind: "many_to_one" }
  | { kind: "manual"; pairs: [string, string][] }
  | { kind: "composition"; path: CompositionStep[] };

export interface ConnectionSpec {
  id: string;
  source: string;
  target: string;
  attr_pairs: [string, string][];
  relation: Relation;
  delayed: boolean;
  initial_values: Record<string, unknown>;
}

export interface ScenarioParams {
  end_time: number;
  real_time_factor: number | null;
  master_seed: number;
}

export interface Scenario {
  format_version: number;
  simulators: SimulatorSpec[];
  tesserae: TesseraSpec[];
  connections: ConnectionSpec[];
  params: ScenarioParams;
  layout: Record<string, NodePosition>;
}

export interface ModelMeta {
  create_params: { name: string; type: string; values?: unknown[]; unit?: string; doc: string }[];
  inputs: string[];
  outputs: string[];
}

export interface SimulatorMeta {
  step_size: number;
  models: Record<string, ModelMeta>;
}

export interface EntityItem {
  entity_id: string;
  model: string;
  extra_info: Record<string, unknown>;
  child: boolean;
  simulator_id: string;
}

export interface BakingProblem {
  element: string;
  phase: string;
  code: string;
  message: string;
  blocked_dependents: string[];
}

export interface ElementStateEntry {
  element: string;
  state: "ok" | "failed" | "blocked" | "unknown";
  blocked_on?: string;
}

export interface BakingReport {
  elements: ElementStateEntry[];
  simulators: { id: string; meta: SimulatorMeta | null }[];
  tesserae: { id: string; entities: EntityItem[] | null }[];
  connections: { id: string; pair_count: number | null; dropped_pairs: number | null }[];
  problems: BakingProblem[];
  validation: { element: string | null; code: string; message: string }[];
}

export interface RegistryEntry {
  key: string;
  display_name: string;
  icon: string;
  launch: { builtin?: string; command?: string[] };
}

export type RunEvent =
  | { event: "progress"; time: number; end_time: number }
  | { event: "log"; level: string; source: string; message: string }
  | { event: "done"; final_time: number }
  | { event: "error"; source: string; message: string };

export type NotificationKind = "registry" | "scenario_changed" | "baking_state" | "run_event";

export interface Notification {
  notify: NotificationKind;
  seq: number;
  payload: unknown;
}

export interface OkReply {
  req_id: number;
  ok: true;
  result: Record<string, unknown>;
}

export interface ErrReply {
  req_id: number;
  ok: false;
  error: string;
  message: string;
}

export type Reply = OkReply | ErrReply;

export interface StateSnapshot {
  scenario: Scenario;
  baking: BakingReport;
  run_status: "idle" | "running" | "stopping";
}

export function emptyScenario(): Scenario {
  return {
    format_version: 1,
    simulators: [],
    tesserae: [],
    connections: [],
    params: { end_time: 3600, real_time_factor: null, master_seed: 0 },
    layout: {},
  };
}
