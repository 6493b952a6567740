/** The mutations a view may request; implemented over the gateway client. */

import type { EntitySource, Relation, ScenarioParams } from "./protocol";
import type { Point } from "./hex";

export interface TesseraChanges {
  name?: string;
  icon?: string;
  simulator_id?: string;
  model?: string;
  sources?: EntitySource[];
}

export interface ConnectionChanges {
  source?: string;
  target?: string;
  attr_pairs?: [string, string][];
  relation?: Relation;
  delayed?: boolean;
  initial_values?: Record<string, unknown>;
}

export interface Actions {
  addSimulator(registryKey: string): Promise<void>;
  updateSimulator(id: string, changes: { display_name?: string; init_params?: Record<string, unknown> }): Promise<void>;
  removeSimulator(id: string): Promise<void>;
  addTessera(simulatorId: string, model: string, position: Point): Promise<void>;
  updateTessera(id: string, changes: TesseraChanges): Promise<void>;
  removeTessera(id: string): Promise<void>;
  addConnection(source: string, target: string): Promise<void>;
  updateConnection(id: string, changes: ConnectionChanges): Promise<void>;
  removeConnection(id: string): Promise<void>;
  setPosition(id: string, x: number, y: number): Promise<void>;
  setParams(changes: Partial<ScenarioParams>): Promise<void>;
  saveScenario(path?: string): Promise<void>;
  loadScenario(path: string): Promise<void>;
  startRun(): Promise<void>;
  stopRun(): Promise<void>;
}
