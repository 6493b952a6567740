/** Right panel: details of the selected element, or the run progress and log.
 *
 * For a tessera: name, simulator, icon, the entity-sources editor, the
 * resolved entities, and its incoming/outgoing connections. For a connection:
 * the attribute-pair editor (attribute names offered from the model metas) and
 * the relation editor, including a composition path builder. Edits commit on
 * change; the server remains the validator.
 */

import type { Actions } from "./actions";
import type { Store, ViewState } from "./store";
import type {
  ConnectionSpec,
  EntitySource,
  ModelMeta,
  Relation,
  Scenario,
  TesseraSpec,
} from "./protocol";

const RELATION_KINDS = ["empty", "one_to_one", "random", "many_to_one", "manual", "composition"] as const;
const SOURCE_KINDS = ["create_fixed", "create_matching", "select"] as const;

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labeled(label: string, input: HTMLElement): HTMLElement {
  const row = el("label", "field");
  row.appendChild(el("span", "field-label", label));
  row.appendChild(input);
  return row;
}

function textInput(value: string, onCommit: (v: string) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "text";
  input.value = value;
  input.addEventListener("change", () => onCommit(input.value));
  return input;
}

function numberInput(value: number, onCommit: (v: number) => void, step = 1): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "number";
  input.step = String(step);
  input.value = String(value);
  input.addEventListener("change", () => {
    const parsed = Number(input.value);
    if (Number.isFinite(parsed)) onCommit(parsed);
  });
  return input;
}

function select(options: string[], value: string, onCommit: (v: string) => void): HTMLSelectElement {
  const node = document.createElement("select");
  for (const option of options) {
    const item = document.createElement("option");
    item.value = option;
    item.textContent = option;
    if (option === value) item.selected = true;
    node.appendChild(item);
  }
  node.addEventListener("change", () => onCommit(node.value));
  return node;
}

function jsonEditor(value: unknown, onCommit: (v: Record<string, unknown>) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "text";
  input.className = "json-input";
  input.value = JSON.stringify(value);
  input.addEventListener("change", () => {
    try {
      const parsed = JSON.parse(input.value || "{}");
      if (parsed && typeof parsed === "object" && !Array.isArray(parsed)) {
        input.classList.remove("invalid");
        onCommit(parsed as Record<string, unknown>);
        return;
      }
    } catch {
      // fall through to the invalid marker
    }
    input.classList.add("invalid");
  });
  return input;
}

export class Details {
  constructor(private root: HTMLElement, private store: Store, private actions: Actions) {}

  render(state: ViewState): void {
    const root = this.root;
    root.innerHTML = "";

    const tabs = el("div", "tabs");
    const elementTab = el("button", state.detailsTab === "element" ? "tab active" : "tab", "Element");
    elementTab.addEventListener("click", () => this.store.showElementTab());
    const runTab = el("button", state.detailsTab === "run" ? "tab active" : "tab", "Run");
    runTab.addEventListener("click", () => this.store.showRunTab());
    tabs.append(elementTab, runTab);
    root.appendChild(tabs);

    if (state.detailsTab === "run") {
      this.renderRun(state);
      return;
    }
    const scenario = state.scenario;
    if (!scenario || !state.selection) {
      root.appendChild(el("p", "hint", "Select a tessera or connection"));
      return;
    }
    if (state.selection.kind === "tessera") {
      const tess = scenario.tesserae.find((t) => t.id === state.selection!.id);
      if (tess) this.renderTessera(state, scenario, tess);
    } else {
      const conn = scenario.connections.find((c) => c.id === state.selection!.id);
      if (conn) this.renderConnection(state, scenario, conn);
    }
    if (state.runStatus !== "idle") {
      // edits are locked during a run; the gateway would reject them anyway
      root.querySelectorAll<HTMLInputElement>("input, select, textarea, button:not(.tab)")
        .forEach((node) => (node.disabled = true));
    }
  }

  // -- run tab

  private renderRun(state: ViewState): void {
    const box = el("div", "run-panel");
    const progress = state.lastProgress;
    const bar = el("div", "progress-track");
    const fill = el("div", "progress-fill");
    const ratio = progress ? Math.min(1, (progress.time + 0) / Math.max(1, progress.end_time)) : 0;
    fill.style.width = `${Math.round(ratio * 100)}%`;
    bar.appendChild(fill);
    box.appendChild(bar);
    const caption = progress
      ? `t = ${progress.time} / ${progress.end_time} s (${state.runStatus})`
      : `no run yet (${state.runStatus})`;
    box.appendChild(el("div", "progress-caption", caption));

    const log = el("ul", "event-log");
    for (const event of state.events.slice(-100)) {
      const item = el("li", `event-${event.event}`);
      if (event.event === "progress") item.textContent = `progress t=${event.time}`;
      else if (event.event === "log") item.textContent = `[${event.level}] ${event.source}: ${event.message}`;
      else if (event.event === "done") item.textContent = `done at t=${event.final_time}`;
      else item.textContent = `error in ${event.source}: ${event.message}`;
      log.appendChild(item);
    }
    box.appendChild(log);
    this.root.appendChild(box);
  }

  // -- tessera details

  private renderTessera(state: ViewState, scenario: Scenario, tess: TesseraSpec): void {
    const root = this.root;
    root.appendChild(el("h2", undefined, `Tessera ${tess.id}`));
    const problem = this.store.problemFor(`tessera:${tess.id}`);
    if (problem) root.appendChild(el("p", "problem", problem));

    root.appendChild(labeled("name", textInput(tess.name, (v) =>
      void this.actions.updateTessera(tess.id, { name: v }))));
    root.appendChild(labeled("icon", textInput(tess.icon, (v) =>
      void this.actions.updateTessera(tess.id, { icon: v }))));
    root.appendChild(labeled("simulator", select(
      scenario.simulators.map((s) => s.id), tess.simulator_id,
      (v) => void this.actions.updateTessera(tess.id, { simulator_id: v }))));
    root.appendChild(labeled("model", textInput(tess.model, (v) =>
      void this.actions.updateTessera(tess.id, { model: v }))));

    root.appendChild(el("h3", undefined, "Entity sources"));
    tess.sources.forEach((source, index) => {
      root.appendChild(this.renderSource(scenario, tess, source, index));
    });
    const addSource = el("button", undefined, "+ source") as HTMLButtonElement;
    addSource.addEventListener("click", () => {
      const sources: EntitySource[] = [
        ...tess.sources,
        { kind: "create_fixed", count: 1, create_params: {} },
      ];
      void this.actions.updateTessera(tess.id, { sources });
    });
    root.appendChild(addSource);

    root.appendChild(el("h3", undefined, "Entities"));
    const entities = state.baking?.tesserae.find((t) => t.id === tess.id)?.entities;
    if (!entities) {
      root.appendChild(el("p", "hint", "not resolved"));
    } else {
      const list = el("ul", "entity-list");
      for (const entity of entities) {
        const extra = Object.entries(entity.extra_info)
          .map(([k, v]) => `${k}=${JSON.stringify(v)}`)
          .join(", ");
        list.appendChild(el("li", undefined,
          `${entity.entity_id}${entity.child ? " (child)" : ""}${extra ? ` — ${extra}` : ""}`));
      }
      root.appendChild(list);
    }

    root.appendChild(el("h3", undefined, "Connections"));
    const links = el("ul", "connection-list");
    for (const conn of scenario.connections) {
      if (conn.source !== tess.id && conn.target !== tess.id) continue;
      const direction = conn.source === tess.id ? "→" : "←";
      const other = conn.source === tess.id ? conn.target : conn.source;
      const item = el("li", "link", `${direction} ${other} (${conn.relation.kind})`);
      item.addEventListener("click", () => this.store.select({ kind: "connection", id: conn.id }));
      links.appendChild(item);
    }
    root.appendChild(links);

    const remove = el("button", "danger", "Remove tessera");
    remove.addEventListener("click", () => void this.actions.removeTessera(tess.id));
    root.appendChild(remove);
  }

  private renderSource(
    scenario: Scenario, tess: TesseraSpec, source: EntitySource, index: number,
  ): HTMLElement {
    const box = el("div", "source-box");
    const commit = (updated: EntitySource) => {
      const sources = tess.sources.map((s, i) => (i === index ? updated : s));
      void this.actions.updateTessera(tess.id, { sources });
    };
    box.appendChild(labeled("kind", select([...SOURCE_KINDS], source.kind, (kind) => {
      if (kind === "create_fixed") commit({ kind, count: 1, create_params: {} });
      else if (kind === "create_matching") {
        commit({ kind, size_of: scenario.tesserae[0]?.id ?? "", create_params: {} });
      } else commit({ kind: "select", id_pattern: "*", predicates: [] });
    })));
    if (source.kind === "create_fixed") {
      box.appendChild(labeled("count", numberInput(source.count, (v) =>
        commit({ ...source, count: Math.max(0, Math.round(v)) }))));
      box.appendChild(labeled("params", jsonEditor(source.create_params, (v) =>
        commit({ ...source, create_params: v }))));
    } else if (source.kind === "create_matching") {
      box.appendChild(labeled("size of", select(
        scenario.tesserae.filter((t) => t.id !== tess.id).map((t) => t.id),
        source.size_of, (v) => commit({ ...source, size_of: v }))));
      box.appendChild(labeled("params", jsonEditor(source.create_params, (v) =>
        commit({ ...source, create_params: v }))));
    } else {
      box.appendChild(labeled("id glob", textInput(source.id_pattern, (v) =>
        commit({ ...source, id_pattern: v }))));
      const predicates = source.predicates
        .map((p) => `${p.key} ${p.op} ${JSON.stringify(p.value)}`)
        .join(" AND ");
      const editor = textInput(predicates, (v) => {
        const parsed = parsePredicates(v);
        if (parsed) commit({ ...source, predicates: parsed });
      });
      editor.placeholder = 'voltage_level eq "LV" AND size ge 3';
      box.appendChild(labeled("filters", editor));
    }
    const drop = el("button", "danger", "×");
    drop.addEventListener("click", () => {
      const sources = tess.sources.filter((_, i) => i !== index);
      void this.actions.updateTessera(tess.id, { sources });
    });
    box.appendChild(drop);
    return box;
  }

  // -- connection details

  private renderConnection(state: ViewState, scenario: Scenario, conn: ConnectionSpec): void {
    const root = this.root;
    root.appendChild(el("h2", undefined, `Connection ${conn.id}`));
    root.appendChild(el("p", "hint", `${conn.source} → ${conn.target}`));
    const problem = this.store.problemFor(`connection:${conn.id}`);
    if (problem) root.appendChild(el("p", "problem", problem));
    const resolved = state.baking?.connections.find((c) => c.id === conn.id);
    if (resolved && resolved.pair_count !== null) {
      const drops = resolved.dropped_pairs ? `, ${resolved.dropped_pairs} dropped` : "";
      root.appendChild(el("p", "hint", `${resolved.pair_count} entity pairs${drops}`));
    }

    root.appendChild(el("h3", undefined, "Attributes"));
    const outputs = this.modelAttrs(state, scenario, conn.source, "outputs");
    const inputs = this.modelAttrs(state, scenario, conn.target, "inputs");
    conn.attr_pairs.forEach(([sourceAttr, targetAttr], index) => {
      const row = el("div", "attr-row");
      row.appendChild(this.attrInput(sourceAttr, outputs, (v) => {
        const attr_pairs = conn.attr_pairs.map((p, i): [string, string] =>
          i === index ? [v, p[1]] : p);
        void this.actions.updateConnection(conn.id, { attr_pairs });
      }));
      row.appendChild(el("span", undefined, "→"));
      row.appendChild(this.attrInput(targetAttr, inputs, (v) => {
        const attr_pairs = conn.attr_pairs.map((p, i): [string, string] =>
          i === index ? [p[0], v] : p);
        void this.actions.updateConnection(conn.id, { attr_pairs });
      }));
      const drop = el("button", "danger", "×");
      drop.addEventListener("click", () => {
        const attr_pairs = conn.attr_pairs.filter((_, i) => i !== index);
        void this.actions.updateConnection(conn.id, { attr_pairs });
      });
      row.appendChild(drop);
      root.appendChild(row);
    });
    const addPair = el("button", undefined, "+ attribute pair");
    addPair.addEventListener("click", () => {
      const attr_pairs: [string, string][] = [
        ...conn.attr_pairs,
        [outputs[0] ?? "", inputs[0] ?? ""],
      ];
      void this.actions.updateConnection(conn.id, { attr_pairs });
    });
    root.appendChild(addPair);

    root.appendChild(el("h3", undefined, "Relation"));
    root.appendChild(this.renderRelation(scenario, conn));

    const delayed = document.createElement("input");
    delayed.type = "checkbox";
    delayed.checked = conn.delayed;
    delayed.addEventListener("change", () => {
      void this.actions.updateConnection(conn.id, {
        delayed: delayed.checked,
        initial_values: delayed.checked ? conn.initial_values : {},
      });
    });
    root.appendChild(labeled("delayed (one step)", delayed));
    if (conn.delayed) {
      root.appendChild(labeled("initial values", jsonEditor(conn.initial_values, (v) =>
        void this.actions.updateConnection(conn.id, { initial_values: v }))));
    }

    const remove = el("button", "danger", "Remove connection");
    remove.addEventListener("click", () => void this.actions.removeConnection(conn.id));
    root.appendChild(remove);
  }

  private modelAttrs(
    state: ViewState, scenario: Scenario, tesseraId: string, which: "inputs" | "outputs",
  ): string[] {
    const tess = scenario.tesserae.find((t) => t.id === tesseraId);
    if (!tess) return [];
    const meta = state.baking?.simulators.find((s) => s.id === tess.simulator_id)?.meta;
    const model: ModelMeta | undefined = meta?.models[tess.model];
    return (model?.[which] ?? []).filter((a) => a !== "*");
  }

  private attrInput(value: string, suggestions: string[], onCommit: (v: string) => void): HTMLElement {
    const input = textInput(value, onCommit);
    if (suggestions.length > 0) {
      const listId = `attrs-${Math.random().toString(36).slice(2, 8)}`;
      const list = document.createElement("datalist");
      list.id = listId;
      for (const attr of suggestions) {
        const option = document.createElement("option");
        option.value = attr;
        list.appendChild(option);
      }
      input.setAttribute("list", listId);
      const wrap = el("span");
      wrap.append(input, list);
      return wrap;
    }
    return input;
  }

  /** Relation kinds that make structural sense for the resolved sizes; the
   * current kind is always offered and the server stays the validator. */
  plausibleRelationKinds(conn: ConnectionSpec): string[] {
    const sourceCount = this.store.tesseraEntityCount(conn.source);
    const targetCount = this.store.tesseraEntityCount(conn.target);
    return RELATION_KINDS.filter((kind) => {
      if (kind === conn.relation.kind) return true;
      if (kind === "one_to_one" && sourceCount !== null && targetCount !== null) {
        return sourceCount === targetCount;
      }
      if (kind === "many_to_one" && targetCount !== null) return targetCount === 1;
      return true;
    });
  }

  private renderRelation(scenario: Scenario, conn: ConnectionSpec): HTMLElement {
    const box = el("div", "relation-box");
    const commit = (relation: Relation) => void this.actions.updateConnection(conn.id, { relation });
    box.appendChild(labeled("kind", select(this.plausibleRelationKinds(conn), conn.relation.kind, (kind) => {
      if (kind === "random") commit({ kind, allow_repeat: false, seed: 0 });
      else if (kind === "manual") commit({ kind, pairs: [] });
      else if (kind === "composition") {
        const first = scenario.connections.find((c) => c.id !== conn.id);
        commit({ kind, path: first ? [{ connection: first.id, direction: "forward" }] : [] });
      } else commit({ kind } as Relation);
    })));

    const relation = conn.relation;
    if (relation.kind === "random") {
      const repeat = document.createElement("input");
      repeat.type = "checkbox";
      repeat.checked = relation.allow_repeat;
      repeat.addEventListener("change", () => commit({ ...relation, allow_repeat: repeat.checked }));
      box.appendChild(labeled("repeat targets", repeat));
      box.appendChild(labeled("seed", numberInput(relation.seed, (v) =>
        commit({ ...relation, seed: Math.max(0, Math.round(v)) }))));
    } else if (relation.kind === "manual") {
      const text = relation.pairs.map(([a, b]) => `${a} -> ${b}`).join("\n");
      const area = document.createElement("textarea");
      area.value = text;
      area.placeholder = "src_entity -> dst_entity, one per line";
      area.addEventListener("change", () => {
        const pairs: [string, string][] = [];
        for (const line of area.value.split("\n")) {
          const match = line.split("->").map((s) => s.trim());
          if (match.length === 2 && match[0] && match[1]) pairs.push([match[0], match[1]]);
        }
        commit({ kind: "manual", pairs });
      });
      box.appendChild(labeled("pairs", area));
    } else if (relation.kind === "composition") {
      const others = scenario.connections.filter((c) => c.id !== conn.id).map((c) => c.id);
      relation.path.forEach((step, index) => {
        const row = el("div", "path-step");
        row.appendChild(select(others, step.connection, (v) => {
          const path = relation.path.map((s, i) => (i === index ? { ...s, connection: v } : s));
          commit({ ...relation, path });
        }));
        const flip = el("button", undefined, step.direction === "forward" ? "→" : "←");
        flip.title = step.direction;
        flip.addEventListener("click", () => {
          const path = relation.path.map((s, i) =>
            i === index
              ? { ...s, direction: (s.direction === "forward" ? "backward" : "forward") as "forward" | "backward" }
              : s);
          commit({ ...relation, path });
        });
        row.appendChild(flip);
        const drop = el("button", "danger", "×");
        drop.addEventListener("click", () => {
          commit({ ...relation, path: relation.path.filter((_, i) => i !== index) });
        });
        row.appendChild(drop);
        box.appendChild(row);
      });
      const addStep = el("button", undefined, "+ step");
      addStep.addEventListener("click", () => {
        if (others.length === 0) return;
        commit({
          ...relation,
          path: [...relation.path, { connection: others[0], direction: "forward" }],
        });
      });
      box.appendChild(addStep);
    }
    return box;
  }
}

export function parsePredicates(
  text: string,
): { key: string; op: "eq" | "ne" | "lt" | "le" | "gt" | "ge"; value: unknown }[] | null {
  const trimmed = text.trim();
  if (!trimmed) return [];
  const out: { key: string; op: "eq" | "ne" | "lt" | "le" | "gt" | "ge"; value: unknown }[] = [];
  for (const clause of trimmed.split(/\s+AND\s+/i)) {
    const match = clause.trim().match(/^(\S+)\s+(eq|ne|lt|le|gt|ge)\s+(.+)$/);
    if (!match) return null;
    let value: unknown;
    try {
      value = JSON.parse(match[3]);
    } catch {
      value = match[3];
    }
    out.push({ key: match[1], op: match[2] as "eq", value });
  }
  return out;
}
