/** Scenario view: tesserae as hexagons, connections as arrows.
 *
 * Hexagons show name, icon, and resolved entity count, and carry warning
 * badges when their element failed or is blocked. Dragging a hexagon moves it
 * (optimistic, committed on release via set_position); dragging from the small
 * connect port onto another hexagon creates a connection and selects it so the
 * details panel opens on the relation editor.
 */

import type { Actions } from "./actions";
import type { Store, ViewState } from "./store";
import type { Scenario } from "./protocol";
import { HEX_RADIUS, Point, defaultPosition, edgeAnchor, hexPath } from "./hex";
import { iconGlyph } from "./sidebar";

const SVG_NS = "http://www.w3.org/2000/svg";

interface DragMove {
  kind: "move";
  tesseraId: string;
  offset: Point;
  moved: boolean;
}

interface DragConnect {
  kind: "connect";
  sourceId: string;
  cursor: Point;
}

type DragState = DragMove | DragConnect | null;

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

export function tesseraPositions(scenario: Scenario): Map<string, Point> {
  const positions = new Map<string, Point>();
  scenario.tesserae.forEach((t, index) => {
    positions.set(t.id, scenario.layout[t.id] ?? defaultPosition(index));
  });
  return positions;
}

export class Canvas {
  private drag: DragState = null;
  private svg: SVGSVGElement;

  constructor(private root: HTMLElement, private store: Store, private actions: Actions) {
    this.svg = svgEl("svg");
    this.svg.setAttribute("class", "scenario-canvas");
    root.appendChild(this.svg);

    root.addEventListener("dragover", (ev) => ev.preventDefault());
    root.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const key = ev.dataTransfer?.getData("text/registry-key");
      if (key) void this.actions.addSimulator(key);
    });

    window.addEventListener("pointermove", (ev) => this.onPointerMove(ev));
    window.addEventListener("pointerup", (ev) => this.onPointerUp(ev));
  }

  private canvasPoint(ev: PointerEvent): Point {
    const box = this.svg.getBoundingClientRect();
    return { x: ev.clientX - box.left, y: ev.clientY - box.top };
  }

  private onPointerMove(ev: PointerEvent): void {
    if (!this.drag) return;
    const at = this.canvasPoint(ev);
    if (this.drag.kind === "move") {
      this.drag.moved = true;
      this.store.nudgePosition(this.drag.tesseraId, at.x - this.drag.offset.x, at.y - this.drag.offset.y);
    } else {
      this.drag.cursor = at;
      this.render(this.store.state);
    }
  }

  private onPointerUp(ev: PointerEvent): void {
    const drag = this.drag;
    this.drag = null;
    if (!drag) return;
    if (drag.kind === "move") {
      if (drag.moved) {
        const scenario = this.store.state.scenario;
        const position = scenario?.layout[drag.tesseraId];
        if (position) void this.actions.setPosition(drag.tesseraId, position.x, position.y);
      }
      return;
    }
    // connect gesture: whatever hexagon is under the pointer becomes the target
    const element = document.elementFromPoint(ev.clientX, ev.clientY);
    const target = element?.closest("[data-tessera-id]") as SVGElement | null;
    const targetId = target?.dataset.tesseraId;
    if (targetId && targetId !== drag.sourceId) {
      void this.actions.addConnection(drag.sourceId, targetId);
    }
    this.render(this.store.state);
  }

  render(state: ViewState): void {
    const svg = this.svg;
    svg.innerHTML = "";
    const scenario = state.scenario;
    if (!scenario) return;

    const defs = svgEl("defs");
    defs.innerHTML =
      '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" ' +
      'markerHeight="7" orient="auto-start-reverse"><path d="M0,0L10,5L0,10Z"/></marker>';
    svg.appendChild(defs);

    const positions = tesseraPositions(scenario);

    for (const conn of scenario.connections) {
      const from = positions.get(conn.source);
      const to = positions.get(conn.target);
      if (!from || !to) continue;
      const a = edgeAnchor(from, to);
      const b = edgeAnchor(to, from);
      const group = svgEl("g");
      group.setAttribute("class", this.connectionClass(state, conn.id));
      group.dataset.connectionId = conn.id;

      const line = svgEl("line");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("marker-end", "url(#arrow)");
      group.appendChild(line);

      const grab = svgEl("line");  // wider invisible hit area
      grab.setAttribute("x1", String(a.x));
      grab.setAttribute("y1", String(a.y));
      grab.setAttribute("x2", String(b.x));
      grab.setAttribute("y2", String(b.y));
      grab.setAttribute("class", "edge-grab");
      grab.addEventListener("pointerdown", () => this.store.select({ kind: "connection", id: conn.id }));
      group.appendChild(grab);

      const label = svgEl("text");
      label.setAttribute("x", String((a.x + b.x) / 2));
      label.setAttribute("y", String((a.y + b.y) / 2 - 6));
      label.setAttribute("class", "edge-label");
      const pairCount = state.baking?.connections.find((c) => c.id === conn.id)?.pair_count;
      label.textContent = `${conn.relation.kind}${pairCount != null ? ` (${pairCount})` : ""}` +
        (conn.delayed ? " ⏱" : "");
      group.appendChild(label);
      svg.appendChild(group);
    }

    for (const tess of scenario.tesserae) {
      svg.appendChild(this.renderHexagon(state, tess.id, positions.get(tess.id)!));
    }

    if (this.drag?.kind === "connect") {
      const from = positions.get(this.drag.sourceId);
      if (from) {
        const rubber = svgEl("line");
        rubber.setAttribute("x1", String(from.x));
        rubber.setAttribute("y1", String(from.y));
        rubber.setAttribute("x2", String(this.drag.cursor.x));
        rubber.setAttribute("y2", String(this.drag.cursor.y));
        rubber.setAttribute("class", "rubber-band");
        svg.appendChild(rubber);
      }
    }
  }

  private connectionClass(state: ViewState, id: string): string {
    const classes = ["edge", `state-${this.store.elementState(`connection:${id}`)}`];
    if (state.selection?.kind === "connection" && state.selection.id === id) classes.push("selected");
    return classes.join(" ");
  }

  private renderHexagon(state: ViewState, id: string, at: Point): SVGGElement {
    const scenario = state.scenario!;
    const tess = scenario.tesserae.find((t) => t.id === id)!;
    const elementState = this.store.elementState(`tessera:${id}`);
    const group = svgEl("g");
    const selected = state.selection?.kind === "tessera" && state.selection.id === id;
    group.setAttribute("class", `hexagon state-${elementState}${selected ? " selected" : ""}`);
    group.dataset.tesseraId = id;

    const shape = svgEl("path");
    shape.setAttribute("d", hexPath(at.x, at.y));
    group.appendChild(shape);

    const icon = svgEl("text");
    icon.setAttribute("x", String(at.x));
    icon.setAttribute("y", String(at.y - 12));
    icon.setAttribute("class", "hex-icon");
    icon.textContent = iconGlyph(tess.icon);
    group.appendChild(icon);

    const name = svgEl("text");
    name.setAttribute("x", String(at.x));
    name.setAttribute("y", String(at.y + 10));
    name.setAttribute("class", "hex-name");
    name.textContent = tess.name || tess.id;
    group.appendChild(name);

    const count = this.store.tesseraEntityCount(id);
    const badge = svgEl("text");
    badge.setAttribute("x", String(at.x));
    badge.setAttribute("y", String(at.y + 28));
    badge.setAttribute("class", "hex-count");
    badge.textContent = count === null ? "–" : `${count}`;
    group.appendChild(badge);

    const problem = this.store.problemFor(`tessera:${id}`);
    if (problem) {
      const warn = svgEl("text");
      warn.setAttribute("x", String(at.x + HEX_RADIUS * 0.55));
      warn.setAttribute("y", String(at.y - HEX_RADIUS * 0.55));
      warn.setAttribute("class", "hex-warn");
      warn.textContent = "⚠";
      const tooltip = svgEl("title");
      tooltip.textContent = problem;
      warn.appendChild(tooltip);
      group.appendChild(warn);
    }

    const port = svgEl("circle");
    port.setAttribute("cx", String(at.x + HEX_RADIUS));
    port.setAttribute("cy", String(at.y));
    port.setAttribute("r", "7");
    port.setAttribute("class", "connect-port");
    port.addEventListener("pointerdown", (ev) => {
      ev.stopPropagation();
      this.drag = { kind: "connect", sourceId: id, cursor: this.canvasPoint(ev) };
    });
    group.appendChild(port);

    shape.addEventListener("pointerdown", (ev) => {
      this.store.select({ kind: "tessera", id });
      this.drag = {
        kind: "move",
        tesseraId: id,
        offset: { x: this.canvasPoint(ev).x - at.x, y: this.canvasPoint(ev).y - at.y },
        moved: false,
      };
    });
    return group;
  }
}
