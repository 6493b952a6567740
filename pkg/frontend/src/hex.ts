/** Flat-top hexagon geometry for the scenario canvas. */

export interface Point {
  x: number;
  y: number;
}

export const HEX_RADIUS = 52;

/** The six corners of a flat-top hexagon centered on (cx, cy). */
export function hexCorners(cx: number, cy: number, radius = HEX_RADIUS): Point[] {
  const corners: Point[] = [];
  for (let i = 0; i < 6; i++) {
    const angle = (Math.PI / 180) * (60 * i);
    corners.push({ x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) });
  }
  return corners;
}

export function hexPath(cx: number, cy: number, radius = HEX_RADIUS): string {
  return hexCorners(cx, cy, radius)
    .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
    .join(" ") + " Z";
}

/** Point on the hexagon boundary toward a target, for anchoring edges. */
export function edgeAnchor(center: Point, toward: Point, radius = HEX_RADIUS): Point {
  const dx = toward.x - center.x;
  const dy = toward.y - center.y;
  const len = Math.hypot(dx, dy) || 1;
  const inset = radius * 0.92;
  return { x: center.x + (dx / len) * inset, y: center.y + (dy / len) * inset };
}

/** Default position for the n-th tessera when the scenario has no layout entry. */
export function defaultPosition(index: number): Point {
  const perRow = 4;
  return {
    x: 140 + (index % perRow) * 180,
    y: 120 + Math.floor(index / perRow) * 160,
  };
}
