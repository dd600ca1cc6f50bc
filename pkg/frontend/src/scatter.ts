/** SVG scatter of the archive on a chosen 2-objective projection.
 *
 * All records are plotted in normalized [0,1] coordinates; the current
 * recommendation is highlighted and non-dominated points on the projected
 * pair are visually distinct from projection-dominated ones.
 */

import type { ArchiveEntry } from "./types";
import { OBJECTIVE_LABELS, OBJECTIVE_NAMES } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 360;
const MARGIN = 40;

function toPixel(x: number, y: number): [number, number] {
  const px = MARGIN + x * (WIDTH - 2 * MARGIN);
  const py = HEIGHT - MARGIN - y * (HEIGHT - 2 * MARGIN);
  return [px, py];
}

/** Indices of entries not dominated within the projected objective pair. */
export function projectedNondominated(
  entries: ArchiveEntry[],
  axes: [number, number],
): Set<number> {
  const keep = new Set<number>();
  const [ax, ay] = axes;
  entries.forEach((entry, i) => {
    const xi = entry.normalized_objectives[ax];
    const yi = entry.normalized_objectives[ay];
    const dominated = entries.some((other, j) => {
      if (i === j) {
        return false;
      }
      const xj = other.normalized_objectives[ax];
      const yj = other.normalized_objectives[ay];
      return xj >= xi && yj >= yi && (xj > xi || yj > yi);
    });
    if (!dominated) {
      keep.add(i);
    }
  });
  return keep;
}

export function renderScatter(
  container: HTMLElement,
  entries: ArchiveEntry[],
  axes: [number, number],
  highlightedRecord: number | null,
): void {
  container.replaceChildren();
  if (entries.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "Archive is empty — train a run and reload.";
    container.appendChild(empty);
    return;
  }

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  svg.setAttribute("role", "img");

  const frame = document.createElementNS(SVG_NS, "rect");
  frame.setAttribute("x", String(MARGIN));
  frame.setAttribute("y", String(MARGIN));
  frame.setAttribute("width", String(WIDTH - 2 * MARGIN));
  frame.setAttribute("height", String(HEIGHT - 2 * MARGIN));
  frame.setAttribute("class", "plot-frame");
  svg.appendChild(frame);

  const [ax, ay] = axes;
  const xLabel = document.createElementNS(SVG_NS, "text");
  xLabel.setAttribute("x", String(WIDTH / 2));
  xLabel.setAttribute("y", String(HEIGHT - 8));
  xLabel.setAttribute("text-anchor", "middle");
  xLabel.setAttribute("class", "axis-label");
  xLabel.textContent = OBJECTIVE_LABELS[OBJECTIVE_NAMES[ax]];
  svg.appendChild(xLabel);

  const yLabel = document.createElementNS(SVG_NS, "text");
  yLabel.setAttribute("x", "12");
  yLabel.setAttribute("y", String(HEIGHT / 2));
  yLabel.setAttribute("text-anchor", "middle");
  yLabel.setAttribute("transform", `rotate(-90 12 ${HEIGHT / 2})`);
  yLabel.setAttribute("class", "axis-label");
  yLabel.textContent = OBJECTIVE_LABELS[OBJECTIVE_NAMES[ay]];
  svg.appendChild(yLabel);

  const frontier = projectedNondominated(entries, axes);
  entries.forEach((entry, i) => {
    const [px, py] = toPixel(
      entry.normalized_objectives[ax],
      entry.normalized_objectives[ay],
    );
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", px.toFixed(2));
    dot.setAttribute("cy", py.toFixed(2));
    const highlighted = entry.record === highlightedRecord;
    dot.setAttribute("r", highlighted ? "7" : "4");
    const classes = ["point"];
    if (frontier.has(i)) {
      classes.push("nondominated");
    }
    if (highlighted) {
      classes.push("highlighted");
    }
    dot.setAttribute("class", classes.join(" "));
    dot.dataset.record = String(entry.record);
    svg.appendChild(dot);
  });

  container.appendChild(svg);
}
