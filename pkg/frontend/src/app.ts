/** Wires the state store, service client, and DOM together.
 *
 * Every preference interaction funnels through one debounced reoptimize
 * call; responses re-render the recommendation panel and move the
 * highlighted point on the front projection. A failing service raises a
 * toast and leaves the previous recommendation untouched.
 */

import type { ServiceClient } from "./api";
import { debounce, type Debounced } from "./debounce";
import { renderScatter } from "./scatter";
import { Store, type UiState } from "./state";
import type { ArchiveEntry } from "./types";
import { OBJECTIVE_LABELS, OBJECTIVE_NAMES } from "./types";

export interface AppOptions {
  debounceMs?: number;
  softConstraintIds?: number[];
}

export interface App {
  store: Store;
  refresh(): Promise<void>;
  element(id: string): HTMLElement;
}

const DEFAULT_DEBOUNCE_MS = 250;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function createApp(
  root: HTMLElement,
  client: ServiceClient,
  options: AppOptions = {},
): App {
  const store = new Store();
  const debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
  const softIds = options.softConstraintIds ?? [];
  let archive: ArchiveEntry[] = [];

  root.replaceChildren();

  const controls = el("section", "controls");
  const sliders: HTMLInputElement[] = [];
  const weightLabels: HTMLElement[] = [];
  OBJECTIVE_NAMES.forEach((name, i) => {
    const row = el("label", "slider-row");
    row.appendChild(el("span", "slider-name", OBJECTIVE_LABELS[name]));
    const input = el("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = "0.25";
    input.id = `weight-${i}`;
    const value = el("span", "slider-value", "25%");
    value.id = `weight-value-${i}`;
    row.appendChild(input);
    row.appendChild(value);
    controls.appendChild(row);
    sliders.push(input);
    weightLabels.push(value);
  });

  const toggles = el("div", "soft-toggles");
  for (const id of softIds) {
    const row = el("label", "toggle-row");
    const box = el("input");
    box.type = "checkbox";
    box.id = `soft-${id}`;
    row.appendChild(box);
    row.appendChild(el("span", undefined, `Enforce soft constraint ${id}`));
    toggles.appendChild(row);
    box.addEventListener("change", () => {
      store.toggleSoftConstraint(id, box.checked);
      scheduleReoptimize();
    });
  }
  controls.appendChild(toggles);

  const axisRow = el("div", "axis-pickers");
  const axisSelects: HTMLSelectElement[] = [];
  (["x", "y"] as const).forEach((axis, slot) => {
    const select = el("select");
    select.id = `axis-${axis}`;
    OBJECTIVE_NAMES.forEach((name, i) => {
      const option = el("option", undefined, OBJECTIVE_LABELS[name]);
      option.value = String(i);
      select.appendChild(option);
    });
    select.value = slot === 0 ? "0" : "2";
    axisRow.appendChild(select);
    axisSelects.push(select);
  });
  controls.appendChild(axisRow);

  const plot = el("section", "plot");
  plot.id = "plot";
  const panel = el("section", "panel");
  panel.id = "panel";
  panel.appendChild(el("p", "empty-state", "Adjust the sliders to get a recommendation."));
  const toast = el("div", "toast hidden");
  toast.id = "toast";
  toast.setAttribute("role", "alert");

  root.appendChild(controls);
  root.appendChild(plot);
  root.appendChild(panel);
  root.appendChild(toast);

  async function reoptimize(): Promise<void> {
    const body = {
      lambda: [...store.displayedWeights()],
      soft_constraints: softIds.map((id) => ({
        id,
        enabled: store.snapshot().enabledSoftConstraints.includes(id),
      })),
    };
    try {
      const rec = await client.reoptimize(body);
      store.applyRecommendation(rec);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") {
        return; // superseded by a newer request
      }
      store.applyServiceError(
        err instanceof Error ? err.message : "service unreachable",
      );
    }
  }

  const scheduleReoptimize: Debounced<[]> = debounce(() => {
    void reoptimize();
  }, debounceMs);

  sliders.forEach((slider, i) => {
    slider.addEventListener("input", () => {
      store.setWeight(i, Number(slider.value));
      scheduleReoptimize();
    });
  });

  axisSelects[0].addEventListener("change", () => {
    store.setAxes(Number(axisSelects[0].value), Number(axisSelects[1].value));
  });
  axisSelects[1].addEventListener("change", () => {
    store.setAxes(Number(axisSelects[0].value), Number(axisSelects[1].value));
  });

  function renderPanel(state: UiState): void {
    const rec = state.recommendation;
    if (rec === null) {
      return;
    }
    panel.replaceChildren();
    const badge = el(
      "span",
      rec.compliance.feasible ? "badge feasible" : "badge infeasible",
      rec.compliance.feasible ? "feasible" : "infeasible",
    );
    badge.id = "compliance-badge";
    const heading = el("h2", undefined, `Recommended portfolio`);
    heading.appendChild(badge);
    panel.appendChild(heading);
    if (rec.soft_relaxed) {
      panel.appendChild(
        el("p", "soft-relaxed-note",
           "No archived portfolio satisfies the enabled soft constraints; showing the relaxed best match."),
      );
    }

    const list = el("ul", "portfolio");
    list.id = "portfolio-list";
    for (const parcel of rec.portfolio) {
      list.appendChild(
        el("li", undefined,
           `Parcel ${parcel.id} — district ${parcel.district}, ` +
           `walk ${parcel.walk_score.toFixed(0)}, ` +
           `cost ${parcel.base_cost.toExponential(2)}`),
      );
    }
    panel.appendChild(list);

    const objectives = el("dl", "objectives");
    OBJECTIVE_NAMES.forEach((name, i) => {
      objectives.appendChild(el("dt", undefined, OBJECTIVE_LABELS[name]));
      objectives.appendChild(
        el("dd", undefined, rec.normalized_objectives[i].toFixed(3)),
      );
    });
    panel.appendChild(objectives);

    const explanation = el("ol", "explanation");
    explanation.id = "explanation";
    for (const line of rec.explanation) {
      explanation.appendChild(el("li", undefined, line));
    }
    panel.appendChild(explanation);

    if (state.lastLatencyMs !== null) {
      const latency = el("p", "latency", `answered in ${state.lastLatencyMs.toFixed(1)} ms`);
      latency.id = "latency";
      panel.appendChild(latency);
    }
  }

  function render(state: UiState): void {
    const weights = store.displayedWeights();
    weights.forEach((w, i) => {
      weightLabels[i].textContent = `${Math.round(w * 100)}%`;
    });
    renderScatter(
      plot,
      archive,
      state.axes,
      state.recommendation === null ? null : state.recommendation.record,
    );
    renderPanel(state);
    if (state.serviceError !== null) {
      toast.textContent = `Service error: ${state.serviceError} — showing last known state.`;
      toast.classList.remove("hidden");
    } else {
      toast.classList.add("hidden");
    }
  }

  store.subscribe(render);

  return {
    store,
    async refresh(): Promise<void> {
      try {
        archive = await client.fetchArchive();
        store.clearError();
      } catch (err) {
        store.applyServiceError(
          err instanceof Error ? err.message : "service unreachable",
        );
        return;
      }
      render(store.snapshot());
    },
    element(id: string): HTMLElement {
      const node = root.querySelector<HTMLElement>(`#${id}`);
      if (node === null) {
        throw new Error(`missing element #${id}`);
      }
      return node;
    },
  };
}
