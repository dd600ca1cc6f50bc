/** End-to-end UI behavior against the mocked service: the debounce
 * contract, argmax mirroring, the weight-display invariant, and offline
 * resilience. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { createApp, type App } from "../src/app";
import { createMockService, fixtureArgmax, type MockService } from "./fixtures";

const DEBOUNCE_MS = 100;

let root: HTMLElement;
let service: MockService;
let app: App;

async function flushMicrotasks(): Promise<void> {
  // let pending promise callbacks run under fake timers
  for (let i = 0; i < 5; i++) {
    await Promise.resolve();
  }
}

function dragSlider(index: number, value: number): void {
  const slider = root.querySelector<HTMLInputElement>(`#weight-${index}`)!;
  slider.value = String(value);
  slider.dispatchEvent(new Event("input"));
}

async function settle(): Promise<void> {
  vi.advanceTimersByTime(DEBOUNCE_MS + 1);
  await flushMicrotasks();
}

beforeEach(async () => {
  vi.useFakeTimers();
  root = document.createElement("div");
  document.body.appendChild(root);
  service = createMockService();
  app = createApp(root, service, {
    debounceMs: DEBOUNCE_MS,
    softConstraintIds: [16, 17],
  });
  await app.refresh();
  await flushMicrotasks();
});

afterEach(() => {
  vi.useRealTimers();
  root.remove();
});

describe("debounced reoptimization", () => {
  it("a rapid slider drag triggers exactly one request", async () => {
    for (let step = 0; step <= 20; step++) {
      dragSlider(0, step / 20);
      vi.advanceTimersByTime(10); // drag events well inside the window
    }
    expect(service.reoptimizeCalls).toHaveLength(0);
    await settle();
    expect(service.reoptimizeCalls).toHaveLength(1);
    // the request carries the final slider position, normalized
    const sent = service.reoptimizeCalls[0].lambda;
    expect(sent.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 12);
  });

  it("separate adjustments produce separate requests", async () => {
    dragSlider(0, 1);
    await settle();
    dragSlider(1, 0.8);
    await settle();
    expect(service.reoptimizeCalls).toHaveLength(2);
  });
});

describe("recommendation panel", () => {
  it("reflects the fixture argmax for a pure accessibility preference", async () => {
    dragSlider(0, 1);
    dragSlider(1, 0);
    dragSlider(2, 0);
    dragSlider(3, 0);
    await settle();
    const expected = fixtureArgmax([1, 0, 0, 0]);
    expect(expected).toBe(0);
    const items = [...root.querySelectorAll("#portfolio-list li")];
    expect(items.map((li) => li.textContent)).toEqual([
      expect.stringContaining("Parcel 1 "),
      expect.stringContaining("Parcel 4 "),
      expect.stringContaining("Parcel 7 "),
    ]);
    expect(app.element("compliance-badge").textContent).toBe("feasible");
    expect(app.element("explanation").children).toHaveLength(3);
    // the highlighted scatter point tracks the recommendation
    const highlighted = root.querySelector<SVGCircleElement>(".point.highlighted");
    expect(highlighted?.dataset.record).toBe("0");
  });

  it("moves to a different record when the preference shifts", async () => {
    dragSlider(0, 1);
    await settle();
    dragSlider(0, 0.25);
    dragSlider(2, 1);
    dragSlider(3, 1);
    await settle();
    const last = service.reoptimizeCalls.at(-1)!;
    const expected = fixtureArgmax(last.lambda);
    const highlighted = root.querySelector<SVGCircleElement>(".point.highlighted");
    expect(highlighted?.dataset.record).toBe(String(expected));
  });

  it("sends the soft-constraint toggles with each request", async () => {
    const box = root.querySelector<HTMLInputElement>("#soft-16")!;
    box.checked = true;
    box.dispatchEvent(new Event("change"));
    await settle();
    const sent = service.reoptimizeCalls.at(-1)!;
    expect(sent.soft_constraints).toEqual([
      { id: 16, enabled: true },
      { id: 17, enabled: false },
    ]);
  });
});

describe("weight display", () => {
  it("displayed percentages sum to 100 after every interaction", async () => {
    const sequences: [number, number][] = [
      [0, 1],
      [1, 0],
      [2, 0.33],
      [3, 0.9],
      [0, 0],
      [1, 0],
    ];
    for (const [index, value] of sequences) {
      dragSlider(index, value);
      const shown = [0, 1, 2, 3].map((i) =>
        Number(app.element(`weight-value-${i}`).textContent!.replace("%", "")),
      );
      const total = shown.reduce((a, b) => a + b, 0);
      expect(Math.abs(total - 100)).toBeLessThanOrEqual(2); // integer rounding
    }
  });
});

describe("offline service", () => {
  it("shows a toast and preserves the prior recommendation", async () => {
    dragSlider(0, 1);
    await settle();
    const before = [...root.querySelectorAll("#portfolio-list li")].map(
      (li) => li.textContent,
    );
    expect(before).toHaveLength(3);

    service.offline = true;
    dragSlider(1, 1);
    await settle();

    const toast = app.element("toast");
    expect(toast.classList.contains("hidden")).toBe(false);
    expect(toast.textContent).toMatch(/connection refused/);
    const after = [...root.querySelectorAll("#portfolio-list li")].map(
      (li) => li.textContent,
    );
    expect(after).toEqual(before);

    // recovery clears the toast on the next successful answer
    service.offline = false;
    dragSlider(2, 1);
    await settle();
    expect(app.element("toast").classList.contains("hidden")).toBe(true);
  });

  it("offline at startup surfaces an error instead of crashing", async () => {
    const freshRoot = document.createElement("div");
    document.body.appendChild(freshRoot);
    const offlineService = createMockService();
    offlineService.offline = true;
    const offlineApp = createApp(freshRoot, offlineService, {
      debounceMs: DEBOUNCE_MS,
    });
    await offlineApp.refresh();
    await flushMicrotasks();
    expect(offlineApp.element("toast").classList.contains("hidden")).toBe(false);
    freshRoot.remove();
  });
});
