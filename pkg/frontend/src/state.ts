/** Client-side state: normalized preference weights, soft-constraint
 * toggles, projection axes, and the last good recommendation.
 *
 * The displayed weights always sum to 1 — raw slider positions are kept
 * separately and normalized on every read, so any interaction sequence
 * preserves the invariant.
 */

import type { Recommendation, Vec4 } from "./types";

export interface UiState {
  rawWeights: Vec4;
  enabledSoftConstraints: number[];
  axes: [number, number];
  recommendation: Recommendation | null;
  lastLatencyMs: number | null;
  serviceError: string | null;
}

export type Listener = (state: UiState) => void;

export function normalizeWeights(raw: Vec4): Vec4 {
  const clipped = raw.map((w) => (w > 0 ? w : 0)) as Vec4;
  const total = clipped.reduce((a, b) => a + b, 0);
  if (total <= 0) {
    return [0.25, 0.25, 0.25, 0.25];
  }
  return clipped.map((w) => w / total) as Vec4;
}

export class Store {
  private state: UiState = {
    rawWeights: [0.25, 0.25, 0.25, 0.25],
    enabledSoftConstraints: [],
    axes: [0, 2],
    recommendation: null,
    lastLatencyMs: null,
    serviceError: null,
  };

  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): UiState {
    return { ...this.state, rawWeights: [...this.state.rawWeights] as Vec4 };
  }

  /** Normalized weights for display and for the service request body. */
  displayedWeights(): Vec4 {
    return normalizeWeights(this.state.rawWeights);
  }

  setWeight(index: number, value: number): void {
    if (index < 0 || index > 3 || !Number.isFinite(value) || value < 0) {
      return;
    }
    const raw = [...this.state.rawWeights] as Vec4;
    raw[index] = value;
    this.update({ rawWeights: raw });
  }

  toggleSoftConstraint(id: number, enabled: boolean): void {
    const current = new Set(this.state.enabledSoftConstraints);
    if (enabled) {
      current.add(id);
    } else {
      current.delete(id);
    }
    this.update({ enabledSoftConstraints: [...current].sort((a, b) => a - b) });
  }

  setAxes(x: number, y: number): void {
    if (x === y || x < 0 || x > 3 || y < 0 || y > 3) {
      return;
    }
    this.update({ axes: [x, y] });
  }

  applyRecommendation(rec: Recommendation): void {
    this.update({
      recommendation: rec,
      lastLatencyMs: rec.latency_ms,
      serviceError: null,
    });
  }

  /** Service failure: surface the message but keep the previous
   * recommendation so the view never loses state. */
  applyServiceError(message: string): void {
    this.update({ serviceError: message });
  }

  clearError(): void {
    this.update({ serviceError: null });
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.snapshot());
    }
  }
}
