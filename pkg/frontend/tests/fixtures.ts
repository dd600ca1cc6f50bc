/** Shared mock service: a 3-record archive with hand-set normalized
 * objectives and the same argmax rule the real service applies. */

import type { ServiceClient } from "../src/api";
import { ServiceError } from "../src/api";
import type {
  ArchiveEntry,
  ParcelSummary,
  Recommendation,
  ReoptimizeBody,
} from "../src/types";

export const FIXTURE_ARCHIVE: ArchiveEntry[] = [
  {
    record: 0,
    objectives: [180, -300, -40, 0.8],
    normalized_objectives: [0.9, 0.2, 0.3, 0.1],
    preference: [0.25, 0.25, 0.25, 0.25],
    portfolio: [1, 4, 7],
    attention: [0.42, 0.31, 0.18, 0.09],
  },
  {
    record: 1,
    objectives: [60, -120, -25, 0.9],
    normalized_objectives: [0.1, 0.8, 0.6, 0.4],
    preference: [0.25, 0.25, 0.25, 0.25],
    portfolio: [0, 2, 5],
    attention: [0.25, 0.25, 0.25, 0.25],
  },
  {
    record: 2,
    objectives: [110, -180, -15, 0.95],
    normalized_objectives: [0.4, 0.5, 0.9, 0.7],
    preference: [0.25, 0.25, 0.25, 0.25],
    portfolio: [3, 6, 8],
    attention: [0.1, 0.2, 0.3, 0.4],
  },
];

function parcel(id: number): ParcelSummary {
  return {
    id,
    district: id % 3,
    walk_score: 40 + id * 5,
    green_space: 0.5,
    base_cost: 1e7 + id * 1e6,
    flood_zone: false,
    qct: true,
    minority_tract: id % 2 === 0,
  };
}

export function fixtureArgmax(lambda: number[]): number {
  const total = lambda.reduce((a, b) => a + b, 0);
  const weights = lambda.map((w) => w / total);
  let best = 0;
  let bestScore = -Infinity;
  FIXTURE_ARCHIVE.forEach((entry, i) => {
    const score = entry.normalized_objectives.reduce(
      (acc, v, j) => acc + v * weights[j],
      0,
    );
    if (score > bestScore) {
      bestScore = score;
      best = i;
    }
  });
  return best;
}

export function recommendationFor(record: number): Recommendation {
  const entry = FIXTURE_ARCHIVE[record];
  return {
    record: entry.record,
    portfolio: entry.portfolio.map(parcel),
    objectives: entry.objectives,
    normalized_objectives: entry.normalized_objectives,
    preference: entry.preference,
    compliance: {
      feasible: true,
      first_violation: null,
      violations: [],
      checked_count: 127,
    },
    explanation: entry.portfolio.map(
      (pid) => `Parcel ${pid} (district ${pid % 3}): regulatory 42%`,
    ),
    soft_relaxed: false,
    latency_ms: 1.5,
  };
}

export interface MockService extends ServiceClient {
  reoptimizeCalls: ReoptimizeBody[];
  offline: boolean;
}

export function createMockService(): MockService {
  const service: MockService = {
    reoptimizeCalls: [],
    offline: false,
    async fetchArchive() {
      if (service.offline) {
        throw new ServiceError("connection refused");
      }
      return FIXTURE_ARCHIVE;
    },
    async reoptimize(body: ReoptimizeBody) {
      if (service.offline) {
        throw new ServiceError("connection refused");
      }
      service.reoptimizeCalls.push(body);
      return recommendationFor(fixtureArgmax(body.lambda));
    },
  };
  return service;
}
