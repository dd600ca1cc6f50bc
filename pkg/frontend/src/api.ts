/** Thin typed client for the recommendation service.
 *
 * Only one reoptimize request is ever in flight: a newer call aborts the
 * previous one, so stale responses can never overwrite fresh state.
 */

import type { ArchiveEntry, Recommendation, ReoptimizeBody } from "./types";

export interface ServiceClient {
  fetchArchive(): Promise<ArchiveEntry[]>;
  reoptimize(body: ReoptimizeBody): Promise<Recommendation>;
}

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export function createClient(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch,
): ServiceClient {
  let inflight: AbortController | null = null;

  async function parse<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string };
        if (body.error) {
          detail = body.error;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  return {
    async fetchArchive(): Promise<ArchiveEntry[]> {
      const response = await fetchImpl(`${baseUrl}/archive`);
      const body = await parse<{ records: ArchiveEntry[] }>(response);
      return body.records;
    },

    async reoptimize(body: ReoptimizeBody): Promise<Recommendation> {
      if (inflight !== null) {
        inflight.abort();
      }
      inflight = new AbortController();
      const response = await fetchImpl(`${baseUrl}/reoptimize`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
        signal: inflight.signal,
      });
      return parse<Recommendation>(response);
    },
  };
}
