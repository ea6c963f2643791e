/**
 * Typed client for the dependency graph service.
 *
 * Every response carries an X-Graph-Fingerprint header identifying the
 * graph the server answered from. When the value changes between two
 * requests the server has reloaded, and pages already on screen may be
 * stale; the client reports that through onFingerprintChange and leaves
 * the reaction to the caller.
 */

// Structural subset of the fetch Response so tests can hand in plain objects.
export interface HttpResponse {
  ok: boolean;
  status: number;
  headers: { get(name: string): string | null };
  json(): Promise<unknown>;
}

export type FetchLike = (url: string) => Promise<HttpResponse>;

export interface ItemView {
  id: string;
  kind: string;
  deps: string[];
  rdeps: string[];
  ancestors: number;
  descendants: number;
}

export interface QueryAnswer {
  answer: boolean;
  witness?: string[];
}

export interface EntryPoint {
  id: string;
  label: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private fingerprint: string | null = null;
  onFingerprintChange: ((next: string) => void) | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(path: string): Promise<T> {
    let response: HttpResponse;
    try {
      response = await this.fetchFn(this.baseUrl + path);
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : "network failure");
    }

    const seen = response.headers.get("x-graph-fingerprint");
    if (seen !== null) {
      if (this.fingerprint !== null && seen !== this.fingerprint) {
        this.onFingerprintChange?.(seen);
      }
      this.fingerprint = seen;
    }

    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      const message =
        body !== null && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `request failed with status ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  async entryPoints(): Promise<EntryPoint[]> {
    const body = await this.get<{ entry_points: EntryPoint[] }>("/entry-points");
    return body.entry_points;
  }

  item(id: string): Promise<ItemView> {
    return this.get<ItemView>(`/items/${encodeURIComponent(id)}`);
  }

  queryPath(from: string, to: string): Promise<QueryAnswer> {
    return this.get<QueryAnswer>(`/query/path?${qs({ from, to })}`);
  }

  queryVia(from: string, to: string, via: string): Promise<QueryAnswer> {
    return this.get<QueryAnswer>(`/query/via?${qs({ from, to, via })}`);
  }

  queryAvoiding(from: string, to: string, avoid: string[]): Promise<QueryAnswer> {
    return this.get<QueryAnswer>(`/query/avoiding?${qs({ from, to, avoid: avoid.join(",") })}`);
  }
}

function qs(params: Record<string, string>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    search.set(key, value);
  }
  return search.toString();
}
