/** Typed client for the session service.
 *
 * Every method returns the parsed response body or throws: ApiError for an
 * HTTP error status (carrying the server's detail string), or the last
 * network failure after the retry budget runs out. Only network failures
 * are retried; an HTTP error is an answer, not an outage.
 */

export interface Payload {
  media_type: string;
  encoding: string;
  data: string;
}

export interface Candidate {
  candidate_id: string;
  point: number[];
  payload: Payload;
}

export type Phase = "rank" | "select";

export interface Batch {
  session_id: string;
  batch_id: string;
  phase: Phase;
  instruction: string;
  candidates: Candidate[];
}

export interface SessionStatus {
  session_id: string;
  phase: Phase;
  terminated: boolean;
  pending_batch_id: string | null;
  rounds_completed: number;
  moves_accepted: number;
  averaged_rounds: number;
  dim: number;
  created: string;
  best_point: number[];
  best: Payload;
}

export interface OptimizerSettings {
  num_directions?: number;
  step_size?: number;
  smoothing?: number;
  shrink?: number;
}

export interface CreateSessionRequest {
  renderer: { id: string; dim: number };
  config?: OptimizerSettings;
  x0?: number[];
  seed?: number;
  objective?: string;
}

export interface CreateSessionResponse {
  session_id: string;
  batch: Batch;
}

export interface RankingReceipt {
  status: string;
  phase: Phase;
  next_batch_id: string;
  averaged_rounds: number;
}

export interface SelectionReceipt {
  status: string;
  moved: boolean;
  message: string;
  phase: Phase;
  next_batch_id: string;
  rounds_completed: number;
}

export interface SessionEvent {
  event: string;
  [field: string]: unknown;
}

export interface SessionHistory {
  session_id: string;
  events: SessionEvent[];
}

export interface TerminateReceipt {
  session_id: string;
  terminated: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;
export type SleepLike = (ms: number) => Promise<void>;

/** Waits between retries of a failed connection, not after HTTP errors. */
export const RETRY_DELAYS_MS: readonly number[] = [250, 500, 1000];

export class ApiClient {
  private readonly fetchImpl: FetchLike;
  private readonly sleep: SleepLike;

  constructor(
    readonly base: string = "",
    fetchImpl?: FetchLike,
    sleep?: SleepLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    this.sleep = sleep ?? ((ms) => new Promise((resolve) => setTimeout(resolve, ms)));
  }

  createSession(request: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", request);
  }

  status(sessionId: string): Promise<SessionStatus> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  batch(sessionId: string): Promise<Batch> {
    return this.request("GET", `/sessions/${sessionId}/batch`);
  }

  submitRanking(
    sessionId: string,
    batchId: string,
    ranking: readonly string[],
  ): Promise<RankingReceipt> {
    return this.request("POST", `/sessions/${sessionId}/rankings`, {
      batch_id: batchId,
      ranking: [...ranking],
    });
  }

  submitSelection(
    sessionId: string,
    batchId: string,
    selection: string,
  ): Promise<SelectionReceipt> {
    return this.request("POST", `/sessions/${sessionId}/selections`, {
      batch_id: batchId,
      selection,
    });
  }

  history(sessionId: string): Promise<SessionHistory> {
    return this.request("GET", `/sessions/${sessionId}/history`);
  }

  terminate(sessionId: string): Promise<TerminateReceipt> {
    return this.request("POST", `/sessions/${sessionId}/terminate`);
  }

  /** URL of the plain-text trajectory export, for a download link. */
  exportUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/export`;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    let lastFailure: unknown = new Error("no attempt made");
    for (let attempt = 0; attempt <= RETRY_DELAYS_MS.length; attempt += 1) {
      if (attempt > 0) {
        await this.sleep(RETRY_DELAYS_MS[attempt - 1] as number);
      }
      let response: Response;
      try {
        response = await this.fetchImpl(this.base + path, init);
      } catch (failure) {
        lastFailure = failure;
        continue;
      }
      if (!response.ok) {
        throw new ApiError(response.status, await describeError(response));
      }
      return (await response.json()) as T;
    }
    throw lastFailure instanceof Error ? lastFailure : new Error(String(lastFailure));
  }
}

async function describeError(response: Response): Promise<string> {
  try {
    const parsed: unknown = await response.json();
    if (
      typeof parsed === "object" &&
      parsed !== null &&
      typeof (parsed as { detail?: unknown }).detail === "string"
    ) {
      return (parsed as { detail: string }).detail;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `${response.status} ${response.statusText}`.trim();
}
