// Typed fetch client for the review service JSON API.
// The console is a pure view over these endpoints plus verdict submission;
// it never mutates rankings or distributions client-side.

export type RunSummary = {
  run_id: string;
  stages: Record<string, string>;
};

export type ReviewContext = {
  sentence_id: string;
  tokens: string[];
  highlight: number;
};

export type Distribution = {
  word: string;
  counts: Record<string, number>;
  probabilities: Record<string, number>;
  n_total: number;
  n_kept: number;
  flag: string | null;
};

export type ItemStatus = 'pending' | 'confirmed' | 'rejected' | 'unsure';

export type ReviewItem = {
  word: string;
  rank: number;
  weight: number;
  support: number;
  status: ItemStatus;
  mapped_keyword: string | null;
  contexts: ReviewContext[];
  bigrams: string[];
  distribution: Distribution | null;
};

export type QueuePage = {
  run_id: string;
  page: number;
  page_size: number;
  total: number;
  items: ReviewItem[];
};

export type Verdict = 'confirmed' | 'rejected' | 'unsure';

export type PromotionResult = {
  keyword_list: string;
  promoted: string[];
  added: string[];
  total_keywords: number;
};

export type RerunStatus = {
  status: 'running' | 'complete' | 'failed';
  new_run_id: string;
  error: string | null;
} | null;

export type RunStatus = {
  run_id: string;
  stages: Record<string, string>;
  rerun: RerunStatus;
};

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable (${String(err)})`);
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body?.detail === 'string' ? body.detail : JSON.stringify(body?.detail ?? body);
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class ReviewClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  listRuns(): Promise<{ runs: RunSummary[] }> {
    return request(`${this.baseUrl}/runs`);
  }

  listCandidates(runId: string, page = 1, pageSize = 20): Promise<QueuePage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    return request(`${this.baseUrl}/runs/${encodeURIComponent(runId)}/candidates?${params}`);
  }

  getCandidate(runId: string, word: string): Promise<ReviewItem> {
    return request(
      `${this.baseUrl}/runs/${encodeURIComponent(runId)}/candidates/${encodeURIComponent(word)}`,
    );
  }

  submitVerdict(
    runId: string,
    word: string,
    verdict: Verdict,
    mappedKeyword?: string,
  ): Promise<ReviewItem> {
    return request(`${this.baseUrl}/runs/${encodeURIComponent(runId)}/verdicts`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        word,
        verdict,
        mapped_keyword: mappedKeyword ?? null,
        reviewer: 'console',
      }),
    });
  }

  promote(runId: string): Promise<PromotionResult> {
    return request(`${this.baseUrl}/runs/${encodeURIComponent(runId)}/promote`, {
      method: 'POST',
    });
  }

  rerun(runId: string, overrides: { run_id?: string; t?: number; seed?: number } = {}): Promise<{
    new_run_id: string;
    status: string;
  }> {
    return request(`${this.baseUrl}/runs/${encodeURIComponent(runId)}/rerun`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(overrides),
    });
  }

  status(runId: string): Promise<RunStatus> {
    return request(`${this.baseUrl}/runs/${encodeURIComponent(runId)}/status`);
  }
}
