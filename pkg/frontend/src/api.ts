import type {
  AgreementResponse,
  NextResponse,
  ProgressResponse,
  RatingPayload,
  RatingResponse,
} from './types';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = `http_${response.status}`;
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body?.detail?.code) {
      code = body.detail.code;
      message = body.detail.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, code, message);
}

/** Thin typed client for the review API; fetch is injectable for tests. */
export class ReviewClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    await raiseForStatus(response);
    return response.json() as Promise<T>;
  }

  async next(annotator: string): Promise<NextResponse> {
    return this.get(`/review/next?annotator=${encodeURIComponent(annotator)}`);
  }

  async submitRating(payload: RatingPayload): Promise<RatingResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/review/rating`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
    await raiseForStatus(response);
    return response.json() as Promise<RatingResponse>;
  }

  async progress(): Promise<ProgressResponse> {
    return this.get('/review/progress');
  }

  async agreement(): Promise<AgreementResponse> {
    return this.get('/review/agreement');
  }

  async stats(): Promise<Record<string, unknown>> {
    return this.get('/stats');
  }
}
