// Typed client for the tutor service HTTP/JSON API.
// Every call can carry an optional virtual `now` (epoch seconds); without
// it the server clock rules. Session timing stays server-authoritative --
// the client only displays the windows it is given.

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface UserInfo {
  user_id: string;
  model_kind: string;
  first_arm: string;
  arms: string[];
  sessions: number;
  questions_per_session: number;
  evaluation_day: number;
}

export interface DaySchedule {
  day: number;
  arm_order: string[];
  start_times: Record<string, number>;
}

export interface ScheduleInfo {
  user_id: string;
  days: DaySchedule[];
  evaluation: { day: number; start_time: number };
}

export interface QuestionView {
  user_id: string;
  arm: string;
  item_id: string;
  prompt: string;
  choices: string[];
  is_first_presentation: boolean;
  /** Present only on first presentations, where the answer is revealed. */
  answer?: string;
  progress: { answered: number; quota: number };
}

export interface EvalQuestionView {
  user_id: string;
  arm: string;
  item_id: string;
  prompt: string;
  choices: string[];
  progress: { answered: number; total: number };
}

export interface AnswerAck {
  correct: boolean;
  omega: number;
  correct_answer: string;
  answered_in_session: number;
  quota: number;
}

export interface EvalAck {
  recorded: boolean;
  progress: { answered: number; total: number };
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class TutorApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload.error ?? "unknown", payload.detail ?? "");
    }
    return payload as T;
  }

  private withNow(path: string, now?: number): string {
    return now === undefined ? path : `${path}?now=${encodeURIComponent(now)}`;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/api/health");
  }

  createUser(options: {
    model_kind?: string;
    daily_time?: string | number;
    start_epoch?: number;
    now?: number;
  }): Promise<UserInfo> {
    return this.request("POST", "/api/users", options);
  }

  user(userId: string): Promise<UserInfo> {
    return this.request("GET", `/api/users/${userId}`);
  }

  schedule(userId: string): Promise<ScheduleInfo> {
    return this.request("GET", `/api/users/${userId}/schedule`);
  }

  nextQuestion(userId: string, arm: string, now?: number): Promise<QuestionView> {
    return this.request(
      "GET",
      this.withNow(`/api/users/${userId}/arms/${arm}/next-question`, now),
    );
  }

  submitAnswer(
    userId: string,
    arm: string,
    itemId: string,
    chosen: string,
    now?: number,
  ): Promise<AnswerAck> {
    return this.request("POST", `/api/users/${userId}/arms/${arm}/answers`, {
      item_id: itemId,
      chosen,
      now,
    });
  }

  evaluationNext(userId: string, arm: string, now?: number): Promise<EvalQuestionView> {
    return this.request(
      "GET",
      this.withNow(`/api/users/${userId}/arms/${arm}/evaluation/next-question`, now),
    );
  }

  evaluationAnswer(
    userId: string,
    arm: string,
    itemId: string,
    chosen: string,
    now?: number,
  ): Promise<EvalAck> {
    return this.request("POST", `/api/users/${userId}/arms/${arm}/evaluation/answers`, {
      item_id: itemId,
      chosen,
      now,
    });
  }

  stats(userId: string): Promise<{ arms: Record<string, { trials: number; n_seen: number }> }> {
    return this.request("GET", `/api/users/${userId}/stats`);
  }
}
