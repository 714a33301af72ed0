// Session state machine for one (user, arm) training or evaluation run.
//
// The invariant that matters: there is never more than one in-flight
// submission, and no path reaches the next question without submitting an
// answer for the current one. A failed submission keeps the pending
// (item, choice) so a retry cannot double-submit: if the first attempt
// actually landed (the response was lost), the service rejects the retry
// and the machine moves on.

import { ApiError, AnswerAck, QuestionView, EvalQuestionView, TutorApi } from "./api.js";

export type Phase =
  | "idle"
  | "fetching"
  | "reveal"
  | "answering"
  | "submitting"
  | "retry"
  | "feedback"
  | "complete"
  | "blocked";

export interface Feedback {
  chosen: string;
  correctAnswer: string | null; // null: recorded without reveal (evaluation)
  correct: boolean | null;
}

export interface MachineState {
  phase: Phase;
  question: QuestionView | EvalQuestionView | null;
  feedback: Feedback | null;
  blockedReason: string | null;
  error: string | null;
}

export type Listener = (state: MachineState) => void;

const SESSION_OVER_CODES = new Set(["session_complete", "evaluation_complete"]);
const BLOCKED_CODES = new Set([
  "outside_session",
  "arm_order",
  "evaluation_day",
  "evaluation_not_open",
  "training_pending",
  "evaluation_pending",
]);

export class SessionMachine {
  private state: MachineState = {
    phase: "idle",
    question: null,
    feedback: null,
    blockedReason: null,
    error: null,
  };
  private pendingChoice: string | null = null;
  private listeners: Listener[] = [];

  constructor(
    private api: TutorApi,
    private userId: string,
    private arm: string,
    private mode: "training" | "evaluation" = "training",
    private clock: () => number | undefined = () => undefined,
  ) {}

  snapshot(): MachineState {
    return { ...this.state };
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(partial: Partial<MachineState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) {
      listener(this.snapshot());
    }
  }

  async start(): Promise<void> {
    if (this.state.phase !== "idle" && this.state.phase !== "feedback") {
      return;
    }
    await this.fetchQuestion();
  }

  private async fetchQuestion(): Promise<void> {
    this.update({ phase: "fetching", feedback: null, error: null });
    try {
      const question =
        this.mode === "training"
          ? await this.api.nextQuestion(this.userId, this.arm, this.clock())
          : await this.api.evaluationNext(this.userId, this.arm, this.clock());
      const reveal =
        this.mode === "training" && (question as QuestionView).is_first_presentation;
      this.update({ phase: reveal ? "reveal" : "answering", question });
    } catch (err) {
      this.handleFetchError(err);
    }
  }

  private handleFetchError(err: unknown): void {
    if (err instanceof ApiError && SESSION_OVER_CODES.has(err.code)) {
      this.update({ phase: "complete", question: null });
    } else if (err instanceof ApiError && BLOCKED_CODES.has(err.code)) {
      this.update({ phase: "blocked", blockedReason: err.code, question: null });
    } else {
      this.update({ phase: "idle", error: String(err) });
    }
  }

  /** First presentations show the answer before the choices unlock. */
  acknowledgeReveal(): void {
    if (this.state.phase === "reveal") {
      this.update({ phase: "answering" });
    }
  }

  async choose(label: string): Promise<void> {
    if (this.state.phase !== "answering" || this.state.question === null) {
      return; // one in-flight submission at a time
    }
    if (!this.state.question.choices.includes(label)) {
      return;
    }
    this.pendingChoice = label;
    await this.submitPending();
  }

  /** Retry a submission that failed in transit; never double-submits. */
  async retry(): Promise<void> {
    if (this.state.phase === "retry") {
      await this.submitPending();
    }
  }

  private async submitPending(): Promise<void> {
    const question = this.state.question;
    const chosen = this.pendingChoice;
    if (question === null || chosen === null) {
      return;
    }
    this.update({ phase: "submitting" });
    try {
      if (this.mode === "training") {
        const ack: AnswerAck = await this.api.submitAnswer(
          this.userId,
          this.arm,
          question.item_id,
          chosen,
          this.clock(),
        );
        this.update({
          phase: "feedback",
          feedback: { chosen, correctAnswer: ack.correct_answer, correct: ack.correct },
        });
      } else {
        await this.api.evaluationAnswer(
          this.userId,
          this.arm,
          question.item_id,
          chosen,
          this.clock(),
        );
        this.update({
          phase: "feedback",
          feedback: { chosen, correctAnswer: null, correct: null },
        });
      }
      this.pendingChoice = null;
    } catch (err) {
      if (err instanceof ApiError && err.code === "no_pending_question") {
        // The earlier attempt landed; the answer is recorded server-side.
        this.pendingChoice = null;
        this.update({
          phase: "feedback",
          feedback: { chosen, correctAnswer: null, correct: null },
        });
      } else if (err instanceof ApiError) {
        this.pendingChoice = null;
        this.handleFetchError(err);
      } else {
        this.update({ phase: "retry", error: String(err) });
      }
    }
  }

  async next(): Promise<void> {
    if (this.state.phase === "feedback") {
      await this.fetchQuestion();
    }
  }
}
