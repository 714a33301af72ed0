import { describe, expect, it } from "vitest";

import { ApiError, AnswerAck, QuestionView, TutorApi } from "../src/api.js";
import { SessionMachine } from "../src/state.js";

function question(overrides: Partial<QuestionView> = {}): QuestionView {
  return {
    user_id: "u",
    arm: "model",
    item_id: "w1",
    prompt: "dog",
    choices: ["Hund", "Katze", "Haus", "Baum", "Brot", "Milch"],
    is_first_presentation: false,
    progress: { answered: 0, quota: 100 },
    ...overrides,
  };
}

function ack(correct: boolean): AnswerAck {
  return {
    correct,
    omega: correct ? 1 : 0,
    correct_answer: "Hund",
    answered_in_session: 1,
    quota: 100,
  };
}

interface Scripted {
  questions: Array<QuestionView | ApiError>;
  answers: Array<AnswerAck | ApiError | Error>;
  submitted: Array<{ itemId: string; chosen: string }>;
}

function fakeApi(script: Scripted): TutorApi {
  const api = Object.create(TutorApi.prototype) as TutorApi;
  Object.assign(api, {
    nextQuestion: async () => {
      const next = script.questions.shift();
      if (next === undefined) throw new Error("script exhausted");
      if (next instanceof ApiError) throw next;
      return next;
    },
    submitAnswer: async (_u: string, _a: string, itemId: string, chosen: string) => {
      script.submitted.push({ itemId, chosen });
      const next = script.answers.shift();
      if (next === undefined) throw new Error("script exhausted");
      if (next instanceof Error) throw next;
      return next;
    },
  });
  return api;
}

describe("SessionMachine", () => {
  it("walks fetch -> answer -> feedback -> next", async () => {
    const script: Scripted = {
      questions: [question(), question({ item_id: "w2", prompt: "cat" })],
      answers: [ack(true)],
      submitted: [],
    };
    const machine = new SessionMachine(fakeApi(script), "u", "model");
    await machine.start();
    expect(machine.snapshot().phase).toBe("answering");
    await machine.choose("Hund");
    expect(machine.snapshot().phase).toBe("feedback");
    expect(machine.snapshot().feedback?.correct).toBe(true);
    await machine.next();
    expect(machine.snapshot().question?.item_id).toBe("w2");
    expect(script.submitted).toEqual([{ itemId: "w1", chosen: "Hund" }]);
  });

  it("locks choices until a first presentation is acknowledged", async () => {
    const script: Scripted = {
      questions: [question({ is_first_presentation: true, answer: "Hund" })],
      answers: [ack(true)],
      submitted: [],
    };
    const machine = new SessionMachine(fakeApi(script), "u", "model");
    await machine.start();
    expect(machine.snapshot().phase).toBe("reveal");
    await machine.choose("Hund"); // ignored while revealing
    expect(script.submitted).toHaveLength(0);
    machine.acknowledgeReveal();
    await machine.choose("Hund");
    expect(script.submitted).toHaveLength(1);
  });

  it("never runs two submissions at once", async () => {
    let resolveAck: (a: AnswerAck) => void = () => {};
    const pending = new Promise<AnswerAck>((resolve) => {
      resolveAck = resolve;
    });
    const submitted: string[] = [];
    const api = Object.create(TutorApi.prototype) as TutorApi;
    Object.assign(api, {
      nextQuestion: async () => question(),
      submitAnswer: async (_u: string, _a: string, _i: string, chosen: string) => {
        submitted.push(chosen);
        return pending;
      },
    });
    const machine = new SessionMachine(api, "u", "model");
    await machine.start();
    const first = machine.choose("Hund");
    const second = machine.choose("Katze"); // rejected: already submitting
    resolveAck(ack(true));
    await Promise.all([first, second]);
    expect(submitted).toEqual(["Hund"]);
  });

  it("retries a lost submission without double-submitting", async () => {
    const script: Scripted = {
      questions: [question()],
      answers: [
        new Error("network down"),
        new ApiError(409, "no_pending_question", "already recorded"),
      ],
      submitted: [],
    };
    const machine = new SessionMachine(fakeApi(script), "u", "model");
    await machine.start();
    await machine.choose("Katze");
    expect(machine.snapshot().phase).toBe("retry");
    await machine.retry();
    // The first attempt had landed server-side: move on, answer recorded.
    expect(machine.snapshot().phase).toBe("feedback");
    expect(machine.snapshot().feedback?.correctAnswer).toBeNull();
    expect(script.submitted).toEqual([
      { itemId: "w1", chosen: "Katze" },
      { itemId: "w1", chosen: "Katze" },
    ]);
  });

  it("reports session completion", async () => {
    const script: Scripted = {
      questions: [new ApiError(409, "session_complete", "done")],
      answers: [],
      submitted: [],
    };
    const machine = new SessionMachine(fakeApi(script), "u", "model");
    await machine.start();
    expect(machine.snapshot().phase).toBe("complete");
  });

  it("reports blocked sessions distinctly", async () => {
    const script: Scripted = {
      questions: [new ApiError(409, "arm_order", "other arm first")],
      answers: [],
      submitted: [],
    };
    const machine = new SessionMachine(fakeApi(script), "u", "model");
    await machine.start();
    expect(machine.snapshot().phase).toBe("blocked");
    expect(machine.snapshot().blockedReason).toBe("arm_order");
  });
});
