// Entry point: join or create a learner, pick today's session from the
// schedule, and run the flashcard loop against the tutor service.

import { ApiError, TutorApi } from "./api.js";
import { SessionMachine } from "./state.js";
import { attach } from "./ui.js";

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector(selector);
  if (node === null) {
    throw new Error(`missing element ${selector}`);
  }
  return node as T;
}

async function startSession(api: TutorApi, userId: string, arm: string, mode: "training" | "evaluation"): Promise<void> {
  const machine = new SessionMachine(api, userId, arm, mode);
  attach(machine, el("#session"));
  await machine.start();
}

async function boot(): Promise<void> {
  const api = new TutorApi("");
  const lobby = el<HTMLElement>("#lobby");
  const userField = el<HTMLInputElement>("#user-id");
  const message = el<HTMLElement>("#message");

  el<HTMLButtonElement>("#create-user").onclick = async () => {
    try {
      const dailyTime = el<HTMLInputElement>("#daily-time").value || "09:00";
      const user = await api.createUser({ daily_time: dailyTime });
      userField.value = user.user_id;
      message.textContent = `Created learner ${user.user_id}; teachers: leitner + ${user.model_kind}.`;
    } catch (err) {
      message.textContent = String(err);
    }
  };

  el<HTMLButtonElement>("#join").onclick = async () => {
    const userId = userField.value.trim();
    if (!userId) {
      message.textContent = "Enter a learner id or create one.";
      return;
    }
    try {
      const schedule = await api.schedule(userId);
      const today = schedule.days
        .map((day) => `day ${day.day}: ${day.arm_order.join(" then ")}`)
        .join(" | ");
      message.textContent = `Schedule: ${today}; evaluation on day ${schedule.evaluation.day}.`;
      lobby.dataset.user = userId;
    } catch (err) {
      message.textContent = err instanceof ApiError ? err.message : String(err);
    }
  };

  const sessionStarter = (arm: string, mode: "training" | "evaluation") => async () => {
    const userId = lobby.dataset.user ?? userField.value.trim();
    if (!userId) {
      message.textContent = "Join a learner first.";
      return;
    }
    await startSession(api, userId, arm, mode);
  };
  el<HTMLButtonElement>("#start-leitner").onclick = sessionStarter("leitner", "training");
  el<HTMLButtonElement>("#start-model").onclick = sessionStarter("model", "training");
  el<HTMLButtonElement>("#eval-leitner").onclick = sessionStarter("leitner", "evaluation");
  el<HTMLButtonElement>("#eval-model").onclick = sessionStarter("model", "evaluation");
}

document.addEventListener("DOMContentLoaded", () => {
  void boot();
});
