// DOM rendering of the flashcard view: a prompt, six answer buttons,
// reveal-style feedback (wrong pick highlighted alongside the correct
// answer), per-session progress, and the completion screen.

import { QuestionView } from "./api.js";
import { MachineState, SessionMachine } from "./state.js";

export interface CardElements {
  root: HTMLElement;
  prompt: HTMLElement;
  choices: HTMLElement;
  status: HTMLElement;
  progress: HTMLElement;
  action: HTMLButtonElement;
}

export function buildCard(container: HTMLElement): CardElements {
  container.innerHTML = `
    <div class="card">
      <div class="progress"></div>
      <div class="prompt"></div>
      <div class="choices"></div>
      <div class="status"></div>
      <button class="action" hidden></button>
    </div>`;
  return {
    root: container.querySelector(".card") as HTMLElement,
    prompt: container.querySelector(".prompt") as HTMLElement,
    choices: container.querySelector(".choices") as HTMLElement,
    status: container.querySelector(".status") as HTMLElement,
    progress: container.querySelector(".progress") as HTMLElement,
    action: container.querySelector(".action") as HTMLButtonElement,
  };
}

function renderProgress(state: MachineState, elements: CardElements): void {
  const question = state.question;
  if (question === null) {
    elements.progress.textContent = "";
    return;
  }
  const progress = question.progress as { answered: number; quota?: number; total?: number };
  const total = progress.quota ?? progress.total ?? 0;
  elements.progress.textContent = `${progress.answered + 1} of ${total}`;
}

export function render(state: MachineState, elements: CardElements, machine: SessionMachine): void {
  const { prompt, choices, status, action } = elements;
  action.hidden = true;
  action.onclick = null;

  if (state.phase === "complete") {
    prompt.textContent = "Session complete";
    choices.innerHTML = "";
    status.textContent = "Every question in this session has been answered.";
    elements.progress.textContent = "";
    return;
  }
  if (state.phase === "blocked") {
    prompt.textContent = "Not available";
    choices.innerHTML = "";
    status.textContent = `This session cannot run right now (${state.blockedReason}).`;
    return;
  }
  if (state.question === null) {
    prompt.textContent = state.phase === "fetching" ? "Loading…" : "";
    status.textContent = state.error ?? "";
    return;
  }

  const question = state.question;
  prompt.textContent = question.prompt;
  renderProgress(state, elements);
  choices.innerHTML = "";

  const locked = state.phase !== "answering";
  for (const label of question.choices) {
    const button = document.createElement("button");
    button.className = "choice";
    button.textContent = label;
    button.disabled = locked;
    if (state.phase === "reveal" && label === (question as QuestionView).answer) {
      // First presentation: the right answer is shown before choices unlock.
      button.classList.add("correct");
    }
    if (state.phase === "feedback" && state.feedback !== null) {
      const feedback = state.feedback;
      if (feedback.correctAnswer !== null && label === feedback.correctAnswer) {
        button.classList.add("correct");
      }
      if (label === feedback.chosen && feedback.correct === false) {
        button.classList.add("wrong");
      }
    }
    button.onclick = () => {
      void machine.choose(label);
    };
    choices.appendChild(button);
  }

  if (state.phase === "reveal") {
    status.textContent = "New word: memorize the highlighted answer.";
    action.hidden = false;
    action.textContent = "Got it";
    action.onclick = () => machine.acknowledgeReveal();
  } else if (state.phase === "submitting") {
    status.textContent = "Checking…";
  } else if (state.phase === "retry") {
    status.textContent = "Connection lost; your answer was not confirmed.";
    action.hidden = false;
    action.textContent = "Retry";
    action.onclick = () => {
      void machine.retry();
    };
  } else if (state.phase === "feedback" && state.feedback !== null) {
    if (state.feedback.correct === null) {
      status.textContent = "Answer recorded.";
    } else {
      status.textContent = state.feedback.correct ? "Correct!" : "Not quite.";
    }
    action.hidden = false;
    action.textContent = "Continue";
    action.onclick = () => {
      void machine.next();
    };
  } else {
    status.textContent = "";
  }
}

export function attach(machine: SessionMachine, container: HTMLElement): CardElements {
  const elements = buildCard(container);
  machine.subscribe((state) => render(state, elements, machine));
  return elements;
}
