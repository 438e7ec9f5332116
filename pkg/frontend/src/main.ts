/** Browser entry point: owns the session, routes events, repaints on change.
 * Served statically by the review service; talks to it with relative URLs. */

import { ApiError, ReviewApi } from "./api.js";
import { keyToAction, shouldIgnore, type KeyAction } from "./keyboard.js";
import { renderApp } from "./render.js";
import {
  beginSubmit,
  currentItem,
  focusItem,
  formValid,
  initialSession,
  queueFailed,
  queueLoaded,
  setCorrectedLabel,
  setVerdict,
  statsLoaded,
  submitFailed,
  submitSucceeded,
  type Session,
} from "./state.js";
import type { AnnotationRequest } from "./types.js";

const api = new ReviewApi("");
const root = document.getElementById("app") as HTMLElement;

const annotator =
  new URLSearchParams(window.location.search).get("annotator") ?? "a1";

let session: Session = initialSession(annotator);

function paint(next: Session): void {
  session = next;
  root.innerHTML = renderApp(session);
}

async function loadQueue(): Promise<void> {
  paint({ ...session, phase: "loading", banner: null });
  try {
    const payload = await api.queue(annotator);
    paint(queueLoaded(session, payload));
    paint(statsLoaded(session, await api.stats()));
  } catch (error) {
    paint(queueFailed(session, describe(error)));
  }
}

async function submit(): Promise<void> {
  const item = currentItem(session);
  if (item === null || !formValid(session) || session.submitting) return;
  const request: AnnotationRequest = {
    item_id: item.id,
    annotator,
    verdict: session.form.verdict as "correct" | "incorrect",
  };
  if (request.verdict === "incorrect") {
    request.corrected_label = session.form.correctedLabel as number;
  }
  paint(beginSubmit(session));
  try {
    const reply = await api.submit(request);
    paint(submitSucceeded(session, reply.stats));
  } catch (error) {
    paint(submitFailed(session, describe(error)));
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  return "review service unreachable";
}

function dispatch(action: KeyAction): void {
  switch (action.kind) {
    case "verdict-correct":
      paint(setVerdict(session, "correct"));
      break;
    case "verdict-incorrect":
      paint(setVerdict(session, "incorrect"));
      break;
    case "pick-label":
      if (session.form.verdict !== "incorrect") {
        paint(setVerdict(session, "incorrect"));
      }
      paint(setCorrectedLabel(session, action.label));
      break;
    case "submit":
      void submit();
      break;
    case "move":
      paint(focusItem(session, session.position + action.delta));
      break;
  }
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (target === null || target.hasAttribute("disabled")) return;
  switch (target.dataset.action) {
    case "retry":
      void loadQueue();
      break;
    case "focus":
      paint(focusItem(session, Number(target.dataset.position)));
      break;
    case "verdict-correct":
      dispatch({ kind: "verdict-correct" });
      break;
    case "verdict-incorrect":
      dispatch({ kind: "verdict-incorrect" });
      break;
    case "pick-label":
      dispatch({ kind: "pick-label", label: Number(target.dataset.label) });
      break;
    case "submit":
      dispatch({ kind: "submit" });
      break;
  }
});

root.addEventListener("submit", (event) => {
  event.preventDefault();
  dispatch({ kind: "submit" });
});

window.addEventListener("keydown", (event) => {
  if (shouldIgnore(event)) return;
  const action = keyToAction(event.key, session.schema.length);
  if (action !== null) {
    event.preventDefault();
    dispatch(action);
  }
});

void loadQueue();
