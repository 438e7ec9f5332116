/** Session state machine for one annotator.
 *
 * All transitions are pure (state in, state out) so the whole flow is testable
 * without a browser. The server stays the single source of truth: nothing here
 * caches verdicts, and every transition only reshapes what the server sent.
 */

import type { QueueItemView, QueuePayload, StatsView, Verdict } from "./types.js";

export type Phase =
  | "loading" // initial queue fetch in flight
  | "reviewing" // items pending, one focused
  | "done" // queue loaded but nothing left for this annotator
  | "error"; // queue fetch failed; banner with retry

export interface VerdictForm {
  verdict: Verdict | null;
  correctedLabel: number | null;
}

export interface Session {
  annotator: string;
  phase: Phase;
  schema: string[];
  numRuns: number;
  /** pending items in server order (most contested first) */
  queue: QueueItemView[];
  /** index of the focused item within `queue` */
  position: number;
  form: VerdictForm;
  stats: StatsView | null;
  /** transient failure message; cleared by the next successful call */
  banner: string | null;
  /** submission in flight: form locked */
  submitting: boolean;
}

export const EMPTY_FORM: VerdictForm = { verdict: null, correctedLabel: null };

export function initialSession(annotator: string): Session {
  return {
    annotator,
    phase: "loading",
    schema: [],
    numRuns: 0,
    queue: [],
    position: 0,
    form: EMPTY_FORM,
    stats: null,
    banner: null,
    submitting: false,
  };
}

export function queueLoaded(session: Session, payload: QueuePayload): Session {
  return {
    ...session,
    phase: payload.items.length > 0 ? "reviewing" : "done",
    schema: payload.schema,
    numRuns: payload.num_runs,
    queue: payload.items,
    position: 0,
    form: EMPTY_FORM,
    banner: null,
    submitting: false,
  };
}

export function queueFailed(session: Session, message: string): Session {
  return { ...session, phase: "error", banner: message, submitting: false };
}

export function statsLoaded(session: Session, stats: StatsView): Session {
  return { ...session, stats };
}

export function currentItem(session: Session): QueueItemView | null {
  return session.phase === "reviewing" ? (session.queue[session.position] ?? null) : null;
}

/** Choose correct/incorrect. Picking "correct" discards any replacement label. */
export function setVerdict(session: Session, verdict: Verdict): Session {
  if (session.submitting) return session;
  const correctedLabel = verdict === "incorrect" ? session.form.correctedLabel : null;
  return { ...session, form: { verdict, correctedLabel } };
}

/** Pick the replacement label; only meaningful once the verdict is "incorrect". */
export function setCorrectedLabel(session: Session, label: number): Session {
  if (session.submitting || session.form.verdict !== "incorrect") return session;
  return { ...session, form: { verdict: "incorrect", correctedLabel: label } };
}

/** Mirror of the server-side annotation rules, so invalid submissions are
 * blocked in the form instead of bouncing off the API:
 * "correct" stands alone; "incorrect" needs an in-schema replacement label
 * that differs from the consensus label. */
export function formValid(session: Session): boolean {
  const item = currentItem(session);
  if (item === null) return false;
  const { verdict, correctedLabel } = session.form;
  if (verdict === "correct") return true;
  if (verdict === "incorrect") {
    return (
      correctedLabel !== null &&
      Number.isInteger(correctedLabel) &&
      correctedLabel >= 0 &&
      correctedLabel < session.schema.length &&
      correctedLabel !== item.label
    );
  }
  return false;
}

export function beginSubmit(session: Session): Session {
  return { ...session, submitting: true, banner: null };
}

/** Optimistic advance: drop the submitted item and focus the next one. */
export function submitSucceeded(session: Session, stats: StatsView): Session {
  const queue = session.queue.filter((_, i) => i !== session.position);
  return {
    ...session,
    phase: queue.length > 0 ? "reviewing" : "done",
    queue,
    position: Math.min(session.position, Math.max(queue.length - 1, 0)),
    form: EMPTY_FORM,
    stats,
    banner: null,
    submitting: false,
  };
}

/** Rejected submission: unlock the form, keep the entry, surface the message. */
export function submitFailed(session: Session, message: string): Session {
  return { ...session, submitting: false, banner: message };
}

export function focusItem(session: Session, position: number): Session {
  if (session.submitting || position < 0 || position >= session.queue.length) return session;
  return { ...session, position, form: EMPTY_FORM };
}
