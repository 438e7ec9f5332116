/** HTML renderers: session state in, markup out.
 *
 * Every view is a pure string producer; the entry point re-renders the whole
 * app on each state change and wires events by data-action delegation. Keeping
 * the DOM out of this module lets the rendering be tested as plain functions.
 */

import {
  escapeHtml,
  formatAgreement,
  formatConfidence,
  formatProgress,
  statsSummary,
} from "./format.js";
import { currentItem, formValid, type Session } from "./state.js";
import type { QueueItemView, StatsView } from "./types.js";

export function renderStatsPanel(stats: StatsView | null): string {
  if (stats === null) {
    return `<section class="stats" aria-label="progress"></section>`;
  }
  const finished = stats.done === stats.total;
  const agreement =
    stats.agreement_rate === undefined
      ? ""
      : `<span class="stats-agreement">agreement ${formatAgreement(stats.agreement_rate)}</span>`;
  return `
    <section class="stats${finished ? " stats-complete" : ""}" aria-label="progress">
      <span class="stats-progress">${formatProgress(stats.done, stats.total)}</span>
      ${agreement}
      ${finished ? `<span class="stats-done-note">review complete</span>` : ""}
    </section>`;
}

export function renderBanner(message: string | null): string {
  if (message === null) return "";
  return `
    <div class="banner" role="alert">
      <span>${escapeHtml(message)}</span>
      <button type="button" data-action="retry">Retry</button>
    </div>`;
}

function unanimityBadge(item: QueueItemView, numRuns: number): string {
  const tie = item.tie_broken ? " (tie)" : "";
  return `<span class="badge unanimity-${item.unanimity}">${item.unanimity}/${numRuns}${tie}</span>`;
}

export function renderQueueList(session: Session): string {
  const cards = session.queue
    .map((item, i) => {
      const focused = i === session.position ? " card-focused" : "";
      return `
        <li class="card${focused}" data-action="focus" data-position="${i}" data-id="${escapeHtml(item.id)}">
          ${unanimityBadge(item, session.numRuns)}
          <span class="card-id">${escapeHtml(item.id)}</span>
          <span class="card-label">${escapeHtml(item.label_name)}</span>
        </li>`;
    })
    .join("");
  return `<ol class="queue" aria-label="pending items">${cards}</ol>`;
}

function renderVotes(item: QueueItemView, schema: string[]): string {
  const rows = item.votes
    .map((vote, run) => {
      const name = schema[vote] ?? String(vote);
      return `
        <tr>
          <td>run ${run}</td>
          <td>${escapeHtml(name)}</td>
          <td class="numeric">${formatConfidence(item.confidences[run])}</td>
        </tr>`;
    })
    .join("");
  return `
    <table class="votes">
      <thead><tr><th>run</th><th>vote</th><th>confidence</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderVerdictForm(session: Session): string {
  const item = currentItem(session);
  if (item === null) return "";
  const { verdict, correctedLabel } = session.form;
  const lock = session.submitting ? " disabled" : "";

  const labelButtons = session.schema
    .map((name, index) => {
      const isConsensus = index === item.label;
      const picked = correctedLabel === index ? " picked" : "";
      const usable = verdict === "incorrect" && !isConsensus && !session.submitting;
      return `
        <button type="button" class="label-pick${picked}" data-action="pick-label"
                data-label="${index}" ${usable ? "" : "disabled"}
                title="${isConsensus ? "already the consensus label" : `key ${index + 1}`}">
          ${index + 1} ${escapeHtml(name)}
        </button>`;
    })
    .join("");

  return `
    <form class="verdict" data-action="submit-form">
      <div class="verdict-choice">
        <button type="button" data-action="verdict-correct"
                class="${verdict === "correct" ? "picked" : ""}"${lock}>
          Correct <kbd>c</kbd>
        </button>
        <button type="button" data-action="verdict-incorrect"
                class="${verdict === "incorrect" ? "picked" : ""}"${lock}>
          Incorrect <kbd>x</kbd>
        </button>
      </div>
      <div class="verdict-labels${verdict === "incorrect" ? "" : " inactive"}">
        ${labelButtons}
      </div>
      <button type="submit" class="submit" data-action="submit"
              ${formValid(session) && !session.submitting ? "" : "disabled"}>
        Submit <kbd>enter</kbd>
      </button>
    </form>`;
}

export function renderFocusedItem(session: Session): string {
  const item = currentItem(session);
  if (item === null) return "";
  return `
    <article class="item">
      <header>
        <span class="item-id">${escapeHtml(item.id)}</span>
        ${unanimityBadge(item, session.numRuns)}
      </header>
      <p class="item-text">${escapeHtml(item.text)}</p>
      <p class="consensus">
        consensus: <strong>${escapeHtml(item.label_name)}</strong>
      </p>
      ${renderVotes(item, session.schema)}
      ${renderVerdictForm(session)}
    </article>`;
}

export function renderApp(session: Session): string {
  const header = `
    <header class="top">
      <h1>label review</h1>
      <span class="annotator">${escapeHtml(session.annotator)}</span>
      ${renderStatsPanel(session.stats)}
    </header>`;

  let main: string;
  switch (session.phase) {
    case "loading":
      main = `<p class="status-line">loading queue…</p>`;
      break;
    case "error":
      main = `<p class="status-line">could not reach the review service.</p>`;
      break;
    case "done":
      main = `<p class="status-line all-done">All done — nothing left to review.</p>`;
      break;
    case "reviewing":
      main = `
        <div class="layout">
          ${renderQueueList(session)}
          ${renderFocusedItem(session)}
        </div>`;
      break;
  }
  return `${header}${renderBanner(session.banner)}<main>${main}</main>`;
}
