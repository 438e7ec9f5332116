/** Display formatting helpers shared by the renderer. */

import type { StatsView } from "./types.js";

export function formatProgress(done: number, total: number): string {
  return `${done}/${total}`;
}

/** 0.952 -> "95.2%" */
export function formatAgreement(rate: number): string {
  return `${(rate * 100).toFixed(1)}%`;
}

/** One-line stats summary: progress, then agreement when it exists.
 * {total: 444, done: 104, agreement_rate: 0.952} -> "104/444, agreement 95.2%" */
export function statsSummary(stats: StatsView): string {
  const progress = formatProgress(stats.done, stats.total);
  if (stats.agreement_rate === undefined) return progress;
  return `${progress}, agreement ${formatAgreement(stats.agreement_rate)}`;
}

export function formatConfidence(value: number): string {
  return value.toFixed(2);
}

const HTML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => HTML_ESCAPES[ch]);
}
