/** Wire types mirroring the review service's JSON payloads. */

export type ItemStatus = "pending" | "done";

export type Verdict = "correct" | "incorrect";

/** One queue entry, exactly as GET /api/queue returns it. */
export interface QueueItemView {
  id: string;
  text: string;
  /** consensus class index */
  label: number;
  label_name: string;
  /** one vote per ensemble run */
  votes: number[];
  confidences: number[];
  unanimity: number;
  tie_broken: boolean;
  assignees: string[];
  status: ItemStatus;
}

export interface QueuePayload {
  schema: string[];
  num_runs: number;
  items: QueueItemView[];
}

export interface AnnotationView {
  verdict: Verdict;
  ts: string;
  corrected_label?: number;
}

/** GET /api/items/<id>: the queue view plus verdicts recorded so far. */
export interface ItemDetail extends QueueItemView {
  annotations: Record<string, AnnotationView>;
}

export interface StatsView {
  total: number;
  done: number;
  pending: number;
  per_annotator: Record<string, number>;
  /** absent until at least one shared item is finished by all assignees */
  agreement_rate?: number;
  schema?: string[];
}

export interface AnnotationRequest {
  item_id: string;
  annotator: string;
  verdict: Verdict;
  corrected_label?: number;
}

export interface SubmitReply {
  item_id: string;
  status: ItemStatus;
  stats: StatsView;
}
