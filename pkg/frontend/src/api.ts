/** Thin fetch client for the review service. All methods reject with ApiError
 * on non-2xx replies, carrying the HTTP status and the server's message. */

import type {
  AnnotationRequest,
  ItemDetail,
  QueuePayload,
  StatsView,
  SubmitReply,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function reply<T>(response: Response): Promise<T> {
  let body: unknown;
  try {
    body = await response.json();
  } catch {
    throw new ApiError(response.status, `invalid reply (HTTP ${response.status})`);
  }
  if (!response.ok) {
    const message =
      typeof body === "object" && body !== null && "error" in body
        ? String((body as { error: unknown }).error)
        : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export class ReviewApi {
  constructor(readonly baseUrl: string = "") {}

  async queue(annotator?: string): Promise<QueuePayload> {
    const suffix = annotator ? `?annotator=${encodeURIComponent(annotator)}` : "";
    return reply(await fetch(`${this.baseUrl}/api/queue${suffix}`));
  }

  async item(id: string): Promise<ItemDetail> {
    return reply(await fetch(`${this.baseUrl}/api/items/${encodeURIComponent(id)}`));
  }

  async stats(): Promise<StatsView> {
    return reply(await fetch(`${this.baseUrl}/api/stats`));
  }

  async submit(request: AnnotationRequest): Promise<SubmitReply> {
    return reply(
      await fetch(`${this.baseUrl}/api/annotations`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      }),
    );
  }
}
