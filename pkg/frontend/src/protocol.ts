/**
 * Wire types for the game server's HTTP + WebSocket protocol.
 *
 * Every server push is an envelope {type, round, payload, seq} where seq
 * increases by one per message on a given connection. Every client message
 * is {type, round, payload}. The client never invents state: everything
 * rendered comes out of these payloads.
 */

export type Phase = "awaiting_signal" | "awaiting_guess" | "feedback_shown";

export type Role = "sender" | "receiver";

/** Outcome block attached to every feedback-phase view. */
export interface FeedbackTriple {
  readonly signal: string;
  readonly prompt: string;
  readonly guess: string;
  readonly correct: boolean;
}

/**
 * One player's screen contents for the current round, exactly as the
 * engine serializes them. `meanings` comes in this player's committed
 * display order and must never be re-sorted. `prompt` is only ever
 * present for the sender before feedback.
 */
export interface ViewPayload {
  readonly player: string;
  readonly role: Role;
  readonly round: number;
  readonly phase: Phase;
  readonly meanings: readonly string[];
  readonly prompt: string | null;
  readonly signal: string | null;
  readonly signal_choices: readonly string[];
  readonly guess_choices: readonly string[];
  readonly feedback: FeedbackTriple | null;
}

/** Final tallies pushed once the last round has been advanced past. */
export interface SummaryPayload {
  readonly rounds_played: number;
  readonly total_correct: number;
  readonly post_burn_in_correct: number;
  readonly finished: boolean;
}

export interface ErrorPayload {
  readonly code: string;
  readonly error: string;
}

export type ServerMessage =
  | { type: "waiting"; round: number; payload: { status: string }; seq: number }
  | { type: "view"; round: number; payload: ViewPayload; seq: number }
  | { type: "game_end"; round: number; payload: SummaryPayload; seq: number }
  | { type: "partner_dropout"; round: number; payload: { reason: string }; seq: number }
  | { type: "error"; round: number; payload: ErrorPayload; seq: number }
  | { type: "feedback_ack"; round: number; payload: Record<string, never>; seq: number };

export type ClientMessage =
  | { type: "send"; round: number; payload: { signal: string } }
  | { type: "guess"; round: number; payload: { meaning: string } }
  | { type: "advance"; round: number; payload: Record<string, never> }
  | { type: "feedback"; round: number; payload: { text: string; took_notes: boolean } };

export interface JoinResponse {
  readonly token: string;
  readonly paired: boolean;
}

const SERVER_TYPES = new Set([
  "waiting",
  "view",
  "game_end",
  "partner_dropout",
  "error",
  "feedback_ack",
]);

/** Parse one raw frame; rejects anything that is not a known envelope. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error(`unparseable server frame: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null) {
    throw new Error("server frame is not an object");
  }
  const msg = data as Record<string, unknown>;
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) {
    throw new Error(`unknown server message type ${String(msg.type)}`);
  }
  if (typeof msg.round !== "number" || typeof msg.seq !== "number") {
    throw new Error(`malformed envelope for type ${msg.type}`);
  }
  return data as ServerMessage;
}

/** WebSocket endpoint for a joined participant. */
export function wsUrl(baseUrl: string, token: string): string {
  const ws = baseUrl.replace(/^http/, "ws").replace(/\/$/, "");
  return `${ws}/api/ws?token=${encodeURIComponent(token)}`;
}

export function joinUrl(baseUrl: string): string {
  return `${baseUrl.replace(/\/$/, "")}/api/join`;
}
