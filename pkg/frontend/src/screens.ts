/**
 * Pure mapping from server payloads to the screen the participant sees.
 *
 * The client holds no authoritative game state: a Screen is a projection of
 * the most recent server push plus a running score tally, nothing else. The
 * same payload always maps to the same screen.
 */

import type { FeedbackTriple, SummaryPayload, ViewPayload } from "./protocol.js";

export type ScreenName =
  | "consent"
  | "lobby"
  | "sender_prompt"
  | "receiver_wait"
  | "receiver_guess"
  | "feedback"
  | "game_over";

export interface Screen {
  readonly screen: ScreenName;
  readonly round?: number;
  /** Both displayed meanings in the server-committed order, never re-sorted. */
  readonly meanings?: readonly string[];
  /** Target marker; present only on sender and feedback screens. */
  readonly prompt?: string;
  readonly signalChoices?: readonly string[];
  /** Set once the sender has sent: the screen becomes a stand-by notice. */
  readonly sentSignal?: string;
  /** The code word shown to the receiver on the guess screen. */
  readonly receivedSignal?: string;
  readonly guessChoices?: readonly string[];
  readonly feedback?: FeedbackTriple;
  /** Correct guesses observed so far on this connection. */
  readonly score?: number;
  readonly summary?: SummaryPayload;
  /** Terminal notice for partner dropout. */
  readonly notice?: string;
  /** True after the end-of-game questionnaire has been acknowledged. */
  readonly feedbackSubmitted?: boolean;
}

/** Raised when a payload breaks a protocol guarantee the UI relies on. */
export class ProtocolViolation extends Error {}

/**
 * Map one view payload to a screen. Throws ProtocolViolation if the payload
 * leaks the prompt to the receiver before feedback; the client must not
 * render such a frame.
 */
export function screenForView(view: ViewPayload, score: number): Screen {
  if (view.role === "receiver" && view.phase !== "feedback_shown" && view.prompt !== null) {
    throw new ProtocolViolation(
      `prompt leaked to receiver in round ${view.round} during ${view.phase}`,
    );
  }
  const base = { round: view.round, meanings: view.meanings, score };
  if (view.phase === "awaiting_signal") {
    if (view.role === "sender") {
      return {
        screen: "sender_prompt",
        ...base,
        prompt: view.prompt ?? undefined,
        signalChoices: view.signal_choices,
      };
    }
    return { screen: "receiver_wait", ...base };
  }
  if (view.phase === "awaiting_guess") {
    if (view.role === "sender") {
      return {
        screen: "sender_prompt",
        ...base,
        prompt: view.prompt ?? undefined,
        sentSignal: view.signal ?? undefined,
      };
    }
    return {
      screen: "receiver_guess",
      ...base,
      receivedSignal: view.signal ?? undefined,
      guessChoices: view.guess_choices,
    };
  }
  if (view.feedback === null) {
    throw new ProtocolViolation(`feedback view without outcome in round ${view.round}`);
  }
  return {
    screen: "feedback",
    ...base,
    prompt: view.prompt ?? undefined,
    feedback: view.feedback,
  };
}

export function consentScreen(): Screen {
  return { screen: "consent" };
}

export function lobbyScreen(): Screen {
  return { screen: "lobby" };
}

export function gameOverScreen(summary: SummaryPayload, score: number): Screen {
  return { screen: "game_over", round: summary.rounds_played, summary, score };
}

export function partnerDroppedScreen(reason: string, round: number, score: number): Screen {
  return { screen: "game_over", round, notice: reason, score };
}

/**
 * Compact label for a screen, used to compare a rendered sequence against
 * an engine view trace. Distinguishes the sender's choose and stand-by
 * states so the trace is one entry per engine phase.
 */
export function traceLabel(screen: Screen): string {
  switch (screen.screen) {
    case "sender_prompt":
      return screen.sentSignal === undefined
        ? `sender_prompt:${screen.round}:choose`
        : `sender_prompt:${screen.round}:sent`;
    case "receiver_wait":
    case "receiver_guess":
    case "feedback":
      return `${screen.screen}:${screen.round}`;
    default:
      return screen.screen;
  }
}
