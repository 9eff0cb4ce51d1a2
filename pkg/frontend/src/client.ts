/**
 * Connection and event plumbing between the server and the screen model.
 *
 * One GameClient is one participant in one tab: it joins the lobby over
 * HTTP, holds a single WebSocket, and re-renders whenever the server pushes
 * a message. Submissions are serialized so that at most one event per round
 * phase is in flight; repeat clicks before the next push are dropped here
 * and never reach the wire.
 */

import {
  type ClientMessage,
  type JoinResponse,
  type ServerMessage,
  joinUrl,
  parseServerMessage,
  wsUrl,
} from "./protocol.js";
import {
  type Screen,
  ProtocolViolation,
  consentScreen,
  gameOverScreen,
  lobbyScreen,
  partnerDroppedScreen,
  screenForView,
} from "./screens.js";
import { TEXT, fill } from "./text.js";

/** The subset of the browser WebSocket shape the client relies on. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export type Connection = "idle" | "connecting" | "open" | "retrying" | "lost";

export interface ClientState {
  screen: Screen;
  connection: Connection;
  /** Inline message from the latest server rejection; cleared on any push. */
  lastError: string | null;
}

export interface GameClientOptions {
  baseUrl: string;
  socketFactory?: SocketFactory;
  fetchFn?: FetchLike;
  /** Reconnect delays in ms; the attempt after the last entry gives up. */
  backoffMs?: readonly number[];
  sleep?: (ms: number) => Promise<void>;
  onChange?: (state: ClientState) => void;
}

const DEFAULT_BACKOFF_MS = [250, 500, 1000, 2000, 4000] as const;

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class GameClient {
  readonly state: ClientState;
  /** Every screen rendered on this connection, in order. */
  readonly screenTrace: Screen[] = [];

  private readonly baseUrl: string;
  private readonly socketFactory: SocketFactory;
  private readonly fetchFn: FetchLike;
  private readonly backoffMs: readonly number[];
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly onChange: (state: ClientState) => void;

  private token: string | null = null;
  private socket: SocketLike | null = null;
  /** Key of the submission awaiting a server response, if any. */
  private inflight: string | null = null;
  /** Rounds whose feedback was counted, so re-pushed views tally once. */
  private readonly scoredRounds = new Map<number, boolean>();
  private closedByUs = false;
  private terminal = false;
  private retrying = false;

  constructor(options: GameClientOptions) {
    this.baseUrl = options.baseUrl;
    this.socketFactory =
      options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.fetchFn = options.fetchFn ?? (fetch as unknown as FetchLike);
    this.backoffMs = options.backoffMs ?? DEFAULT_BACKOFF_MS;
    this.sleep = options.sleep ?? defaultSleep;
    this.onChange = options.onChange ?? (() => undefined);
    this.state = { screen: consentScreen(), connection: "idle", lastError: null };
    this.screenTrace.push(this.state.screen);
  }

  get score(): number {
    let total = 0;
    for (const correct of this.scoredRounds.values()) {
      if (correct) total += 1;
    }
    return total;
  }

  /** True while a submission is awaiting the next push; render disables buttons. */
  get choicesDisabled(): boolean {
    return this.inflight !== null;
  }

  /** Consent and join the lobby, then open the WebSocket. */
  async join(): Promise<JoinResponse> {
    const response = await this.fetchFn(joinUrl(this.baseUrl), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ consent: true }),
    });
    const body = (await response.json()) as Record<string, unknown>;
    if (response.status !== 200) {
      const reason = typeof body.error === "string" ? body.error : `status ${response.status}`;
      this.state.lastError = fill(TEXT.rejected, { error: reason });
      this.onChange(this.state);
      throw new Error(reason);
    }
    this.token = String(body.token);
    this.render(lobbyScreen());
    await this.connect();
    return { token: this.token, paired: Boolean(body.paired) };
  }

  submitSignal(signal: string): boolean {
    const round = this.state.screen.round ?? 0;
    return this.submit({ type: "send", round, payload: { signal } });
  }

  submitGuess(meaning: string): boolean {
    const round = this.state.screen.round ?? 0;
    return this.submit({ type: "guess", round, payload: { meaning } });
  }

  advance(): boolean {
    const round = this.state.screen.round ?? 0;
    return this.submit({ type: "advance", round, payload: {} });
  }

  /** End-of-game questionnaire; acknowledged with feedback_ack. */
  submitFeedback(text: string, tookNotes: boolean): boolean {
    const round = this.state.screen.round ?? 0;
    return this.submit({
      type: "feedback",
      round,
      payload: { text, took_notes: tookNotes },
    });
  }

  /** Close the connection deliberately; no reconnect will be attempted. */
  close(): void {
    this.closedByUs = true;
    this.socket?.close();
    this.socket = null;
  }

  /**
   * Send one client message unless an identical submission is already in
   * flight. Returns whether the message actually went out.
   */
  private submit(message: ClientMessage): boolean {
    if (this.socket === null) return false;
    // after game end only the questionnaire may still go out
    if (this.terminal && message.type !== "feedback") return false;
    const key = `${message.type}:${message.round}`;
    if (this.inflight === key) return false;
    this.inflight = key;
    this.socket.send(JSON.stringify(message));
    this.onChange(this.state);
    return true;
  }

  private async connect(): Promise<void> {
    if (this.token === null) throw new Error("join before connecting");
    this.state.connection = "connecting";
    this.onChange(this.state);
    await this.openSocket();
  }

  /** Resolves true once open, false if the socket closed before opening. */
  private openSocket(): Promise<boolean> {
    return new Promise((resolve) => {
      const socket = this.socketFactory(wsUrl(this.baseUrl, this.token ?? ""));
      this.socket = socket;
      socket.onopen = () => {
        this.state.connection = "open";
        this.onChange(this.state);
        resolve(true);
      };
      socket.onmessage = (ev) => {
        this.handleFrame(String(ev.data));
      };
      socket.onerror = () => undefined;
      socket.onclose = () => {
        if (this.socket === socket) this.socket = null;
        resolve(false);
        void this.handleClose();
      };
    });
  }

  private async handleClose(): Promise<void> {
    // A failed attempt's close event must not start a nested retry loop.
    if (this.closedByUs || this.terminal || this.retrying) return;
    this.retrying = true;
    try {
      for (const delay of this.backoffMs) {
        this.state.connection = "retrying";
        this.state.lastError = TEXT.connectionRetrying;
        this.onChange(this.state);
        await this.sleep(delay);
        if (this.closedByUs || this.terminal) return;
        if (await this.openSocket()) {
          this.state.lastError = null;
          this.onChange(this.state);
          return;
        }
      }
      this.state.connection = "lost";
      this.state.lastError = TEXT.connectionLost;
      this.onChange(this.state);
    } finally {
      this.retrying = false;
    }
  }

  private handleFrame(raw: string): void {
    let message: ServerMessage;
    try {
      message = parseServerMessage(raw);
    } catch {
      return;
    }
    this.handleMessage(message);
  }

  /** Exposed for tests that feed recorded payloads without a socket. */
  handleMessage(message: ServerMessage): void {
    switch (message.type) {
      case "waiting":
        this.inflight = null;
        this.render(lobbyScreen());
        break;
      case "view": {
        this.inflight = null;
        this.state.lastError = null;
        const view = message.payload;
        if (view.phase === "feedback_shown" && view.feedback !== null) {
          if (!this.scoredRounds.has(view.round)) {
            this.scoredRounds.set(view.round, view.feedback.correct);
          }
        }
        let screen: Screen;
        try {
          screen = screenForView(view, this.score);
        } catch (exc) {
          if (exc instanceof ProtocolViolation) {
            this.state.lastError = exc.message;
            this.onChange(this.state);
            return;
          }
          throw exc;
        }
        this.render(screen);
        break;
      }
      case "game_end":
        this.inflight = null;
        this.terminal = true;
        this.render(gameOverScreen(message.payload, this.score));
        break;
      case "partner_dropout":
        this.inflight = null;
        this.terminal = true;
        this.render(partnerDroppedScreen(TEXT.partnerDropped, message.round, this.score));
        break;
      case "error":
        // Rejection: show inline, leave the screen as it was, allow retry.
        this.inflight = null;
        this.state.lastError = fill(TEXT.rejected, { error: message.payload.error });
        this.onChange(this.state);
        break;
      case "feedback_ack":
        this.inflight = null;
        if (this.state.screen.screen === "game_over") {
          this.render({ ...this.state.screen, feedbackSubmitted: true });
        }
        break;
    }
  }

  private render(screen: Screen): void {
    this.state.screen = screen;
    this.screenTrace.push(screen);
    this.onChange(this.state);
  }
}
