/**
 * Browser entry point: wires the GameClient to the renderer on the page
 * served next to the game server (same origin).
 */

import { GameClient } from "./client.js";
import { mount, viewModel } from "./render.js";

function start(): void {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app element");

  const client = new GameClient({
    baseUrl: window.location.origin,
    onChange: (state) => {
      const vm = viewModel(state.screen, {
        disabled: client.choicesDisabled,
        error: state.lastError,
      });
      mount(root, vm, handleAction);
    },
  });

  function handleAction(action: string, formText?: string, tookNotes?: boolean): void {
    if (action === "consent") {
      void client.join().catch(() => undefined);
      return;
    }
    if (action === "advance") {
      client.advance();
      return;
    }
    if (action === "finish") {
      client.submitFeedback(formText ?? "", tookNotes ?? false);
      return;
    }
    const [kind, value] = action.split(":", 2);
    if (kind === "signal" && value !== undefined) client.submitSignal(value);
    if (kind === "guess" && value !== undefined) client.submitGuess(value);
  }

  mount(root, viewModel(client.state.screen), handleAction);
}

start();
