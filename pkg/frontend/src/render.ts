/**
 * Turns a Screen into a flat view model (title, lines, buttons, form) and
 * writes that model into the DOM. The view model layer exists so tests can
 * assert on rendered content without a browser.
 */

import type { Screen } from "./screens.js";
import { TEXT, type UiText, fill } from "./text.js";

export interface ButtonVM {
  readonly label: string;
  /** Dispatch key: consent | signal:<word> | guess:<word> | advance | finish. */
  readonly action: string;
  readonly disabled: boolean;
  /** Highlighted render, used for the prompt marker on the sender screen. */
  readonly emphasized?: boolean;
}

export interface FormVM {
  readonly prompt: string;
  readonly question: string;
  readonly submitLabel: string;
}

export interface ScreenVM {
  readonly title: string;
  readonly lines: readonly string[];
  readonly buttons: readonly ButtonVM[];
  readonly form?: FormVM;
  readonly notice?: string;
}

function meaningsLine(screen: Screen, promptMarked: boolean): string {
  const words = (screen.meanings ?? []).map((m) => {
    const upper = m.toUpperCase();
    return promptMarked && m === screen.prompt ? `[${upper}]` : upper;
  });
  return words.join("   ");
}

/** Project one screen into renderable content. */
export function viewModel(
  screen: Screen,
  options: { disabled?: boolean; error?: string | null; text?: UiText } = {},
): ScreenVM {
  const text = options.text ?? TEXT;
  const disabled = options.disabled ?? false;
  const notice = options.error ?? undefined;
  switch (screen.screen) {
    case "consent":
      return {
        title: text.consentTitle,
        lines: text.consentBody,
        buttons: [{ label: text.consentButton, action: "consent", disabled }],
        notice,
      };
    case "lobby":
      return { title: text.consentTitle, lines: [text.lobbyWaiting], buttons: [], notice };
    case "sender_prompt": {
      const prompt = (screen.prompt ?? "").toUpperCase();
      if (screen.sentSignal !== undefined) {
        return {
          title: `Round ${screen.round}`,
          lines: [
            meaningsLine(screen, true),
            fill(text.senderSent, { prompt, signal: screen.sentSignal }),
            text.senderStandBy,
          ],
          buttons: [],
          notice,
        };
      }
      return {
        title: `Round ${screen.round}`,
        lines: [meaningsLine(screen, true), fill(text.senderInstruction, { prompt })],
        buttons: (screen.signalChoices ?? []).map((signal) => ({
          label: signal,
          action: `signal:${signal}`,
          disabled,
        })),
        notice,
      };
    }
    case "receiver_wait":
      return {
        title: `Round ${screen.round}`,
        lines: [meaningsLine(screen, false), text.receiverWaiting],
        buttons: [],
        notice,
      };
    case "receiver_guess":
      return {
        title: `Round ${screen.round}`,
        lines: [
          meaningsLine(screen, false),
          fill(text.receiverMessage, { signal: screen.receivedSignal ?? "" }),
          text.receiverInstruction,
        ],
        buttons: (screen.guessChoices ?? []).map((meaning) => ({
          label: meaning.toUpperCase(),
          action: `guess:${meaning}`,
          disabled,
        })),
        notice,
      };
    case "feedback": {
      const fb = screen.feedback;
      const outcome =
        fb === undefined
          ? ""
          : fb.correct
            ? fill(text.feedbackCorrect, {
                prompt: fb.prompt.toUpperCase(),
                signal: fb.signal,
              })
            : fill(text.feedbackWrong, {
                prompt: fb.prompt.toUpperCase(),
                signal: fb.signal,
                guess: fb.guess.toUpperCase(),
              });
      return {
        title: `Round ${screen.round}`,
        lines: [outcome, fill(text.scoreLine, { score: screen.score ?? 0 })],
        buttons: [{ label: text.feedbackContinue, action: "advance", disabled }],
        notice,
      };
    }
    case "game_over": {
      if (screen.notice !== undefined) {
        return { title: text.gameOverTitle, lines: [screen.notice], buttons: [], notice };
      }
      if (screen.feedbackSubmitted === true) {
        return {
          title: text.gameOverTitle,
          lines: [text.gameOverThanks],
          buttons: [],
          notice,
        };
      }
      const summary = screen.summary;
      const scoreLine =
        summary === undefined
          ? ""
          : fill(text.gameOverScore, {
              correct: summary.total_correct,
              rounds: summary.rounds_played,
            });
      return {
        title: text.gameOverTitle,
        lines: [scoreLine],
        buttons: [],
        form: {
          prompt: text.gameOverFeedbackPrompt,
          question: text.gameOverNotesQuestion,
          submitLabel: text.gameOverSubmit,
        },
        notice,
      };
    }
  }
}

export type ActionHandler = (action: string, formText?: string, tookNotes?: boolean) => void;

/** Replace the contents of `root` with the rendered view model. */
export function mount(root: HTMLElement, vm: ScreenVM, onAction: ActionHandler): void {
  root.textContent = "";
  const title = document.createElement("h1");
  title.textContent = vm.title;
  root.appendChild(title);
  if (vm.notice !== undefined) {
    const notice = document.createElement("p");
    notice.className = "notice";
    notice.textContent = vm.notice;
    root.appendChild(notice);
  }
  for (const line of vm.lines) {
    const p = document.createElement("p");
    p.textContent = line;
    root.appendChild(p);
  }
  const row = document.createElement("div");
  row.className = "buttons";
  for (const button of vm.buttons) {
    const el = document.createElement("button");
    el.textContent = button.label;
    el.disabled = button.disabled;
    el.addEventListener("click", () => onAction(button.action));
    row.appendChild(el);
  }
  root.appendChild(row);
  if (vm.form !== undefined) {
    const form = vm.form;
    const prompt = document.createElement("p");
    prompt.textContent = form.prompt;
    root.appendChild(prompt);
    const textarea = document.createElement("textarea");
    textarea.rows = 4;
    root.appendChild(textarea);
    const question = document.createElement("p");
    question.textContent = form.question;
    root.appendChild(question);
    const notes = document.createElement("input");
    notes.type = "checkbox";
    const notesLabel = document.createElement("label");
    notesLabel.appendChild(notes);
    notesLabel.appendChild(document.createTextNode(" " + TEXT.gameOverNotesYes));
    root.appendChild(notesLabel);
    const submit = document.createElement("button");
    submit.textContent = form.submitLabel;
    submit.addEventListener("click", () =>
      onAction("finish", textarea.value, notes.checked),
    );
    root.appendChild(submit);
  }
}
