/**
 * Every participant-facing string lives here so instructions can be edited
 * without touching game logic. Templates take named slots in {braces}.
 */

export const TEXT = {
  consentTitle: "The Espionage Game",
  consentBody: [
    "You and a partner are secret agents. Your mission is to pass messages " +
      "using code words so the enemy cannot read them.",
    "In each round one of you sees a target word and picks a code word to " +
      "send it. The other sees only the code word and guesses which of two " +
      "words was meant. You both see whether the guess was right.",
    "There are fewer code words than targets, so you will have to make " +
      "some code words do double duty. How is up to the two of you.",
    "Please do not take any written notes during the game. We will ask " +
      "about this at the end.",
    "Participation is voluntary and you may stop at any time. Click below " +
      "to consent and join the game.",
  ],
  consentButton: "I consent, start the mission",

  lobbyWaiting: "Waiting for a partner agent to join...",

  senderInstruction: "Communicate {prompt} using...",
  senderSent: "Sent {prompt} using {signal}",
  senderStandBy: "Stand by...",

  receiverWaiting: "Waiting for message...",
  receiverMessage: "Message: {signal}",
  receiverInstruction: "This means:",

  feedbackCorrect: "Correct guess!  {prompt} = {signal}",
  feedbackWrong: "Wrong guess.  {prompt} = {signal}, your partner guessed {guess}",
  feedbackContinue: "Continue",
  scoreLine: "Correct so far: {score}",

  gameOverTitle: "Mission complete",
  gameOverScore: "Correct guesses: {correct} of {rounds}",
  gameOverFeedbackPrompt:
    "Any comments on the game or the code words you two settled on?",
  gameOverNotesQuestion: "Did you take any written notes during the game?",
  gameOverNotesYes: "Yes",
  gameOverNotesNo: "No",
  gameOverSubmit: "Send and finish",
  gameOverThanks: "Thank you! You can close this window.",

  partnerDropped:
    "Your partner left the game. The session has ended; you can close this window.",
  connectionRetrying: "Connection lost, trying to reconnect...",
  connectionLost:
    "Could not reach the server. Please check your connection and reload.",
  rejected: "The server rejected that: {error}",
} as const;

export type UiText = typeof TEXT;

/** Fill {slots} in a template from the given values. */
export function fill(template: string, slots: Record<string, string | number>): string {
  return template.replace(/\{(\w+)\}/g, (whole, name: string) => {
    const value = slots[name];
    return value === undefined ? whole : String(value);
  });
}
