"""Pure state machine for one dyad's signaling game.

Players A and B alternate sender/receiver roles every round. Each round
walks through three phases: the sender picks a signal for the prompted
meaning, the receiver guesses which displayed meaning was meant, and both
players see the same feedback before the game advances. States are
immutable; transitions return new states, so snapshots can be shared and
logs replayed bit for bit.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from colexgame.lexicon import StimulusBundle
from colexgame.schedule import Trial, TrialSchedule

PLAYERS = ("A", "B")

AWAITING_SIGNAL = "awaiting_signal"
AWAITING_GUESS = "awaiting_guess"
FEEDBACK_SHOWN = "feedback_shown"

SENDER = "sender"
RECEIVER = "receiver"


class EngineError(Exception):
    """Base for game state machine violations."""


class WrongPlayerError(EngineError):
    pass


class WrongPhaseError(EngineError):
    pass


class UnknownSignalError(EngineError):
    pass


class MeaningNotDisplayedError(EngineError):
    pass


class GameFinishedError(EngineError):
    pass


class StimulusMismatchError(EngineError):
    pass


def other_player(player: str) -> str:
    return "B" if player == "A" else "A"


@dataclass(frozen=True)
class RoundRecord:
    round: int
    sender: str
    pair: tuple[str, str]
    prompt: str
    signal: str
    guess: str
    correct: bool
    signal_t_ms: int = 0
    guess_t_ms: int = 0


@dataclass(frozen=True)
class GameState:
    stimulus: StimulusBundle
    schedule: TrialSchedule
    seed: int
    first_sender: str
    # (order for A, order for B) per round, committed at game start
    display_orders: tuple[tuple[tuple[str, str], tuple[str, str]], ...]
    round: int = 1
    phase: str = AWAITING_SIGNAL
    history: tuple[RoundRecord, ...] = ()
    pending_signal: str | None = None
    pending_signal_t_ms: int = 0

    @property
    def n_rounds(self) -> int:
        return len(self.schedule.trials)

    @property
    def finished(self) -> bool:
        return self.round > self.n_rounds

    @property
    def current_trial(self) -> Trial:
        return self.schedule.trials[self.round - 1]

    def sender_for(self, round_no: int) -> str:
        if round_no % 2 == 1:
            return self.first_sender
        return other_player(self.first_sender)

    @property
    def sender(self) -> str:
        return self.sender_for(self.round)

    @property
    def receiver(self) -> str:
        return other_player(self.sender)

    def display_order(self, round_no: int, player: str) -> tuple[str, str]:
        return self.display_orders[round_no - 1][PLAYERS.index(player)]


def new_game(
    stimulus: StimulusBundle, schedule: TrialSchedule, seed: int
) -> GameState:
    """Fresh game at round 1. The seed fixes who sends first and each
    player's left/right meaning order for every round."""
    meanings = set(stimulus.space.meanings())
    for t in schedule.trials:
        missing = [m for m in t.pair if m not in meanings]
        if missing:
            raise StimulusMismatchError(
                f"round {t.round}: schedule meanings {missing} absent "
                "from the stimulus meaning space"
            )
    rng = random.Random(seed)
    first = "A" if rng.random() < 0.5 else "B"
    orders = []
    for t in schedule.trials:
        per_player = []
        for _ in PLAYERS:
            a, b = t.pair
            per_player.append((a, b) if rng.random() < 0.5 else (b, a))
        orders.append(tuple(per_player))
    return GameState(
        stimulus=stimulus,
        schedule=schedule,
        seed=seed,
        first_sender=first,
        display_orders=tuple(orders),
    )


@dataclass(frozen=True)
class PlayerView:
    player: str
    role: str
    round: int
    phase: str
    meanings: tuple[str, str]
    prompt: str | None = None
    signal: str | None = None
    signal_choices: tuple[str, ...] = ()
    guess_choices: tuple[str, ...] = ()
    feedback: dict | None = None

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "role": self.role,
            "round": self.round,
            "phase": self.phase,
            "meanings": list(self.meanings),
            "prompt": self.prompt,
            "signal": self.signal,
            "signal_choices": list(self.signal_choices),
            "guess_choices": list(self.guess_choices),
            "feedback": self.feedback,
        }


def view_for(state: GameState, player: str) -> PlayerView:
    """What a player's screen shows right now. The receiver never sees the
    prompt before feedback."""
    if player not in PLAYERS:
        raise WrongPlayerError(f"unknown player {player!r}")
    if state.finished:
        raise GameFinishedError("game is finished")
    trial = state.current_trial
    meanings = state.display_order(state.round, player)
    role = SENDER if player == state.sender else RECEIVER
    common = dict(
        player=player, role=role, round=state.round, phase=state.phase,
        meanings=meanings,
    )
    if state.phase == AWAITING_SIGNAL:
        if role == SENDER:
            return PlayerView(
                prompt=trial.prompt,
                signal_choices=state.stimulus.signals.signals,
                **common,
            )
        return PlayerView(**common)
    if state.phase == AWAITING_GUESS:
        if role == SENDER:
            return PlayerView(prompt=trial.prompt, signal=state.pending_signal,
                              **common)
        return PlayerView(
            signal=state.pending_signal, guess_choices=meanings, **common
        )
    record = state.history[-1]
    feedback = {
        "signal": record.signal,
        "prompt": record.prompt,
        "guess": record.guess,
        "correct": record.correct,
    }
    return PlayerView(
        prompt=record.prompt, signal=record.signal, feedback=feedback, **common
    )


def apply_send(
    state: GameState, player: str, signal: str, t_ms: int = 0
) -> GameState:
    if state.finished:
        raise GameFinishedError("game is finished")
    if state.phase != AWAITING_SIGNAL:
        raise WrongPhaseError(f"cannot send during {state.phase}")
    if player != state.sender:
        raise WrongPlayerError(
            f"player {player} is not the sender in round {state.round}"
        )
    if signal not in state.stimulus.signals:
        raise UnknownSignalError(f"signal {signal!r} is not in the signal set")
    return replace(
        state,
        phase=AWAITING_GUESS,
        pending_signal=signal,
        pending_signal_t_ms=t_ms,
    )


def apply_guess(
    state: GameState, player: str, meaning: str, t_ms: int = 0
) -> GameState:
    if state.finished:
        raise GameFinishedError("game is finished")
    if state.phase != AWAITING_GUESS:
        raise WrongPhaseError(f"cannot guess during {state.phase}")
    if player != state.receiver:
        raise WrongPlayerError(
            f"player {player} is not the receiver in round {state.round}"
        )
    trial = state.current_trial
    if meaning not in trial.pair:
        raise MeaningNotDisplayedError(
            f"meaning {meaning!r} is not displayed in round {state.round}"
        )
    record = RoundRecord(
        round=state.round,
        sender=state.sender,
        pair=trial.pair,
        prompt=trial.prompt,
        signal=state.pending_signal,
        guess=meaning,
        correct=meaning == trial.prompt,
        signal_t_ms=state.pending_signal_t_ms,
        guess_t_ms=t_ms,
    )
    return replace(
        state, phase=FEEDBACK_SHOWN, history=state.history + (record,)
    )


def advance(state: GameState) -> GameState:
    """Leave the feedback screen; roles switch because the round number
    advances."""
    if state.finished:
        raise GameFinishedError("game is finished")
    if state.phase != FEEDBACK_SHOWN:
        raise WrongPhaseError(f"cannot advance during {state.phase}")
    return replace(
        state,
        round=state.round + 1,
        phase=AWAITING_SIGNAL,
        pending_signal=None,
        pending_signal_t_ms=0,
    )


@dataclass(frozen=True)
class GameSummary:
    rounds_played: int
    total_correct: int
    post_burn_in_correct: int
    finished: bool

    def to_dict(self) -> dict:
        return {
            "rounds_played": self.rounds_played,
            "total_correct": self.total_correct,
            "post_burn_in_correct": self.post_burn_in_correct,
            "finished": self.finished,
        }


def game_summary(state: GameState) -> GameSummary:
    burn = state.schedule.burn_in_length
    return GameSummary(
        rounds_played=len(state.history),
        total_correct=sum(1 for r in state.history if r.correct),
        post_burn_in_correct=sum(
            1 for r in state.history if r.correct and r.round > burn
        ),
        finished=state.finished,
    )


# --- dyad log (JSONL) ---

GAME_START = "game_start"
SEND = "send"
GUESS = "guess"
FEEDBACK = "feedback"
ADVANCE = "advance"
GAME_END = "game_end"
DROPOUT = "dropout"
EVENTS = (GAME_START, SEND, GUESS, FEEDBACK, ADVANCE, GAME_END, DROPOUT)


@dataclass(frozen=True)
class LogEvent:
    event: str
    round: int
    player: str | None
    payload: dict
    t_ms: int

    def to_line(self) -> str:
        return json.dumps(
            {
                "event": self.event,
                "round": self.round,
                "player": self.player,
                "payload": self.payload,
                "t_ms": self.t_ms,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "LogEvent":
        d = json.loads(line)
        ev = cls(
            event=d["event"],
            round=d["round"],
            player=d["player"],
            payload=d["payload"],
            t_ms=d["t_ms"],
        )
        if ev.event not in EVENTS:
            raise ValueError(f"unknown event {ev.event!r}")
        return ev


def game_start_event(
    dyad_id: str,
    condition: str,
    stimulus: StimulusBundle,
    schedule: TrialSchedule,
    engine_seed: int,
    first_sender: str,
    t_ms: int = 0,
) -> LogEvent:
    """Opening log line; carries everything needed to replay the game from
    nothing but the log."""
    return LogEvent(
        event=GAME_START,
        round=0,
        player=None,
        payload={
            "dyad_id": dyad_id,
            "condition": condition,
            "stimulus": stimulus.to_dict(),
            "schedule": json.loads(schedule.to_json()),
            "engine_seed": engine_seed,
            "first_sender": first_sender,
        },
        t_ms=t_ms,
    )


def send_event(round_no: int, player: str, signal: str, t_ms: int = 0) -> LogEvent:
    return LogEvent(SEND, round_no, player, {"signal": signal}, t_ms)


def guess_event(round_no: int, player: str, meaning: str, t_ms: int = 0) -> LogEvent:
    return LogEvent(GUESS, round_no, player, {"meaning": meaning}, t_ms)


def feedback_event(record: RoundRecord, t_ms: int = 0) -> LogEvent:
    return LogEvent(
        FEEDBACK,
        record.round,
        None,
        {
            "signal": record.signal,
            "prompt": record.prompt,
            "guess": record.guess,
            "correct": record.correct,
        },
        t_ms,
    )


def advance_event(round_no: int, t_ms: int = 0) -> LogEvent:
    return LogEvent(ADVANCE, round_no, None, {}, t_ms)


def game_end_event(summary: GameSummary, round_no: int, t_ms: int = 0) -> LogEvent:
    return LogEvent(GAME_END, round_no, None, summary.to_dict(), t_ms)


def dropout_event(
    round_no: int, player: str | None, reason: str, t_ms: int = 0
) -> LogEvent:
    return LogEvent(DROPOUT, round_no, player, {"reason": reason}, t_ms)


def write_log(events: Iterable[LogEvent]) -> str:
    return "".join(e.to_line() + "\n" for e in events)


def parse_log(text: str) -> list[LogEvent]:
    return [LogEvent.from_line(ln) for ln in text.splitlines() if ln.strip()]


@dataclass
class ReplayReport:
    state: GameState | None
    violations: list[str] = field(default_factory=list)
    dropped_out: bool = False
    saw_game_end: bool = False
    dyad_id: str | None = None
    condition: str | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def complete(self) -> bool:
        return (
            self.state is not None
            and self.state.finished
            and not self.dropped_out
        )


def replay_log(events: Iterable[LogEvent]) -> ReplayReport:
    """Re-runs a dyad log through the state machine, checking every recorded
    feedback and the final summary against what the engine derives. Any
    divergence or illegal transition lands in the violation list."""
    report = ReplayReport(state=None)
    it: Iterator[LogEvent] = iter(events)
    first = next(it, None)
    if first is None or first.event != GAME_START:
        report.violations.append("log does not open with game_start")
        return report
    p = first.payload
    report.dyad_id = p.get("dyad_id")
    report.condition = p.get("condition")
    try:
        stimulus = StimulusBundle.from_dict(p["stimulus"])
        schedule = TrialSchedule.from_json(json.dumps(p["schedule"]))
        state = new_game(stimulus, schedule, p["engine_seed"])
    except (KeyError, ValueError, EngineError) as exc:
        report.violations.append(f"cannot rebuild game from game_start: {exc}")
        return report
    if state.first_sender != p.get("first_sender"):
        report.violations.append(
            f"first_sender {p.get('first_sender')!r} does not match "
            f"engine seed (expected {state.first_sender!r})"
        )
    report.state = state

    for ev in it:
        try:
            if ev.event == SEND:
                if ev.round != state.round:
                    report.violations.append(
                        f"send names round {ev.round}, game is at {state.round}"
                    )
                state = apply_send(state, ev.player, ev.payload["signal"], ev.t_ms)
            elif ev.event == GUESS:
                if ev.round != state.round:
                    report.violations.append(
                        f"guess names round {ev.round}, game is at {state.round}"
                    )
                state = apply_guess(state, ev.player, ev.payload["meaning"], ev.t_ms)
            elif ev.event == FEEDBACK:
                record = state.history[-1] if state.history else None
                if (
                    record is None
                    or state.phase != FEEDBACK_SHOWN
                    or record.round != ev.round
                ):
                    report.violations.append(
                        f"feedback at round {ev.round} without a completed round"
                    )
                else:
                    want = feedback_event(record).payload
                    if ev.payload != want:
                        report.violations.append(
                            f"round {ev.round}: logged feedback {ev.payload} "
                            f"!= derived {want}"
                        )
            elif ev.event == ADVANCE:
                state = advance(state)
            elif ev.event == GAME_END:
                report.saw_game_end = True
                want = game_summary(state).to_dict()
                if ev.payload != want:
                    report.violations.append(
                        f"game_end summary {ev.payload} != derived {want}"
                    )
            elif ev.event == DROPOUT:
                report.dropped_out = True
            else:
                report.violations.append(f"unknown event {ev.event!r}")
        except EngineError as exc:
            report.violations.append(
                f"{ev.event} at round {ev.round}: {exc}"
            )
            report.state = state
            return report
        report.state = state
    return report
