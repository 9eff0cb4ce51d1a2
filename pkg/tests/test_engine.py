"""Game state machine: phases, roles, views, errors, log replay."""

import json

import pytest

from colexgame.engine import (
    AWAITING_GUESS,
    AWAITING_SIGNAL,
    FEEDBACK_SHOWN,
    GameFinishedError,
    LogEvent,
    MeaningNotDisplayedError,
    StimulusMismatchError,
    UnknownSignalError,
    WrongPhaseError,
    WrongPlayerError,
    advance,
    advance_event,
    apply_guess,
    apply_send,
    feedback_event,
    game_end_event,
    game_start_event,
    game_summary,
    guess_event,
    new_game,
    other_player,
    parse_log,
    replay_log,
    send_event,
    view_for,
    write_log,
)
from colexgame.lexicon import (
    bundled_lexicon_path,
    bundled_wordlist_path,
    load_lexicon,
    load_wordlist,
    make_stimulus,
)
from colexgame.schedule import build_schedule, pair_frequency_table


@pytest.fixture(scope="module")
def stimulus():
    lex = load_lexicon(bundled_lexicon_path())
    wl = load_wordlist(bundled_wordlist_path())
    return make_stimulus(lex, wl, "standard", 7, seed=3)


@pytest.fixture(scope="module")
def schedule(stimulus):
    return build_schedule(pair_frequency_table(stimulus.space, "target"), seed=3)


@pytest.fixture
def game(stimulus, schedule):
    return new_game(stimulus, schedule, seed=12)


def play_round(state, signal=None, guess_prompt=True):
    """Drive one round: send, guess (the prompt or its alternative), advance."""
    trial = state.current_trial
    signal = signal or state.stimulus.signals.signals[0]
    state = apply_send(state, state.sender, signal)
    target = trial.prompt
    if not guess_prompt:
        target = next(m for m in trial.pair if m != trial.prompt)
    state = apply_guess(state, state.receiver, target)
    return advance(state)


def play_game(state, correct_rounds=None):
    """Play to completion; correct_rounds picks which rounds guess right
    (None = all)."""
    while not state.finished:
        right = correct_rounds is None or state.round in correct_rounds
        state = play_round(state, guess_prompt=right)
    return state


class TestNewGame:
    def test_fresh_state(self, game):
        assert game.round == 1
        assert game.phase == AWAITING_SIGNAL
        assert game.history == ()
        assert not game.finished
        assert game.first_sender in ("A", "B")

    def test_same_seed_identical_including_display_orders(self, stimulus, schedule):
        a = new_game(stimulus, schedule, seed=5)
        b = new_game(stimulus, schedule, seed=5)
        assert a == b
        assert a.display_orders == b.display_orders

    def test_seed_flips_first_sender(self, stimulus, schedule):
        senders = {new_game(stimulus, schedule, seed=s).first_sender
                   for s in range(20)}
        assert senders == {"A", "B"}

    def test_display_orders_cover_both_orientations(self, game):
        trial = game.schedule.trials[0]
        seen = set()
        for r in range(1, game.n_rounds + 1):
            for p in ("A", "B"):
                order = game.display_order(r, p)
                assert sorted(order) == sorted(game.schedule.trials[r - 1].pair)
                if game.schedule.trials[r - 1].pair == trial.pair:
                    seen.add(order)
        assert len(seen) == 2

    def test_mismatched_schedule_rejected(self, stimulus, schedule):
        lex = load_lexicon(bundled_lexicon_path())
        wl = load_wordlist(bundled_wordlist_path())
        other = make_stimulus(lex, wl, "standard", 7, seed=29)
        assert set(other.space.meanings()) != set(stimulus.space.meanings())
        with pytest.raises(StimulusMismatchError):
            new_game(other, schedule, seed=1)


class TestRoleAlternation:
    def test_sender_alternates_every_round(self, game):
        state = play_game(game)
        for rec in state.history:
            want = (
                game.first_sender
                if rec.round % 2 == 1
                else other_player(game.first_sender)
            )
            assert rec.sender == want

    def test_roles_are_complementary(self, game):
        assert game.receiver == other_player(game.sender)


class TestViews:
    def test_sender_sees_prompt_and_signal_choices(self, game):
        view = view_for(game, game.sender)
        assert view.role == "sender"
        assert view.prompt == game.current_trial.prompt
        assert view.signal_choices == game.stimulus.signals.signals
        assert set(view.meanings) == set(game.current_trial.pair)

    def test_receiver_sees_no_prompt_no_signal(self, game):
        view = view_for(game, game.receiver)
        assert view.role == "receiver"
        assert view.prompt is None
        assert view.signal is None
        assert view.signal_choices == ()
        assert view.guess_choices == ()

    def test_receiver_sees_signal_after_send(self, game):
        signal = game.stimulus.signals.signals[2]
        state = apply_send(game, game.sender, signal)
        view = view_for(state, state.receiver)
        assert view.signal == signal
        assert view.prompt is None
        assert set(view.guess_choices) == set(state.current_trial.pair)

    def test_feedback_identical_for_both(self, game):
        state = apply_send(game, game.sender, game.stimulus.signals.signals[0])
        state = apply_guess(state, state.receiver, state.current_trial.prompt)
        va = view_for(state, "A")
        vb = view_for(state, "B")
        assert va.feedback == vb.feedback
        assert va.feedback["correct"] is True
        assert va.feedback["prompt"] == state.current_trial.prompt

    def test_prompt_hidden_from_receiver_through_whole_game(self, game):
        state = game
        while not state.finished:
            assert view_for(state, state.receiver).prompt is None
            state = apply_send(
                state, state.sender, state.stimulus.signals.signals[0]
            )
            assert view_for(state, state.receiver).prompt is None
            state = apply_guess(state, state.receiver, state.current_trial.pair[0])
            state = advance(state)

    def test_display_order_respected(self, game):
        for player in ("A", "B"):
            view = view_for(game, player)
            assert view.meanings == game.display_order(1, player)

    def test_finished_game_has_no_view(self, game):
        state = play_game(game)
        with pytest.raises(GameFinishedError):
            view_for(state, "A")

    def test_unknown_player(self, game):
        with pytest.raises(WrongPlayerError):
            view_for(game, "C")


class TestTransitions:
    def test_full_round_happy_path(self, game):
        trial = game.current_trial
        state = apply_send(game, game.sender, game.stimulus.signals.signals[1], t_ms=500)
        assert state.phase == AWAITING_GUESS
        state = apply_guess(state, state.receiver, trial.prompt, t_ms=900)
        assert state.phase == FEEDBACK_SHOWN
        rec = state.history[-1]
        assert rec.correct and rec.prompt == trial.prompt
        assert rec.signal_t_ms == 500 and rec.guess_t_ms == 900
        state = advance(state)
        assert state.round == 2 and state.phase == AWAITING_SIGNAL

    def test_wrong_guess_recorded(self, game):
        state = play_round(game, guess_prompt=False)
        assert state.history[-1].correct is False

    def test_receiver_cannot_send(self, game):
        with pytest.raises(WrongPlayerError):
            apply_send(game, game.receiver, game.stimulus.signals.signals[0])

    def test_unknown_signal(self, game):
        with pytest.raises(UnknownSignalError):
            apply_send(game, game.sender, "zzzz")

    def test_send_during_guess_phase(self, game):
        state = apply_send(game, game.sender, game.stimulus.signals.signals[0])
        with pytest.raises(WrongPhaseError):
            apply_send(state, state.sender, state.stimulus.signals.signals[0])

    def test_guess_before_signal(self, game):
        with pytest.raises(WrongPhaseError):
            apply_guess(game, game.receiver, game.current_trial.prompt)

    def test_sender_cannot_guess(self, game):
        state = apply_send(game, game.sender, game.stimulus.signals.signals[0])
        with pytest.raises(WrongPlayerError):
            apply_guess(state, state.sender, state.current_trial.prompt)

    def test_guess_not_displayed(self, game):
        state = apply_send(game, game.sender, game.stimulus.signals.signals[0])
        bad = next(
            m for m in state.stimulus.space.meanings()
            if m not in state.current_trial.pair
        )
        with pytest.raises(MeaningNotDisplayedError):
            apply_guess(state, state.receiver, bad)

    def test_advance_requires_feedback_phase(self, game):
        with pytest.raises(WrongPhaseError):
            advance(game)

    def test_finished_game_rejects_everything(self, game):
        state = play_game(game)
        assert state.round == 136
        with pytest.raises(GameFinishedError):
            apply_send(state, "A", state.stimulus.signals.signals[0])
        with pytest.raises(GameFinishedError):
            advance(state)

    def test_states_are_immutable_snapshots(self, game):
        state = apply_send(game, game.sender, game.stimulus.signals.signals[0])
        assert game.phase == AWAITING_SIGNAL
        assert state.phase == AWAITING_GUESS


class TestSummary:
    def test_empty(self, game):
        s = game_summary(game)
        assert (s.rounds_played, s.total_correct, s.post_burn_in_correct) == (0, 0, 0)
        assert not s.finished

    def test_all_correct(self, game):
        s = game_summary(play_game(game))
        assert s.rounds_played == 135
        assert s.total_correct == 135
        assert s.post_burn_in_correct == 90
        assert s.finished

    def test_partial_correct(self, game):
        right = set(range(1, 50))
        s = game_summary(play_game(game, correct_rounds=right))
        assert s.total_correct == 49
        assert s.post_burn_in_correct == 4  # rounds 46-49


class TestDyadLog:
    def events_for_game(self, game):
        events = [
            game_start_event(
                "dyad-1", "target", game.stimulus, game.schedule,
                game.seed, game.first_sender,
            )
        ]
        state = game
        t = 0
        while not state.finished:
            t += 10
            sig = state.stimulus.signals.signals[state.round % 7]
            events.append(send_event(state.round, state.sender, sig, t))
            state = apply_send(state, state.sender, sig, t)
            t += 10
            guess = state.current_trial.pair[state.round % 2]
            events.append(guess_event(state.round, state.receiver, guess, t))
            state = apply_guess(state, state.receiver, guess, t)
            events.append(feedback_event(state.history[-1], t))
            events.append(advance_event(state.round, t))
            state = advance(state)
        events.append(game_end_event(game_summary(state), state.n_rounds, t))
        return events, state

    def test_log_round_trip_bit_exact(self, game):
        events, _ = self.events_for_game(game)
        text = write_log(events)
        parsed = parse_log(text)
        assert parsed == events
        assert write_log(parsed) == text

    def test_replay_reproduces_game(self, game):
        events, final = self.events_for_game(game)
        report = replay_log(events)
        assert report.ok, report.violations[:3]
        assert report.complete and report.saw_game_end
        assert report.state.history == final.history
        assert report.dyad_id == "dyad-1"
        assert report.condition == "target"

    def test_replay_flags_tampered_feedback(self, game):
        events, _ = self.events_for_game(game)
        idx = next(i for i, e in enumerate(events) if e.event == "feedback")
        bad = dict(events[idx].payload, correct=not events[idx].payload["correct"])
        events[idx] = LogEvent("feedback", events[idx].round, None, bad,
                               events[idx].t_ms)
        report = replay_log(events)
        assert any("logged feedback" in v for v in report.violations)

    def test_replay_flags_tampered_summary(self, game):
        events, _ = self.events_for_game(game)
        end = events[-1]
        bad = dict(end.payload, total_correct=end.payload["total_correct"] + 1)
        events[-1] = LogEvent("game_end", end.round, None, bad, end.t_ms)
        report = replay_log(events)
        assert any("game_end summary" in v for v in report.violations)

    def test_replay_flags_wrong_sender(self, game):
        events, _ = self.events_for_game(game)
        idx = next(i for i, e in enumerate(events) if e.event == "send")
        e = events[idx]
        events[idx] = LogEvent("send", e.round, other_player(e.player),
                               e.payload, e.t_ms)
        report = replay_log(events)
        assert not report.ok
        assert any("not the sender" in v for v in report.violations)

    def test_replay_requires_game_start(self, game):
        events, _ = self.events_for_game(game)
        report = replay_log(events[1:])
        assert any("game_start" in v for v in report.violations)

    def test_incomplete_log_not_complete(self, game):
        events, _ = self.events_for_game(game)
        report = replay_log(events[:30])
        assert report.ok
        assert not report.complete

    def test_unknown_event_rejected_at_parse(self):
        line = json.dumps(
            {"event": "nap", "round": 1, "player": None, "payload": {}, "t_ms": 0}
        )
        with pytest.raises(ValueError):
            LogEvent.from_line(line)
