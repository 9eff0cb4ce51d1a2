"""Simulated players: a single-agent naming model and dyadic game agents.

Strategies range from degenerate (one signal for everything) through fixed
assignments to rational/misleading scorers over remembered signal-meaning
usage. The naming model names one prompted meaning per round with no real
listener; dyadic agents play the full engine protocol and update memory
only on feedback, which both players see identically.

Rational scoring is a margin: how much more a signal has been used for the
intended meaning than for its strongest competitor. The naming model
competes against all other meanings and breaks ties uniformly. A dyadic
sender competes against the one meaning actually displayed next to the
prompt, since that is the only discrimination the receiver must make, and
breaks ties the way a speaker balancing effort against clarity would:
stick with the signal already conventional for the prompt, otherwise
prefer extending the signal of a near-synonym over coining a new form,
unless the two meanings keep getting displayed together and the shared
signal would be put to the test.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace

from colexgame.engine import (
    GameState,
    LogEvent,
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
    send_event,
    view_for,
)
from colexgame.lexicon import MeaningSpace, SignalSet, StimulusBundle, pair_key
from colexgame.schedule import (
    CONDITIONS,
    TrialSchedule,
    build_schedule,
    pair_frequency_table,
    signals_for_condition,
)

DEGENERATE = "degenerate"
RANDOM = "random"
FIXED_PERFECT = "fixed_perfect"
FIXED_COLEXIFY_PAIRS = "fixed_colexify_pairs"
FIXED_COLEXIFY_PAIRS_AVOIDANT = "fixed_colexify_pairs_avoidant"
RATIONAL_FULL = "rational_full"
RATIONAL_RECENT = "rational_recent"
MISLEADING_FULL = "misleading_full"
MISLEADING_RECENT = "misleading_recent"

STRATEGIES = (
    DEGENERATE,
    RANDOM,
    FIXED_PERFECT,
    FIXED_COLEXIFY_PAIRS,
    FIXED_COLEXIFY_PAIRS_AVOIDANT,
    RATIONAL_FULL,
    RATIONAL_RECENT,
    MISLEADING_FULL,
    MISLEADING_RECENT,
)

RATIONAL_KINDS = (RATIONAL_FULL, RATIONAL_RECENT)
MISLEADING_KINDS = (MISLEADING_FULL, MISLEADING_RECENT)
RECENT_KINDS = (RATIONAL_RECENT, MISLEADING_RECENT)


@dataclass(frozen=True)
class StrategyConfig:
    kind: str
    n_signals: int
    seed: int = 0
    # optional two-phase combination: play `kind` through round
    # `switch_round`, then `switch_kind` for the rest of the game
    switch_kind: str | None = None
    switch_round: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if not 1 <= self.n_signals <= 10:
            raise ValueError(f"n_signals must be 1-10, got {self.n_signals}")
        if (self.switch_kind is None) != (self.switch_round is None):
            raise ValueError("switch_kind and switch_round go together")
        if self.switch_kind is not None and self.switch_kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.switch_kind!r}")


class LexiconMemory:
    """What an agent remembers about signal use: per-(signal, meaning)
    counts plus most-recent associations in both directions, and how often
    each meaning pair has been displayed together."""

    def __init__(self):
        self.usage_counts: Counter = Counter()
        self.total_uses: Counter = Counter()
        self.last_signal_for: dict[str, str] = {}
        self.last_meaning_for: dict[str, str] = {}
        self.codisplay: Counter = Counter()

    def observe(self, signal: str, meaning: str) -> None:
        self.usage_counts[(signal, meaning)] += 1
        self.total_uses[signal] += 1
        self.last_signal_for[meaning] = signal
        self.last_meaning_for[signal] = meaning

    def observe_display(self, pair: tuple[str, str]) -> None:
        self.codisplay[pair_key(*pair)] += 1

    def count(self, signal: str, meaning: str) -> int:
        return self.usage_counts[(signal, meaning)]

    def recent_count(self, signal: str, meaning: str) -> int:
        return 1 if self.last_meaning_for.get(signal) == meaning else 0


class Agent:
    """One strategy-driven player bound to a stimulus."""

    def __init__(
        self,
        cfg: StrategyConfig,
        space: MeaningSpace,
        signals: SignalSet,
        rng: random.Random | None = None,
    ):
        if cfg.n_signals > len(signals.signals):
            raise ValueError(
                f"n_signals {cfg.n_signals} exceeds signal set size "
                f"{len(signals.signals)}"
            )
        self.cfg = cfg
        self.space = space
        self.allowed = signals.signals[: cfg.n_signals]
        self.rng = rng if rng is not None else random.Random(f"agent:{cfg.seed}")
        self.memory = LexiconMemory()
        # stable assignments are derived once, from the config seed alone,
        # so they never drift with play order
        perm = list(self.allowed)
        random.Random(f"fixed:{cfg.seed}").shuffle(perm)
        self._perm = tuple(perm)
        meanings = space.meanings()
        n = len(self.allowed)
        self._perfect = {
            m: self._perm[i] for i, m in enumerate(meanings) if i < n
        }
        self._pair_signal = {}
        for i, (a, b) in enumerate(space.target_pairs):
            s = self._perm[i % n]
            self._pair_signal[a] = s
            self._pair_signal[b] = s

    def strategy_for_round(self, round_no: int | None) -> str:
        if (
            self.cfg.switch_kind is not None
            and round_no is not None
            and round_no > self.cfg.switch_round
        ):
            return self.cfg.switch_kind
        return self.cfg.kind

    def _count(self, kind: str, signal: str, meaning: str) -> int:
        if kind in RECENT_KINDS:
            return self.memory.recent_count(signal, meaning)
        return self.memory.count(signal, meaning)

    def _margin(
        self, kind: str, signal: str, meaning: str, competitors: tuple[str, ...]
    ) -> int:
        own = self._count(kind, signal, meaning)
        rival = max(self._count(kind, signal, m) for m in competitors)
        return own - rival

    # tie-break weights: extending a twin's signal is attractive, every
    # observed co-display of the two meanings pushes back against sharing
    SIM_ATTRACTION = 1.0
    NEED_REPULSION = 0.4

    def _tie_utility(self, signal: str, prompt: str) -> float:
        mem = self.memory
        if mem.total_uses[signal] == 0:
            return 0.0
        m = mem.last_meaning_for.get(signal)
        if m == prompt:
            return 2.0
        bonus = self.SIM_ATTRACTION if m == self.space.twin(prompt) else 0.0
        return bonus - self.NEED_REPULSION * mem.codisplay[pair_key(prompt, m)]

    def _argbest(self, scores: dict[str, int], best, prompt: str | None) -> str:
        top = best(scores.values())
        tied = [s for s in self.allowed if scores[s] == top]
        if prompt is not None and len(tied) > 1:
            utils = {s: self._tie_utility(s, prompt) for s in tied}
            top_u = max(utils.values())
            tied = [s for s in tied if utils[s] == top_u]
        if len(tied) == 1:
            return tied[0]
        return self.rng.choice(tied)

    def choose_signal(
        self,
        meaning: str,
        round_no: int | None = None,
        competitor: str | None = None,
    ) -> str:
        """Pick a signal for a prompted meaning. `competitor` is the other
        displayed meaning in dyadic play; without it, rational and
        misleading kinds score against every other meaning."""
        kind = self.strategy_for_round(round_no)
        if kind == DEGENERATE:
            return self._perm[0]
        if kind == RANDOM:
            return self.rng.choice(self.allowed)
        if kind == FIXED_PERFECT:
            fixed = self._perfect.get(meaning)
            return fixed if fixed is not None else self.rng.choice(self.allowed)
        if kind == FIXED_COLEXIFY_PAIRS:
            fixed = self._pair_signal.get(meaning)
            return fixed if fixed is not None else self.rng.choice(self.allowed)
        if kind == FIXED_COLEXIFY_PAIRS_AVOIDANT:
            fixed = self._pair_signal.get(meaning)
            if fixed is not None:
                return fixed
            free = [s for s in self.allowed
                    if s not in self._pair_signal.values()]
            return self.rng.choice(free if free else list(self.allowed))
        if competitor is not None:
            competitors: tuple[str, ...] = (competitor,)
        else:
            competitors = tuple(
                m for m in self.space.meanings() if m != meaning
            )
        scores = {
            s: self._margin(kind, s, meaning, competitors) for s in self.allowed
        }
        if kind in MISLEADING_KINDS:
            return self._argbest(scores, min, None)
        # rational dyadic play breaks ties by the effort/clarity utility;
        # the naming model keeps them uniform
        prompt = meaning if competitor is not None else None
        return self._argbest(scores, max, prompt)

    def choose_guess(self, pair: tuple[str, str], signal: str) -> str:
        """Guess which displayed meaning a signal stands for: the one the
        signal has been used for more (recent kinds: used for last)."""
        kind = self.cfg.kind
        a, b = pair
        ca, cb = self._count(kind, signal, a), self._count(kind, signal, b)
        if ca > cb:
            return a
        if cb > ca:
            return b
        return self.rng.choice([a, b])

    def observe_feedback(self, signal: str, prompt: str) -> None:
        self.memory.observe(signal, prompt)


def naming_model_step(agent: Agent, meaning: str,
                      round_no: int | None = None) -> str:
    """One naming-model production: strategy choice against the full
    meaning space."""
    return agent.choose_signal(meaning, round_no=round_no)


def dyad_agent_sender(agent: Agent, view) -> str:
    """Signal choice from a live sender view: the prompt competes only
    against the meaning displayed next to it."""
    competitor = next(m for m in view.meanings if m != view.prompt)
    return agent.choose_signal(
        view.prompt, round_no=view.round, competitor=competitor
    )


def dyad_agent_receiver(agent: Agent, pair: tuple[str, str], signal: str) -> str:
    return agent.choose_guess(pair, signal)


def infer_condition(stimulus: StimulusBundle, schedule: TrialSchedule) -> str:
    """Reads the condition back off a schedule's pair-count histogram and
    the stimulus shape."""
    hist = Counter(Counter(t.pair for t in schedule.trials).values())
    n = len(stimulus.signals.signals)
    if hist == {3: 45}:
        return "baseline" if n == 7 else "baseline_10sig"
    if stimulus.space.variant == "paired_distractors":
        return "weak_target"
    return "target" if n == 7 else "target_10sig"


def run_dyad_simulation(
    stimulus: StimulusBundle,
    schedule: TrialSchedule,
    cfg_a: StrategyConfig,
    cfg_b: StrategyConfig,
    seed: int,
    dyad_id: str | None = None,
    condition: str | None = None,
) -> list[LogEvent]:
    """Two agents play the full game; returns the complete dyad log."""
    agents = {
        "A": Agent(cfg_a, stimulus.space, stimulus.signals,
                   rng=random.Random(f"A:{cfg_a.seed}:{seed}")),
        "B": Agent(cfg_b, stimulus.space, stimulus.signals,
                   rng=random.Random(f"B:{cfg_b.seed}:{seed}")),
    }
    state = new_game(stimulus, schedule, seed)
    if condition is None:
        condition = infer_condition(stimulus, schedule)
    if dyad_id is None:
        dyad_id = f"sim-{seed}"
    events = [
        game_start_event(
            dyad_id, condition, stimulus, schedule, seed, state.first_sender
        )
    ]
    t = 0
    while not state.finished:
        t += 1
        sender = agents[state.sender]
        receiver = agents[state.receiver]
        # both players see which meanings share the screen this round
        for agent in agents.values():
            agent.memory.observe_display(state.current_trial.pair)
        signal = dyad_agent_sender(sender, view_for(state, state.sender))
        events.append(send_event(state.round, state.sender, signal, t))
        state = apply_send(state, state.sender, signal, t)
        t += 1
        guess = dyad_agent_receiver(
            receiver, view_for(state, state.receiver).guess_choices, signal
        )
        events.append(guess_event(state.round, state.receiver, guess, t))
        state = apply_guess(state, state.receiver, guess, t)
        record = state.history[-1]
        events.append(feedback_event(record, t))
        for agent in agents.values():
            agent.observe_feedback(record.signal, record.prompt)
        events.append(advance_event(state.round, t))
        state = advance(state)
    events.append(game_end_event(game_summary(state), state.n_rounds, t))
    return events


@dataclass
class NamingRun:
    dyad_id: str
    strategy: str
    n_signals: int
    repeat: int
    condition: str
    schedule_seed: int
    engine_seed: int
    agent_seed: int
    events: list[LogEvent] = field(repr=False, default_factory=list)

    def manifest_row(self) -> dict:
        return {
            "dyad_id": self.dyad_id,
            "strategy": self.strategy,
            "n_signals": self.n_signals,
            "repeat": self.repeat,
            "condition": self.condition,
            "schedule_seed": self.schedule_seed,
            "engine_seed": self.engine_seed,
            "agent_seed": self.agent_seed,
        }


def run_naming_run(
    stimulus: StimulusBundle,
    schedule: TrialSchedule,
    cfg: StrategyConfig,
    engine_seed: int,
    dyad_id: str,
    condition: str,
) -> list[LogEvent]:
    """One naming-model run through the engine: a single agent (one shared
    memory) produces every signal; receiver guesses are synthesized as
    correct so the log stays a well-formed game record."""
    agent = Agent(
        cfg, stimulus.space, stimulus.signals,
        rng=random.Random(f"naming:{cfg.seed}:{engine_seed}"),
    )
    state = new_game(stimulus, schedule, engine_seed)
    events = [
        game_start_event(
            dyad_id, condition, stimulus, schedule, engine_seed,
            state.first_sender,
        )
    ]
    t = 0
    while not state.finished:
        t += 1
        prompt = state.current_trial.prompt
        signal = naming_model_step(agent, prompt, round_no=state.round)
        events.append(send_event(state.round, state.sender, signal, t))
        state = apply_send(state, state.sender, signal, t)
        events.append(guess_event(state.round, state.receiver, prompt, t))
        state = apply_guess(state, state.receiver, prompt, t)
        record = state.history[-1]
        events.append(feedback_event(record, t))
        agent.observe_feedback(record.signal, record.prompt)
        events.append(advance_event(state.round, t))
        state = advance(state)
    events.append(game_end_event(game_summary(state), state.n_rounds, t))
    return events


def run_naming_grid(
    space: MeaningSpace,
    signals: SignalSet,
    schedule_family: str = "baseline",
    repeats: int = 20,
    seed: int = 0,
    strategies: tuple[str, ...] = STRATEGIES,
    max_n_signals: int | None = None,
) -> list[NamingRun]:
    """The full strategy x signal-count sweep: `repeats` independent runs
    per cell, every run a standard dyad log."""
    if schedule_family not in CONDITIONS:
        raise ValueError(f"unknown condition {schedule_family!r}")
    table = pair_frequency_table(space, schedule_family)
    stimulus = StimulusBundle(space=space, signals=signals, seed=seed)
    if max_n_signals is None:
        max_n_signals = len(signals.signals)
    runs = []
    for strategy in strategies:
        for n in range(1, max_n_signals + 1):
            for r in range(1, repeats + 1):
                tag = f"{seed}:{strategy}:{n}:{r}"
                mix = random.Random(tag)
                schedule_seed = mix.getrandbits(63)
                engine_seed = mix.getrandbits(63)
                agent_seed = mix.getrandbits(63)
                schedule = build_schedule(table, schedule_seed)
                cfg = StrategyConfig(kind=strategy, n_signals=n, seed=agent_seed)
                dyad_id = f"naming-{strategy}-s{n}-r{r}"
                events = run_naming_run(
                    stimulus, schedule, cfg, engine_seed, dyad_id,
                    schedule_family,
                )
                runs.append(
                    NamingRun(
                        dyad_id=dyad_id,
                        strategy=strategy,
                        n_signals=n,
                        repeat=r,
                        condition=schedule_family,
                        schedule_seed=schedule_seed,
                        engine_seed=engine_seed,
                        agent_seed=agent_seed,
                        events=events,
                    )
                )
    return runs


def colexify_all_ceiling(
    space: MeaningSpace, n_runs: int = 10_000, seed: int = 0
) -> float:
    """Monte Carlo expectation of post-burn-in accuracy for a dyad that
    colexifies all 3 target pairs: distinct stable signals everywhere else
    (always guessed right), a coin flip whenever a target pair is
    displayed. Draws fresh target-condition schedules."""
    table = pair_frequency_table(space, "target")
    targets = {pair_key(*p) for p in space.target_pairs}
    rng = random.Random(seed)
    burn = 45
    total = 0.0
    for _ in range(n_runs):
        schedule = build_schedule(table, rng.getrandbits(63))
        post = [t for t in schedule.trials if t.round > burn]
        correct = 0
        for t in post:
            if t.pair in targets:
                correct += rng.random() < 0.5
            else:
                correct += 1
        total += correct / len(post)
    return total / n_runs
