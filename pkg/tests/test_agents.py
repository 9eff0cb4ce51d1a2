import random

import pytest

from colexgame.agents import (
    DEGENERATE,
    FIXED_COLEXIFY_PAIRS,
    FIXED_COLEXIFY_PAIRS_AVOIDANT,
    FIXED_PERFECT,
    MISLEADING_FULL,
    MISLEADING_RECENT,
    RANDOM,
    RATIONAL_FULL,
    RATIONAL_RECENT,
    STRATEGIES,
    Agent,
    LexiconMemory,
    StrategyConfig,
    colexify_all_ceiling,
    dyad_agent_receiver,
    infer_condition,
    naming_model_step,
    run_dyad_simulation,
    run_naming_grid,
)
from colexgame.engine import FEEDBACK, SEND, parse_log, replay_log, write_log
from colexgame.lexicon import (
    bundled_lexicon_path,
    bundled_wordlist_path,
    load_lexicon,
    load_wordlist,
    make_stimulus,
)
from colexgame.schedule import (
    BURN_IN_LENGTH,
    CONDITIONS,
    build_schedule,
    pair_frequency_table,
    signals_for_condition,
    variant_for_condition,
)

LEX = load_lexicon(bundled_lexicon_path())
WORDS = load_wordlist(bundled_wordlist_path())
STIM7 = make_stimulus(LEX, WORDS, "standard", 7, seed=11)
STIM10 = make_stimulus(LEX, WORDS, "standard", 10, seed=11)


def agent(kind, n_signals=7, seed=0, stim=STIM7, **kw):
    cfg = StrategyConfig(kind=kind, n_signals=n_signals, seed=seed, **kw)
    return Agent(cfg, stim.space, stim.signals)


def play_schedule(condition="baseline", stim=STIM7, seed=5):
    table = pair_frequency_table(stim.space, condition)
    return build_schedule(table, seed)


class TestStrategyConfig:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            StrategyConfig(kind="clever", n_signals=7)

    def test_n_signals_bounds(self):
        with pytest.raises(ValueError, match="n_signals"):
            StrategyConfig(kind=DEGENERATE, n_signals=0)
        with pytest.raises(ValueError, match="n_signals"):
            StrategyConfig(kind=DEGENERATE, n_signals=11)

    def test_switch_fields_go_together(self):
        with pytest.raises(ValueError, match="go together"):
            StrategyConfig(kind=DEGENERATE, n_signals=7, switch_kind=RANDOM)
        with pytest.raises(ValueError, match="go together"):
            StrategyConfig(kind=DEGENERATE, n_signals=7, switch_round=45)

    def test_unknown_switch_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            StrategyConfig(
                kind=DEGENERATE, n_signals=7,
                switch_kind="clever", switch_round=45,
            )

    def test_n_signals_must_fit_signal_set(self):
        cfg = StrategyConfig(kind=DEGENERATE, n_signals=10)
        with pytest.raises(ValueError, match="exceeds signal set"):
            Agent(cfg, STIM7.space, STIM7.signals)


class TestMemory:
    def test_observe_updates_counts_and_recency(self):
        mem = LexiconMemory()
        mem.observe("pami", "rain")
        mem.observe("pami", "style")
        mem.observe("fuwo", "rain")
        assert mem.count("pami", "rain") == 1
        assert mem.count("pami", "style") == 1
        assert mem.total_uses["pami"] == 2
        assert mem.last_meaning_for["pami"] == "style"
        assert mem.last_signal_for["rain"] == "fuwo"
        assert mem.recent_count("pami", "style") == 1
        assert mem.recent_count("pami", "rain") == 0

    def test_codisplay_is_orderless(self):
        mem = LexiconMemory()
        mem.observe_display(("rain", "drizzle"))
        mem.observe_display(("drizzle", "rain"))
        from colexgame.lexicon import pair_key
        assert mem.codisplay[pair_key("rain", "drizzle")] == 2


class TestNamingStrategies:
    def test_degenerate_always_same_signal(self):
        a = agent(DEGENERATE)
        picks = {
            naming_model_step(a, m, round_no=r)
            for r in (1, 50, 135)
            for m in STIM7.space.meanings()
        }
        assert len(picks) == 1
        assert picks.pop() in STIM7.signals.signals

    def test_random_stays_within_allowed_prefix(self):
        a = agent(RANDOM, n_signals=3)
        allowed = set(STIM7.signals.signals[:3])
        picks = {naming_model_step(a, "rain") for _ in range(200)}
        assert picks == allowed

    def test_fixed_perfect_injective_with_ten_signals(self):
        a = agent(FIXED_PERFECT, n_signals=10, stim=STIM10)
        mapping = {m: naming_model_step(a, m) for m in STIM10.space.meanings()}
        assert len(set(mapping.values())) == 10
        again = {m: naming_model_step(a, m) for m in STIM10.space.meanings()}
        assert again == mapping

    def test_fixed_perfect_rerandomizes_unassigned_meanings(self):
        a = agent(FIXED_PERFECT, n_signals=7)
        meanings = STIM7.space.meanings()
        assigned, spare = meanings[:7], meanings[7:]
        for m in assigned:
            assert len({naming_model_step(a, m) for _ in range(20)}) == 1
        for m in spare:
            assert len({naming_model_step(a, m) for _ in range(50)}) > 1

    def test_fixed_colexify_pairs_shares_one_signal_per_pair(self):
        a = agent(FIXED_COLEXIFY_PAIRS)
        for x, y in STIM7.space.target_pairs:
            sx = {naming_model_step(a, x) for _ in range(10)}
            sy = {naming_model_step(a, y) for _ in range(10)}
            assert sx == sy
            assert len(sx) == 1

    def test_avoidant_keeps_pair_signals_off_distractors(self):
        a = agent(FIXED_COLEXIFY_PAIRS_AVOIDANT)
        pair_signals = {
            naming_model_step(a, m) for m in STIM7.space.target_members()
        }
        assert len(pair_signals) == 3
        for m in STIM7.space.distractors:
            for _ in range(30):
                assert naming_model_step(a, m) not in pair_signals

    def test_rational_full_prefers_established_signal(self):
        a = agent(RATIONAL_FULL)
        s1 = STIM7.signals.signals[1]
        for _ in range(3):
            a.observe_feedback(s1, "rain")
        assert naming_model_step(a, "rain") == s1

    def test_rational_recent_forgets_older_counts(self):
        a = agent(RATIONAL_RECENT)
        s1 = STIM7.signals.signals[1]
        for _ in range(3):
            a.observe_feedback(s1, "rain")
        a.observe_feedback(s1, "style")
        # recency scoring: s1 now scores -1 for rain, everything else 0
        for _ in range(20):
            assert naming_model_step(a, "rain") != s1
        b = agent(RATIONAL_FULL)
        for _ in range(3):
            b.observe_feedback(s1, "rain")
        b.observe_feedback(s1, "style")
        assert naming_model_step(b, "rain") == s1

    def test_misleading_duality_on_random_memories(self):
        rng = random.Random(99)
        meanings = STIM7.space.meanings()
        signals = STIM7.signals.signals
        for trial in range(50):
            rational = agent(RATIONAL_FULL, seed=trial)
            misleading = agent(MISLEADING_FULL, seed=trial)
            for _ in range(rng.randrange(40)):
                s, m = rng.choice(signals), rng.choice(meanings)
                rational.observe_feedback(s, m)
                misleading.observe_feedback(s, m)
            prompt = rng.choice(meanings)
            competitors = tuple(m for m in meanings if m != prompt)
            score = {
                s: rational._margin(RATIONAL_FULL, s, prompt, competitors)
                for s in signals
            }
            pick_max = naming_model_step(rational, prompt)
            pick_min = naming_model_step(misleading, prompt)
            assert score[pick_max] == max(score.values())
            assert score[pick_min] == min(score.values())
            assert score[pick_min] <= score[pick_max]

    def test_two_phase_switch(self):
        a = agent(
            DEGENERATE, n_signals=10, stim=STIM10,
            switch_kind=FIXED_PERFECT, switch_round=45,
        )
        early = {
            naming_model_step(a, m, round_no=r)
            for r in (1, 45)
            for m in STIM10.space.meanings()
        }
        assert len(early) == 1
        late = {
            m: naming_model_step(a, m, round_no=46)
            for m in STIM10.space.meanings()
        }
        assert len(set(late.values())) == 10


class TestReceiver:
    def test_no_history_is_a_coin(self):
        a = agent(RATIONAL_FULL)
        pair = ("motor", "essay")
        picks = {dyad_agent_receiver(a, pair, "fuwo") for _ in range(100)}
        assert picks == set(pair)

    def test_single_observation_decides(self):
        for kind in (RATIONAL_FULL, RATIONAL_RECENT):
            a = agent(kind)
            a.observe_feedback("fuwo", "motor")
            assert dyad_agent_receiver(a, ("motor", "essay"), "fuwo") == "motor"
            assert dyad_agent_receiver(a, ("essay", "motor"), "fuwo") == "motor"

    def test_recent_variant_follows_last_association(self):
        a = agent(MISLEADING_RECENT)
        a.observe_feedback("fuwo", "motor")
        a.observe_feedback("fuwo", "motor")
        a.observe_feedback("fuwo", "essay")
        assert dyad_agent_receiver(a, ("motor", "essay"), "fuwo") == "essay"


def post_burn_in_accuracy(events):
    rows = [
        e.payload["correct"]
        for e in events
        if e.event == FEEDBACK and e.round > BURN_IN_LENGTH
    ]
    assert len(rows) == 90
    return sum(rows) / len(rows)


class TestDyadSimulation:
    def test_same_seed_same_log(self):
        sched = play_schedule()
        cfg = StrategyConfig(kind=RATIONAL_FULL, n_signals=7, seed=3)
        one = run_dyad_simulation(STIM7, sched, cfg, cfg, seed=17)
        two = run_dyad_simulation(STIM7, sched, cfg, cfg, seed=17)
        assert write_log(one) == write_log(two)

    def test_logs_replay_cleanly(self):
        sched = play_schedule()
        cfg_a = StrategyConfig(kind=RATIONAL_FULL, n_signals=7, seed=3)
        cfg_b = StrategyConfig(kind=RATIONAL_RECENT, n_signals=7, seed=4)
        events = run_dyad_simulation(STIM7, sched, cfg_a, cfg_b, seed=17)
        report = replay_log(parse_log(write_log(events)))
        assert report.ok, report.violations
        assert report.complete
        assert len(report.state.history) == 135

    def test_rational_dyads_learn_to_communicate(self):
        cfg = StrategyConfig(kind=RATIONAL_FULL, n_signals=7, seed=0)
        wins = 0
        for seed in range(20):
            stim = make_stimulus(LEX, WORDS, "standard", 7, seed=seed)
            sched = build_schedule(
                pair_frequency_table(stim.space, "baseline"), seed
            )
            events = run_dyad_simulation(stim, sched, cfg, cfg, seed=seed)
            if post_burn_in_accuracy(events) > 0.59:
                wins += 1
        assert wins >= 18

    def test_degenerate_dyads_never_beat_chance(self):
        # one fixed signal carries no information, so guesses ride on
        # historical prompt counts; balanced quotas anti-correlate those
        # counts with the next prompt, landing at or slightly below 0.5
        cfg_a = StrategyConfig(kind=DEGENERATE, n_signals=7, seed=0)
        cfg_b = StrategyConfig(kind=DEGENERATE, n_signals=7, seed=1)
        sched = play_schedule()
        rates = []
        for seed in range(10):
            events = run_dyad_simulation(STIM7, sched, cfg_a, cfg_b, seed=seed)
            rates.append(post_burn_in_accuracy(events))
        mean = sum(rates) / len(rates)
        assert 0.30 < mean < 0.55

    def test_degenerate_sender_rounds_stay_at_chance_in_mixed_dyad(self):
        deg = StrategyConfig(kind=DEGENERATE, n_signals=7, seed=0)
        rat = StrategyConfig(kind=RATIONAL_FULL, n_signals=7, seed=1)
        sched = play_schedule()
        correct = []
        for seed in range(10):
            events = run_dyad_simulation(STIM7, sched, deg, rat, seed=seed)
            sender_of = {
                e.round: e.player for e in events if e.event == SEND
            }
            correct += [
                e.payload["correct"]
                for e in events
                if e.event == FEEDBACK
                and e.round > BURN_IN_LENGTH
                and sender_of[e.round] == "A"
            ]
        mean = sum(correct) / len(correct)
        assert 0.30 < mean < 0.55


class TestConditionInference:
    def test_round_trips_every_condition(self):
        for condition in CONDITIONS:
            stim = make_stimulus(
                LEX, WORDS,
                variant_for_condition(condition),
                signals_for_condition(condition),
                seed=7,
            )
            sched = build_schedule(
                pair_frequency_table(stim.space, condition), 23
            )
            assert infer_condition(stim, sched) == condition


class TestNamingGrid:
    def test_full_grid_cardinality_and_manifest(self):
        runs = run_naming_grid(
            STIM7.space, STIM7.signals, schedule_family="baseline",
            repeats=20, seed=0,
        )
        assert len(runs) == len(STRATEGIES) * 7 * 20 == 1260
        ids = {r.dyad_id for r in runs}
        assert len(ids) == 1260
        cells = {(r.strategy, r.n_signals) for r in runs}
        assert len(cells) == len(STRATEGIES) * 7
        for r in runs[:5]:
            row = r.manifest_row()
            assert row["condition"] == "baseline"
            assert row["dyad_id"] == r.dyad_id

    def test_degenerate_cells_use_one_signal(self):
        runs = run_naming_grid(
            STIM7.space, STIM7.signals, repeats=2, seed=1,
            strategies=(DEGENERATE,), max_n_signals=3,
        )
        assert len(runs) == 6
        for r in runs:
            signals = {
                e.payload["signal"] for e in r.events if e.event == SEND
            }
            assert len(signals) == 1

    def test_grid_is_deterministic(self):
        kw = dict(
            repeats=2, seed=9,
            strategies=(DEGENERATE, RATIONAL_FULL), max_n_signals=2,
        )
        one = run_naming_grid(STIM7.space, STIM7.signals, **kw)
        two = run_naming_grid(STIM7.space, STIM7.signals, **kw)
        assert [write_log(r.events) for r in one] == [
            write_log(r.events) for r in two
        ]

    def test_grid_logs_replay_and_score_perfectly(self):
        runs = run_naming_grid(
            STIM7.space, STIM7.signals, repeats=1, seed=2,
            strategies=(RANDOM,), max_n_signals=1,
        )
        (run,) = runs
        report = replay_log(parse_log(write_log(run.events)))
        assert report.ok, report.violations
        assert report.complete
        # synthesized receiver is correct by construction
        assert all(
            e.payload["correct"]
            for e in run.events
            if e.event == FEEDBACK
        )

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError, match="unknown condition"):
            run_naming_grid(STIM7.space, STIM7.signals, schedule_family="x")


class TestCommunicativeNeed:
    """Dyads under higher need for target-pair discrimination should
    colexify those pairs less."""

    @staticmethod
    def synonym_rate(events, space):
        sends = {}
        for e in events:
            if e.event == SEND:
                sends[e.round] = e.player
        twin = {}
        for x, y in space.target_pairs:
            twin[x] = y
            twin[y] = x
        last: dict = {}
        yes = cases = 0
        for e in events:
            if e.event != FEEDBACK:
                continue
            sender = sends[e.round]
            signal, prompt = e.payload["signal"], e.payload["prompt"]
            prior = last.get((sender, signal))
            if (
                e.round > BURN_IN_LENGTH
                and prompt in twin
                and prior is not None
                and prior != prompt
            ):
                cases += 1
                yes += prior == twin[prompt]
            last[(sender, signal)] = prompt
        return yes, cases

    def test_target_condition_suppresses_pair_colexification(self):
        cfg_kw = dict(kind=RATIONAL_FULL, n_signals=7)
        wins = 0
        for seed in range(20):
            stim = make_stimulus(LEX, WORDS, "standard", 7, seed=seed)
            rates = {}
            for condition in ("baseline", "target"):
                mix = random.Random(f"need:{condition}:{seed}")
                sched = build_schedule(
                    pair_frequency_table(stim.space, condition),
                    mix.getrandbits(63),
                )
                cfg = StrategyConfig(seed=seed, **cfg_kw)
                events = run_dyad_simulation(
                    stim, sched, cfg, cfg,
                    seed=mix.getrandbits(63), condition=condition,
                )
                yes, cases = self.synonym_rate(events, stim.space)
                assert cases > 0
                rates[condition] = yes / cases
            wins += rates["baseline"] > rates["target"]
        # one-sided sign test at n=20: P(>=15 heads) ~= 0.021 < 0.05
        assert wins >= 15


class TestColexifyAllCeiling:
    def test_expected_accuracy_band(self):
        value = colexify_all_ceiling(STIM7.space, n_runs=400, seed=0)
        assert 0.80 <= value <= 0.90

    def test_deterministic(self):
        a = colexify_all_ceiling(STIM7.space, n_runs=50, seed=3)
        b = colexify_all_ceiling(STIM7.space, n_runs=50, seed=3)
        assert a == b
