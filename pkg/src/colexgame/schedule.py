"""Trial schedules implementing the communicative-need manipulation.

A schedule is 135 rounds, each displaying one unordered meaning pair with
one member marked as the prompt. Conditions differ only in how often each
pair occurs: the baseline family shows every pair 3 times; the target
family concentrates need on the 3 target pairs (11 each), keeps every
meaning's total co-display count at 27 via the distractor pairs (5 each),
and shows the remaining pairs twice. The first 45 rounds are the burn-in;
pair occurrences are split across phases as evenly as thirds allow and
shuffled independently within each phase.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from colexgame.lexicon import PAIRED_DISTRACTORS, STANDARD, MeaningSpace, pair_key

N_ROUNDS = 135
BURN_IN_LENGTH = 45
BURN_IN = "burn_in"
MAIN = "main"

BASELINE = "baseline"
TARGET = "target"
WEAK_TARGET = "weak_target"
BASELINE_10SIG = "baseline_10sig"
TARGET_10SIG = "target_10sig"
CONDITIONS = (BASELINE, TARGET, WEAK_TARGET, BASELINE_10SIG, TARGET_10SIG)

BASELINE_FAMILY = (BASELINE, BASELINE_10SIG)
TARGET_FAMILY = (TARGET, WEAK_TARGET, TARGET_10SIG)

TARGET_PAIR_COUNT = 11
DISTRACTOR_PAIR_COUNT = 5
OTHER_PAIR_COUNT = 2
BASELINE_PAIR_COUNT = 3

PROMPT_MIN = 12
PROMPT_MAX = 15


class IncompatibleConditionError(ValueError):
    """Condition and meaning-space variant do not go together."""


def signals_for_condition(condition: str) -> int:
    """Signal-set size implied by a condition."""
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    return 10 if condition.endswith("_10sig") else 7


def variant_for_condition(condition: str) -> str:
    """Meaning-space variant a condition requires."""
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    return PAIRED_DISTRACTORS if condition == WEAK_TARGET else STANDARD


@dataclass(frozen=True)
class PairFrequencyTable:
    counts: dict[tuple[str, str], int]
    condition: str

    def total(self) -> int:
        return sum(self.counts.values())

    def meaning_totals(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for (a, b), c in self.counts.items():
            totals[a] = totals.get(a, 0) + c
            totals[b] = totals.get(b, 0) + c
        return totals


def pair_frequency_table(space: MeaningSpace, condition: str) -> PairFrequencyTable:
    """Per-pair occurrence counts for a condition. Raises
    IncompatibleConditionError when the condition needs a different
    meaning-space variant."""
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    required = variant_for_condition(condition)
    if space.variant != required:
        raise IncompatibleConditionError(
            f"condition {condition!r} requires variant {required!r}, "
            f"space has {space.variant!r}"
        )
    meanings = sorted(space.meanings())
    all_pairs = [pair_key(a, b) for a, b in itertools.combinations(meanings, 2)]
    if condition in BASELINE_FAMILY:
        counts = {p: BASELINE_PAIR_COUNT for p in all_pairs}
    else:
        targets = {pair_key(*p) for p in space.target_pairs}
        distractors = set(space.distractors)
        counts = {}
        for p in all_pairs:
            if p in targets:
                counts[p] = TARGET_PAIR_COUNT
            elif p[0] in distractors and p[1] in distractors:
                counts[p] = DISTRACTOR_PAIR_COUNT
            else:
                counts[p] = OTHER_PAIR_COUNT
    return PairFrequencyTable(counts=counts, condition=condition)


@dataclass(frozen=True)
class Trial:
    round: int
    pair: tuple[str, str]
    prompt: str
    phase: str


@dataclass(frozen=True)
class TrialSchedule:
    trials: tuple[Trial, ...]
    burn_in_length: int = BURN_IN_LENGTH

    def pair_counts(self) -> dict[tuple[str, str], int]:
        counts: dict[tuple[str, str], int] = {}
        for t in self.trials:
            counts[t.pair] = counts.get(t.pair, 0) + 1
        return counts

    def prompt_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for t in self.trials:
            counts[t.prompt] = counts.get(t.prompt, 0) + 1
        return counts

    def to_json(self) -> str:
        rows = [
            {"round": t.round, "pair": list(t.pair), "prompt": t.prompt,
             "phase": t.phase}
            for t in self.trials
        ]
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrialSchedule":
        rows = json.loads(text)
        trials = tuple(
            Trial(
                round=r["round"],
                pair=pair_key(*r["pair"]),
                prompt=r["prompt"],
                phase=r["phase"],
            )
            for r in sorted(rows, key=lambda r: r["round"])
        )
        return cls(trials=trials)


def _split_burn_in(
    counts: dict[tuple[str, str], int], rng: random.Random
) -> dict[tuple[str, str], int]:
    """How many of each pair's occurrences land in the burn-in: floor(c/3)
    guaranteed, the shortfall to 45 handed out by descending remainder,
    remainder ties broken by a seeded shuffle."""
    pairs = sorted(counts)
    burn = {p: counts[p] // 3 for p in pairs}
    shortfall = BURN_IN_LENGTH - sum(burn.values())
    order = list(pairs)
    rng.shuffle(order)
    order.sort(key=lambda p: -(counts[p] % 3))
    for p in order[:shortfall]:
        burn[p] += 1
    return burn


def _prompt_split(
    counts: dict[tuple[str, str], int], rng: random.Random
) -> dict[tuple[str, str], dict[str, int]]:
    """Per-pair prompt quotas: each member is prompted floor(c/2) or
    ceil(c/2) times, so every meaning ends up prompted 12-15 times.

    When the odd-count pairs form the complete graph over the meanings
    (the baseline family), independent coins could pile 6+ extras onto one
    meaning, so extras are oriented as a near-regular tournament instead:
    meanings are shuffled around a circle and each pair's extra goes to the
    member that sees the other within half a lap (coin on antipodal pairs).
    Every meaning then wins exactly half its pairs, within one. For other
    tables (the target family) a coin per odd pair keeps the balance
    bounds by structure."""
    split = {
        p: {p[0]: counts[p] // 2, p[1]: counts[p] // 2} for p in counts
    }
    odd = [p for p in sorted(counts) if counts[p] % 2]
    meanings = sorted({m for p in counts for m in p})
    n = len(meanings)
    complete = len(odd) == n * (n - 1) // 2 == len(counts)

    if complete and n >= 2:
        circle = meanings[:]
        rng.shuffle(circle)
        index = {m: i for i, m in enumerate(circle)}
        for p in odd:
            i, j = sorted((index[p[0]], index[p[1]]))
            d = (j - i) * 2
            if d < n:
                extra = circle[i]
            elif d > n:
                extra = circle[j]
            else:
                extra = circle[i] if rng.random() < 0.5 else circle[j]
            split[p][extra] += 1
    else:
        for p in odd:
            extra = p[0] if rng.random() < 0.5 else p[1]
            split[p][extra] += 1
    return split


def build_schedule(table: PairFrequencyTable, seed: int) -> TrialSchedule:
    """Stratified shuffle of the frequency table into 135 rounds.
    Deterministic given seed."""
    rng = random.Random(seed)
    counts = table.counts
    burn_counts = _split_burn_in(counts, rng)
    prompt_quota = _prompt_split(counts, rng)

    prompts: dict[tuple[str, str], list[str]] = {}
    for p in sorted(counts):
        lst = [p[0]] * prompt_quota[p][p[0]] + [p[1]] * prompt_quota[p][p[1]]
        rng.shuffle(lst)
        prompts[p] = lst

    burn_pairs = [p for p in sorted(counts) for _ in range(burn_counts[p])]
    main_pairs = [
        p for p in sorted(counts) for _ in range(counts[p] - burn_counts[p])
    ]
    rng.shuffle(burn_pairs)
    rng.shuffle(main_pairs)

    trials = []
    for i, p in enumerate(burn_pairs + main_pairs, start=1):
        phase = BURN_IN if i <= BURN_IN_LENGTH else MAIN
        trials.append(Trial(round=i, pair=p, prompt=prompts[p].pop(), phase=phase))
    return TrialSchedule(trials=tuple(trials))


def validate_schedule(
    schedule: TrialSchedule, table: PairFrequencyTable
) -> list[str]:
    """Re-derives every schedule invariant from scratch; returns the list
    of violations (empty = valid)."""
    v: list[str] = []
    trials = schedule.trials
    if len(trials) != N_ROUNDS:
        v.append(f"expected {N_ROUNDS} trials, got {len(trials)}")
    for i, t in enumerate(trials, start=1):
        if t.round != i:
            v.append(f"trial {i} carries round number {t.round}")
        want_phase = BURN_IN if i <= schedule.burn_in_length else MAIN
        if t.phase != want_phase:
            v.append(f"round {i}: phase {t.phase!r}, expected {want_phase!r}")
        if t.prompt not in t.pair:
            v.append(f"round {i}: prompt {t.prompt!r} not in pair {t.pair}")
        if t.pair != pair_key(*t.pair):
            v.append(f"round {i}: pair {t.pair} not in canonical order")
    if schedule.burn_in_length != BURN_IN_LENGTH:
        v.append(
            f"burn-in length {schedule.burn_in_length}, expected {BURN_IN_LENGTH}"
        )

    got = schedule.pair_counts()
    if got != table.counts:
        for p in sorted(set(got) | set(table.counts)):
            a, b = got.get(p, 0), table.counts.get(p, 0)
            if a != b:
                v.append(f"pair {p}: {a} occurrences, table says {b}")

    n_burn = sum(1 for t in trials if t.phase == BURN_IN)
    if n_burn != BURN_IN_LENGTH:
        v.append(f"burn-in holds {n_burn} trials, expected {BURN_IN_LENGTH}")
    burn_counts: dict[tuple[str, str], int] = {}
    for t in trials:
        if t.phase == BURN_IN:
            burn_counts[t.pair] = burn_counts.get(t.pair, 0) + 1
    for p, c in sorted(table.counts.items()):
        b = burn_counts.get(p, 0)
        lo, hi = math.floor(c / 3), math.ceil(c / 3)
        if not lo <= b <= hi:
            v.append(f"pair {p}: {b} burn-in occurrences, expected {lo} or {hi}")

    meaning_totals: dict[str, int] = {}
    for t in trials:
        for m in t.pair:
            meaning_totals[m] = meaning_totals.get(m, 0) + 1
    for m, c in sorted(meaning_totals.items()):
        if c != 27:
            v.append(f"meaning {m!r} co-displayed {c} times, expected 27")

    for m, c in sorted(schedule.prompt_counts().items()):
        if not PROMPT_MIN <= c <= PROMPT_MAX:
            v.append(
                f"meaning {m!r} prompted {c} times, expected "
                f"{PROMPT_MIN}-{PROMPT_MAX}"
            )
    return v


def load_schedule(path: str | Path) -> TrialSchedule:
    return TrialSchedule.from_json(Path(path).read_text(encoding="utf-8"))
