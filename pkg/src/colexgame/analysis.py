"""Measurement pipeline over finished game logs.

Covers communicative accuracy and the inclusion rule, colexification case
extraction, signal-usage entropy, per-utterance complexity/ambiguity cost
scoring, a fixed-effects logistic regression, and deterministic CSV
exports. Every function is pure per log; cross-dyad aggregation is
order-independent, so directories of logs can be processed in any order
(or in parallel) and merged.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from colexgame.engine import (
    FEEDBACK,
    GAME_START,
    LogEvent,
    ReplayReport,
    parse_log,
    replay_log,
    SEND,
)
from colexgame.lexicon import MeaningSpace, StimulusBundle
from colexgame.schedule import BURN_IN_LENGTH, N_ROUNDS

N_POST_ROUNDS = N_ROUNDS - BURN_IN_LENGTH
# inclusion demands strictly-above-chance guessing: at least 54/90 correct,
# the smallest count whose exact binomial tail drops below 0.05
INCLUDE_MIN_CORRECT = 54
# round number is centered mid-game and scaled onto [-1, 1]
ROUND_CENTER = 68
ROUND_SCALE = 67

CASES_CSV_HEADER = (
    "dyad",
    "sender",
    "condition",
    "meaning",
    "pair_id",
    "round",
    "round_scaled",
    "colex",
    "colex_with_synonym",
)

SUMMARY_CSV_HEADER = (
    "dyad",
    "condition",
    "accuracy",
    "included",
    "entropy",
    "n_cases",
    "mean_complexity",
    "mean_ambiguity",
)

PAIR_COST_CSV_HEADER = (
    "pair_id",
    "mean_complexity",
    "mean_ambiguity",
    "condition",
)


class AnalysisError(Exception):
    pass


class IncompleteLogError(AnalysisError):
    """The log does not contain one completed feedback per round 1..135."""


@dataclass(frozen=True)
class RoundRow:
    """One finished round as the analysis sees it."""

    round: int
    sender: str
    signal: str
    prompt: str
    guess: str
    correct: bool


def round_records(events: list[LogEvent]) -> list[RoundRow]:
    """Flatten a complete dyad log into one row per round, in round order.

    Raises IncompleteLogError unless every round 1..135 contributed exactly
    one feedback with a known sender.
    """
    senders: dict[int, str] = {}
    rows: dict[int, RoundRow] = {}
    for e in events:
        if e.event == SEND:
            senders[e.round] = e.player
        elif e.event == FEEDBACK:
            if e.round in rows:
                raise IncompleteLogError(
                    f"round {e.round} has more than one feedback"
                )
            sender = senders.get(e.round)
            if sender is None:
                raise IncompleteLogError(
                    f"round {e.round} feedback precedes any send"
                )
            rows[e.round] = RoundRow(
                round=e.round,
                sender=sender,
                signal=e.payload["signal"],
                prompt=e.payload["prompt"],
                guess=e.payload["guess"],
                correct=bool(e.payload["correct"]),
            )
    if sorted(rows) != list(range(1, N_ROUNDS + 1)):
        raise IncompleteLogError(
            f"log covers {len(rows)} rounds, need 1..{N_ROUNDS}"
        )
    return [rows[r] for r in range(1, N_ROUNDS + 1)]


def log_metadata(events: list[LogEvent]) -> dict:
    """dyad_id/condition/stimulus snapshot from the opening event."""
    if not events or events[0].event != GAME_START:
        raise AnalysisError("log does not open with game_start")
    return events[0].payload


def dyad_accuracy(
    events: list[LogEvent], include_min: int = INCLUDE_MIN_CORRECT
) -> tuple[float, bool]:
    """Post-burn-in fraction correct and whether the dyad clears the
    inclusion bar (at least `include_min` of the 90 scored rounds)."""
    rows = round_records(events)
    correct = sum(r.correct for r in rows if r.round > BURN_IN_LENGTH)
    return correct / N_POST_ROUNDS, correct >= include_min


def binomial_tail(n: int, p: float, k: int) -> float:
    """Exact probability of at least k successes in n Bernoulli(p) trials."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, n], got k={k}, n={n}")
    return sum(
        math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(k, n + 1)
    )


@dataclass(frozen=True)
class ColexCase:
    """One post-burn-in target-meaning send whose signal was previously
    used (by the same sender) for a different meaning."""

    dyad_id: str
    sender: str
    condition: str
    meaning: str
    prior_meaning: str
    round: int
    pair_id: str
    colex_with_synonym: bool

    def __post_init__(self):
        if self.prior_meaning == self.meaning:
            raise ValueError("a case requires a different prior meaning")

    @property
    def round_scaled(self) -> float:
        return (self.round - ROUND_CENTER) / ROUND_SCALE


def operationalize_colex(
    events: list[LogEvent],
    space: MeaningSpace,
    condition: str,
    dyad_id: str | None = None,
) -> list[ColexCase]:
    """Extract the colexification dataset from one complete log.

    For each post-burn-in send of a target-pair meaning, look up the same
    sender's most recent prior use of that signal anywhere earlier in the
    game (burn-in included). No prior use, or a prior use for the same
    meaning, contributes nothing; otherwise the send becomes a case, marked
    by whether the prior meaning is the current meaning's pair twin.
    """
    rows = round_records(events)
    if dyad_id is None:
        dyad_id = log_metadata(events)["dyad_id"]
    targets = space.target_members()
    cases = []
    last: dict[tuple[str, str], str] = {}
    for row in rows:
        if row.round > BURN_IN_LENGTH and row.prompt in targets:
            prior = last.get((row.sender, row.signal))
            if prior is not None and prior != row.prompt:
                cases.append(
                    ColexCase(
                        dyad_id=dyad_id,
                        sender=row.sender,
                        condition=condition,
                        meaning=row.prompt,
                        prior_meaning=prior,
                        round=row.round,
                        pair_id=space.pair_id(row.prompt),
                        colex_with_synonym=prior == space.twin(row.prompt),
                    )
                )
        last[(row.sender, row.signal)] = row.prompt
    return cases


def entropy_nats(counts) -> float:
    """Shannon entropy (nats) of a usage-count distribution. Accepts a
    mapping or an iterable of non-negative counts; zero counts drop out."""
    if hasattr(counts, "values"):
        counts = counts.values()
    values = [c for c in counts if c]
    if any(c < 0 for c in values):
        raise ValueError("counts must be non-negative")
    total = sum(values)
    if total == 0:
        raise ValueError("at least one positive count required")
    # the +0.0 turns the single-outcome case's -0.0 into a plain 0.0
    return -sum((c / total) * math.log(c / total) for c in values) + 0.0


def signal_entropy(events: list[LogEvent]) -> float:
    """Shannon entropy (nats) of the dyad's post-burn-in signal usage,
    both senders pooled."""
    rows = round_records(events)
    return entropy_nats(
        Counter(r.signal for r in rows if r.round > BURN_IN_LENGTH)
    )


@dataclass(frozen=True)
class CostScore:
    """Per-utterance complexity (cognitive cost) and ambiguity
    (communicative cost), each 0-2, summing to 1..3."""

    round: int
    meaning: str
    complexity: int
    ambiguity: int

    def __post_init__(self):
        if not (0 <= self.complexity <= 2 and 0 <= self.ambiguity <= 2):
            raise ValueError("cost components must be 0-2")
        if not 1 <= self.complexity + self.ambiguity <= 3:
            raise ValueError("cost sum must be 1-3")


def score_utterance(last_same: str, last_syn: str, signal: str) -> tuple[int, int]:
    """Closed-form cost of one utterance given the dyad's most recent
    signals for the same meaning and for its twin.

    Complexity counts the distinct signals now in play within the pair,
    minus one. Ambiguity charges one point for changing the meaning's
    signal and one for colliding with the twin's.
    """
    complexity = len({last_same, last_syn, signal}) - 1
    ambiguity = int(signal != last_same) + int(signal == last_syn)
    return complexity, ambiguity


def cost_scores(
    events: list[LogEvent], space: MeaningSpace
) -> list[CostScore]:
    """Score every post-burn-in send of a target-pair meaning, ignoring
    who sent it. Utterances before both the meaning and its twin have a
    prior signal are skipped (first references have no defined cost)."""
    rows = round_records(events)
    targets = space.target_members()
    last_signal: dict[str, str] = {}
    scores = []
    for row in rows:
        if row.round > BURN_IN_LENGTH and row.prompt in targets:
            last_same = last_signal.get(row.prompt)
            last_syn = last_signal.get(space.twin(row.prompt))
            if last_same is not None and last_syn is not None:
                complexity, ambiguity = score_utterance(
                    last_same, last_syn, row.signal
                )
                scores.append(
                    CostScore(
                        round=row.round,
                        meaning=row.prompt,
                        complexity=complexity,
                        ambiguity=ambiguity,
                    )
                )
        last_signal[row.prompt] = row.signal
    return scores


def pair_cost_means(
    scores: list[CostScore], space: MeaningSpace
) -> dict[str, tuple[float, float]]:
    """Mean (complexity, ambiguity) per target pair over scored utterances."""
    buckets: dict[str, list[CostScore]] = {}
    for s in scores:
        buckets.setdefault(space.pair_id(s.meaning), []).append(s)
    return {
        pid: (
            sum(s.complexity for s in bucket) / len(bucket),
            sum(s.ambiguity for s in bucket) / len(bucket),
        )
        for pid, bucket in sorted(buckets.items())
    }


@dataclass(frozen=True)
class RegressionFit:
    """Fixed-effects logistic fit of colexification-with-synonym on
    condition, scaled round, and their interaction."""

    coefficients: tuple[float, float, float, float]
    standard_errors: tuple[float, float, float, float] | None
    converged: bool
    separated: bool
    n_cases: int
    n_iterations: int
    reference_condition: str


def _design(
    cases: list[ColexCase], reference: str
) -> tuple[np.ndarray, np.ndarray]:
    # canonical row order makes the fit bit-identical under input
    # permutation (floating-point sums are order-sensitive)
    cases = sorted(
        cases,
        key=lambda c: (
            c.dyad_id,
            c.round,
            c.sender,
            c.condition,
            c.meaning,
            c.prior_meaning,
        ),
    )
    x = np.empty((len(cases), 4))
    y = np.empty(len(cases))
    for i, c in enumerate(cases):
        treat = 0.0 if c.condition == reference else 1.0
        r = c.round_scaled
        x[i] = (1.0, treat, r, treat * r)
        y[i] = 1.0 if c.colex_with_synonym else 0.0
    return x, y


def fit_logistic(
    cases: list[ColexCase],
    reference: str | None = None,
    max_iterations: int = 100,
    tolerance: float = 1e-10,
) -> RegressionFit:
    """Iteratively reweighted least squares for the 4-coefficient model.

    Treatment-codes condition against `reference` (default: the
    lexicographically first condition present, which makes "baseline" the
    reference whenever it occurs). Detects complete separation and
    non-convergence instead of returning garbage coefficients.
    """
    conditions = sorted({c.condition for c in cases})
    if len(conditions) != 2:
        raise ValueError(
            f"need cases from exactly 2 conditions, got {conditions}"
        )
    if reference is None:
        reference = conditions[0]
    if reference not in conditions:
        raise ValueError(f"reference {reference!r} not among {conditions}")
    for cond in conditions:
        if sum(c.condition == cond for c in cases) < 2:
            raise ValueError(f"need at least 2 cases in condition {cond!r}")

    x, y = _design(cases, reference)
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise ValueError("design matrix is rank-deficient")
    if y.min() == y.max():
        # a constant outcome has no finite maximum-likelihood fit
        return RegressionFit(
            coefficients=(math.nan,) * 4,
            standard_errors=None,
            converged=False,
            separated=True,
            n_cases=len(cases),
            n_iterations=0,
            reference_condition=reference,
        )

    beta = np.zeros(4)
    converged = False
    separated = False
    iterations = 0
    info = np.eye(4)
    for iterations in range(1, max_iterations + 1):
        eta = x @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu)
        info = x.T @ (x * w[:, None])
        score = x.T @ (y - mu)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            separated = True
            break
        beta = beta + step
        if np.abs(beta).max() > 30.0:
            # log-odds beyond +-30 are numerically deterministic outcomes:
            # the likelihood is still climbing toward infinity
            separated = True
            break
        if np.abs(step).max() < tolerance:
            converged = True
            break

    errors = None
    if converged:
        errors = tuple(float(v) for v in np.sqrt(np.diag(np.linalg.inv(info))))
    return RegressionFit(
        coefficients=tuple(float(b) for b in beta)
        if not separated
        else (math.nan,) * 4,
        standard_errors=errors,
        converged=converged,
        separated=separated,
        n_cases=len(cases),
        n_iterations=iterations,
        reference_condition=reference,
    )


def predict_prob(
    coefficients, condition: str, round_scaled: float,
    reference: str = "baseline",
) -> float:
    """Model probability of colexifying with the synonym at a point in the
    design space. Accepts a RegressionFit or a 4-sequence of coefficients
    (intercept, condition, round, interaction)."""
    if isinstance(coefficients, RegressionFit):
        reference = coefficients.reference_condition
        coefficients = coefficients.coefficients
    b0, b1, b2, b3 = (float(v) for v in coefficients)
    treat = 0.0 if condition == reference else 1.0
    eta = b0 + b1 * treat + b2 * round_scaled + b3 * treat * round_scaled
    return 1.0 / (1.0 + math.exp(-eta))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write-all-or-nothing: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _yesno(flag: bool) -> str:
    return "yes" if flag else "no"


def cases_to_rows(cases: list[ColexCase]) -> list[dict[str, str]]:
    """The canonical CSV projection, sorted by (dyad, round, sender)."""
    ordered = sorted(cases, key=lambda c: (c.dyad_id, c.round, c.sender))
    return [
        {
            "dyad": c.dyad_id,
            "sender": c.sender,
            "condition": c.condition,
            "meaning": c.meaning,
            "pair_id": c.pair_id,
            "round": str(c.round),
            "round_scaled": f"{c.round_scaled:.6f}",
            "colex": "yes",
            "colex_with_synonym": _yesno(c.colex_with_synonym),
        }
        for c in ordered
    ]


def _csv_text(header: tuple[str, ...], rows: list[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def export_cases_csv(cases: list[ColexCase], path) -> None:
    atomic_write_text(path, _csv_text(CASES_CSV_HEADER, cases_to_rows(cases)))


def read_cases_csv(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CASES_CSV_HEADER:
            raise AnalysisError(f"unexpected case CSV header in {path}")
        return list(reader)


@dataclass(frozen=True)
class DyadSummary:
    """One dyad's headline numbers."""

    dyad_id: str
    condition: str
    accuracy: float
    included: bool
    entropy: float
    n_cases: int
    mean_complexity: float | None
    mean_ambiguity: float | None


def summarize_dyad(
    events: list[LogEvent],
    space: MeaningSpace,
    condition: str | None = None,
    include_min: int = INCLUDE_MIN_CORRECT,
) -> DyadSummary:
    meta = log_metadata(events)
    if condition is None:
        condition = meta["condition"]
    accuracy, included = dyad_accuracy(events, include_min=include_min)
    cases = operationalize_colex(events, space, condition)
    scores = cost_scores(events, space)
    mean_c = mean_a = None
    if scores:
        mean_c = sum(s.complexity for s in scores) / len(scores)
        mean_a = sum(s.ambiguity for s in scores) / len(scores)
    return DyadSummary(
        dyad_id=meta["dyad_id"],
        condition=condition,
        accuracy=accuracy,
        included=included,
        entropy=signal_entropy(events),
        n_cases=len(cases),
        mean_complexity=mean_c,
        mean_ambiguity=mean_a,
    )


def export_summaries_csv(summaries: list[DyadSummary], path) -> None:
    rows = [
        {
            "dyad": s.dyad_id,
            "condition": s.condition,
            "accuracy": f"{s.accuracy:.6f}",
            "included": _yesno(s.included),
            "entropy": f"{s.entropy:.6f}",
            "n_cases": str(s.n_cases),
            "mean_complexity": ""
            if s.mean_complexity is None
            else f"{s.mean_complexity:.6f}",
            "mean_ambiguity": ""
            if s.mean_ambiguity is None
            else f"{s.mean_ambiguity:.6f}",
        }
        for s in sorted(summaries, key=lambda s: s.dyad_id)
    ]
    atomic_write_text(path, _csv_text(SUMMARY_CSV_HEADER, rows))


def export_pair_costs_csv(
    per_dyad_scores: list[tuple[str, MeaningSpace, list[CostScore]]],
    path,
) -> None:
    """Plot-ready scatter table: mean costs per (pair, condition),
    aggregated over every scored utterance of every contributing dyad.
    Input triples are (condition, space, scores-for-one-dyad)."""
    buckets: dict[tuple[str, str], list[CostScore]] = {}
    for condition, space, scores in per_dyad_scores:
        for s in scores:
            key = (space.pair_id(s.meaning), condition)
            buckets.setdefault(key, []).append(s)
    rows = [
        {
            "pair_id": pid,
            "mean_complexity": f"{sum(s.complexity for s in b) / len(b):.6f}",
            "mean_ambiguity": f"{sum(s.ambiguity for s in b) / len(b):.6f}",
            "condition": condition,
        }
        for (pid, condition), b in sorted(buckets.items())
    ]
    atomic_write_text(path, _csv_text(PAIR_COST_CSV_HEADER, rows))


@dataclass
class LoadedDyad:
    """A parsed, replay-validated log plus its self-describing metadata."""

    path: Path
    dyad_id: str
    condition: str
    stimulus: StimulusBundle
    events: list[LogEvent]
    report: ReplayReport


def load_dyad_log(path) -> LoadedDyad:
    path = Path(path)
    events = parse_log(path.read_text(encoding="utf-8"))
    meta = log_metadata(events)
    report = replay_log(events)
    return LoadedDyad(
        path=path,
        dyad_id=meta["dyad_id"],
        condition=meta["condition"],
        stimulus=StimulusBundle.from_dict(meta["stimulus"]),
        events=events,
        report=report,
    )


def scan_log_dir(
    directory, include_incomplete: bool = False
) -> list[LoadedDyad]:
    """Load every *.jsonl log under a directory tree, sorted by dyad id.

    By default only logs that replay cleanly to a finished 135-round game
    are returned; `include_incomplete` keeps dropouts and replay failures
    too. Files that cannot even be parsed into an opening game_start are
    skipped either way.
    """
    dyads = []
    for path in sorted(Path(directory).rglob("*.jsonl")):
        try:
            dyad = load_dyad_log(path)
        except (AnalysisError, KeyError, ValueError):
            continue
        if not include_incomplete and not (
            dyad.report.ok and dyad.report.complete
        ):
            continue
        dyads.append(dyad)
    dyads.sort(key=lambda d: d.dyad_id)
    return dyads


@dataclass
class DirectoryAnalysis:
    """Everything the exports need, computed over one directory of logs."""

    summaries: list[DyadSummary]
    cases: list[ColexCase]
    per_dyad_scores: list[tuple[str, MeaningSpace, list[CostScore]]]
    fit: RegressionFit | None


def analyze_dyads(
    dyads: list[LoadedDyad],
    include_min: int = INCLUDE_MIN_CORRECT,
) -> DirectoryAnalysis:
    """Per-dyad summaries for everyone; cases and costs only from dyads
    clearing the inclusion bar; one pooled fit when exactly two conditions
    have enough cases."""
    summaries = []
    cases: list[ColexCase] = []
    per_dyad_scores = []
    for dyad in dyads:
        space = dyad.stimulus.space
        summary = summarize_dyad(
            dyad.events, space, dyad.condition, include_min=include_min
        )
        summaries.append(summary)
        if summary.included:
            cases.extend(
                operationalize_colex(dyad.events, space, dyad.condition)
            )
            per_dyad_scores.append(
                (dyad.condition, space, cost_scores(dyad.events, space))
            )
    fit = None
    conditions = sorted({c.condition for c in cases})
    if len(conditions) == 2 and all(
        sum(c.condition == cond for c in cases) >= 2 for cond in conditions
    ):
        fit = fit_logistic(cases)
    return DirectoryAnalysis(
        summaries=summaries,
        cases=cases,
        per_dyad_scores=per_dyad_scores,
        fit=fit,
    )
