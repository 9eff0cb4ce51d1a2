"""Scored lexicon ingestion, meaning-space sampling and artificial signal
generation.

The lexicon is a TSV of scored word pairs (crowdsourced similarity and
association on a 0-10 scale, embedding cosine on 0-1). Meaning spaces pick
3 near-synonym target pairs plus 4 low-similarity distractors; signal sets
are CV-CV nonce words kept formally distant from the meanings and from each
other. All sampling is rejection sampling driven by a caller-supplied seed.
"""

from __future__ import annotations

import csv
import itertools
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from colexgame.editdist import damerau_levenshtein

CONSONANTS = "qwtpsfhnmrl"
VOWELS = "aeoui"

STANDARD = "standard"
PAIRED_DISTRACTORS = "paired_distractors"
VARIANTS = (STANDARD, PAIRED_DISTRACTORS)

MIN_SIMILARITY = 8.0
MAX_ASSOCIATION = 1.0
MAX_DISTRACTOR_COSINE = 0.2
MIN_FORM_DISTANCE = 3
MIN_MEANING_LEN = 3
MAX_MEANING_LEN = 7
SIGNAL_LEN = 4

# Attempts per sampled element before giving up; the constraint system is
# sparse so legitimate inputs stay far below this.
MAX_ATTEMPTS = 10_000


class LexiconError(ValueError):
    """Base for lexicon loading and sampling failures."""


class LexiconParseError(LexiconError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScoreRangeError(LexiconError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ExhaustionError(LexiconError):
    """Rejection sampling hit the attempt cap; constraints unsatisfiable."""


def pair_key(w1: str, w2: str) -> tuple[str, str]:
    """Canonical unordered pair."""
    return (w1, w2) if w1 <= w2 else (w2, w1)


@dataclass(frozen=True)
class PairScore:
    similarity: float | None = None
    association: float | None = None
    cosine: float | None = None


@dataclass
class Lexicon:
    """Words plus scored unordered pairs."""

    words: tuple[str, ...]
    pair_scores: dict[tuple[str, str], PairScore] = field(default_factory=dict)

    @property
    def entries(self) -> list[tuple[str, int]]:
        return [(w, len(w)) for w in self.words]

    def score(self, w1: str, w2: str) -> PairScore | None:
        return self.pair_scores.get(pair_key(w1, w2))

    def cosine(self, w1: str, w2: str) -> float | None:
        s = self.score(w1, w2)
        return s.cosine if s else None


_WORD_OK = set("abcdefghijklmnopqrstuvwxyz")


def _check_word(word: str, line: int) -> str:
    if not word or len(word) > 20 or not set(word) <= _WORD_OK:
        raise LexiconParseError(
            line, f"bad word {word!r}: need 1-20 lowercase ASCII letters"
        )
    return word


def _parse_score(raw: str, line: int, name: str, lo: float, hi: float) -> float | None:
    if raw == "":
        return None
    try:
        value = float(raw)
    except ValueError:
        raise LexiconParseError(line, f"non-numeric {name} {raw!r}") from None
    if not lo <= value <= hi:
        raise ScoreRangeError(line, f"{name} {value} outside [{lo}, {hi}]")
    return value


def load_lexicon(path: str | Path) -> Lexicon:
    """Parse a lexicon TSV (header row: word1 word2 similarity association
    cosine; blank fields mean absent). Raises on malformed rows, carrying
    the 1-based line number."""
    words: set[str] = set()
    scores: dict[tuple[str, str], PairScore] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None:
            return Lexicon(words=())
        if [c.strip().lower() for c in header[:2]] != ["word1", "word2"]:
            raise LexiconParseError(1, "missing header row (word1<TAB>word2<TAB>...)")
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise LexiconParseError(line, f"expected >= 2 fields, got {len(row)}")
            row = [f.strip() for f in row] + [""] * (5 - len(row))
            w1 = _check_word(row[0], line)
            w2 = _check_word(row[1], line)
            if w1 == w2:
                raise LexiconParseError(line, f"self-pair {w1!r}")
            key = pair_key(w1, w2)
            if key in scores:
                raise LexiconParseError(line, f"duplicate pair {key[0]}-{key[1]}")
            scores[key] = PairScore(
                similarity=_parse_score(row[2], line, "similarity", 0.0, 10.0),
                association=_parse_score(row[3], line, "association", 0.0, 10.0),
                cosine=_parse_score(row[4], line, "cosine", 0.0, 1.0),
            )
            words.add(w1)
            words.add(w2)
    return Lexicon(words=tuple(sorted(words)), pair_scores=scores)


def load_wordlist(path: str | Path) -> frozenset[str]:
    """English word list, one lowercase word per line."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def bundled_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "lexicon.tsv"


def bundled_wordlist_path() -> Path:
    return Path(__file__).parent / "data" / "wordlist.txt"


def _forms_ok(a: str, b: str) -> bool:
    """Form-dissimilarity rule between two meanings or signals."""
    if a in b or b in a:
        return False
    return damerau_levenshtein(a, b) >= MIN_FORM_DISTANCE


def eligible_target_pairs(lex: Lexicon) -> list[tuple[str, str]]:
    """Near-synonym pairs usable as targets: similarity >= 8, association
    scored and < 1, both words 3-7 letters, formally distinct, different
    first letters. Lexicographic order."""
    out = []
    for (w1, w2), s in lex.pair_scores.items():
        if s.similarity is None or s.similarity < MIN_SIMILARITY:
            continue
        if s.association is None or s.association >= MAX_ASSOCIATION:
            continue
        if not all(MIN_MEANING_LEN <= len(w) <= MAX_MEANING_LEN for w in (w1, w2)):
            continue
        if w1[0] == w2[0]:
            continue
        if not _forms_ok(w1, w2):
            continue
        out.append((w1, w2))
    return sorted(out)


@dataclass(frozen=True)
class MeaningSpace:
    target_pairs: tuple[tuple[str, str], ...]
    distractors: tuple[str, ...]
    variant: str = STANDARD

    def meanings(self) -> tuple[str, ...]:
        return tuple(m for p in self.target_pairs for m in p) + self.distractors

    def target_members(self) -> frozenset[str]:
        return frozenset(m for p in self.target_pairs for m in p)

    def twin(self, meaning: str) -> str | None:
        """The target-pair partner of a meaning, if it has one."""
        for a, b in self.target_pairs:
            if meaning == a:
                return b
            if meaning == b:
                return a
        return None

    def pair_id(self, meaning: str) -> str | None:
        for a, b in self.target_pairs:
            if meaning in (a, b):
                return f"{a}-{b}"
        return None

    def distractor_pairs(self) -> tuple[tuple[str, str], ...]:
        """The two similar distractor pairs of the paired variant."""
        if self.variant != PAIRED_DISTRACTORS:
            return ()
        d = self.distractors
        return (pair_key(d[0], d[1]), pair_key(d[2], d[3]))

    def to_dict(self) -> dict:
        return {
            "target_pairs": [list(p) for p in self.target_pairs],
            "distractors": list(self.distractors),
            "variant": self.variant,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeaningSpace":
        return cls(
            target_pairs=tuple(pair_key(*p) for p in d["target_pairs"]),
            distractors=tuple(d["distractors"]),
            variant=d["variant"],
        )


def validate_meaning_space(space: MeaningSpace, lex: Lexicon | None = None) -> list[str]:
    """Re-checks every meaning-space invariant from scratch; returns the list
    of violations (empty = valid). With a lexicon, also re-checks pair
    eligibility and the distractor cosine cap."""
    v: list[str] = []
    meanings = space.meanings()
    if space.variant not in VARIANTS:
        v.append(f"unknown variant {space.variant!r}")
    if len(space.target_pairs) != 3:
        v.append(f"expected 3 target pairs, got {len(space.target_pairs)}")
    if len(space.distractors) != 4:
        v.append(f"expected 4 distractors, got {len(space.distractors)}")
    if len(set(meanings)) != 10:
        v.append(f"expected 10 distinct meanings, got {len(set(meanings))}")
    for m in meanings:
        if not MIN_MEANING_LEN <= len(m) <= MAX_MEANING_LEN:
            v.append(f"meaning {m!r} not {MIN_MEANING_LEN}-{MAX_MEANING_LEN} chars")
    for a, b in itertools.combinations(sorted(set(meanings)), 2):
        if a in b or b in a:
            v.append(f"substring meanings: {a!r} / {b!r}")
        if damerau_levenshtein(a, b) < MIN_FORM_DISTANCE:
            v.append(f"meanings too close in form: {a!r} / {b!r}")
    for a, b in space.target_pairs:
        if a[0] == b[0]:
            v.append(f"target pair {a}-{b} shares first letter")

    pairs_to_check = list(space.target_pairs)
    if space.variant == PAIRED_DISTRACTORS:
        pairs_to_check += list(space.distractor_pairs())
    if lex is not None:
        eligible = set(eligible_target_pairs(lex))
        for p in pairs_to_check:
            if pair_key(*p) not in eligible:
                v.append(f"pair {p[0]}-{p[1]} not an eligible similarity pair")
        if space.variant == STANDARD:
            for d in space.distractors:
                for m in meanings:
                    if m == d:
                        continue
                    if m in space.distractors and m < d:
                        continue  # unordered: check each distractor pair once
                    c = lex.cosine(d, m)
                    if c is None:
                        v.append(f"no cosine score for {d}-{m}")
                    elif c > MAX_DISTRACTOR_COSINE:
                        v.append(f"cosine({d},{m}) = {c} > {MAX_DISTRACTOR_COSINE}")
    return v


def _compatible(word: str, chosen: Iterable[str]) -> bool:
    return all(_forms_ok(word, m) for m in chosen)


def sample_meaning_space(lex: Lexicon, variant: str, seed: int) -> MeaningSpace:
    """Draw a meaning space under the given variant. Deterministic in seed;
    raises ExhaustionError when the lexicon cannot satisfy the constraints."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    rng = random.Random(seed)
    eligible = eligible_target_pairs(lex)
    n_pairs = 3 if variant == STANDARD else 5
    if len(eligible) < n_pairs:
        raise ExhaustionError(
            f"need {n_pairs} eligible target pairs, lexicon has {len(eligible)}"
        )

    for _ in range(MAX_ATTEMPTS):
        pairs = rng.sample(eligible, n_pairs)
        words = [w for p in pairs for w in p]
        if len(set(words)) != 2 * n_pairs:
            continue
        cross_ok = all(
            _forms_ok(a, b)
            for a, b in itertools.combinations(words, 2)
            if pair_key(a, b) not in {pair_key(*p) for p in pairs}
        )
        # within-pair form constraints hold by eligibility
        if not cross_ok:
            continue
        if variant == PAIRED_DISTRACTORS:
            rng.shuffle(pairs)
            targets = tuple(pair_key(*p) for p in pairs[:3])
            distractors = tuple(w for p in pairs[3:] for w in pair_key(*p))
            return MeaningSpace(targets, distractors, variant)
        space = _sample_standard_distractors(lex, rng, pairs)
        if space is not None:
            return space
    raise ExhaustionError("could not sample a meaning space within the attempt cap")


def _sample_standard_distractors(
    lex: Lexicon, rng: random.Random, pairs: list[tuple[str, str]]
) -> MeaningSpace | None:
    target_words = [w for p in pairs for w in p]
    excluded = {w for p in eligible_target_pairs(lex) for w in p}
    candidates = [
        w
        for w in lex.words
        if w not in excluded and MIN_MEANING_LEN <= len(w) <= MAX_MEANING_LEN
    ]
    if len(candidates) < 4:
        return None
    chosen: list[str] = []
    for _ in range(4):
        picked = None
        for _attempt in range(MAX_ATTEMPTS):
            cand = rng.choice(candidates)
            if cand in chosen:
                continue
            others = target_words + chosen
            if not _compatible(cand, others):
                continue
            cosines = [lex.cosine(cand, m) for m in others]
            if any(c is None or c > MAX_DISTRACTOR_COSINE for c in cosines):
                continue
            picked = cand
            break
        if picked is None:
            return None
        chosen.append(picked)
    return MeaningSpace(
        tuple(pair_key(*p) for p in pairs), tuple(chosen), STANDARD
    )


@dataclass(frozen=True)
class SignalSet:
    signals: tuple[str, ...]
    consonants: str = CONSONANTS
    vowels: str = VOWELS

    def __contains__(self, signal: str) -> bool:
        return signal in self.signals

    def to_dict(self) -> dict:
        return {
            "signals": list(self.signals),
            "consonants": self.consonants,
            "vowels": self.vowels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignalSet":
        return cls(
            signals=tuple(d["signals"]),
            consonants=d.get("consonants", CONSONANTS),
            vowels=d.get("vowels", VOWELS),
        )


def is_cvcv(word: str) -> bool:
    return (
        len(word) == SIGNAL_LEN
        and word[0] in CONSONANTS
        and word[1] in VOWELS
        and word[2] in CONSONANTS
        and word[3] in VOWELS
    )


def all_cvcv_forms() -> list[str]:
    """Every consonant-vowel-consonant-vowel form over the inventories
    (11 * 5 * 11 * 5 = 3025 candidates)."""
    return [
        c1 + v1 + c2 + v2
        for c1 in CONSONANTS
        for v1 in VOWELS
        for c2 in CONSONANTS
        for v2 in VOWELS
    ]


def validate_signal_set(
    sset: SignalSet, space: MeaningSpace, wordlist: frozenset[str] | None = None
) -> list[str]:
    """Independent re-check of every signal-set invariant."""
    v: list[str] = []
    meanings = space.meanings()
    initials = {m[0] for m in meanings}
    if len(sset.signals) not in (7, 10):
        v.append(f"expected 7 or 10 signals, got {len(sset.signals)}")
    if len(set(sset.signals)) != len(sset.signals):
        v.append("duplicate signals")
    for s in sset.signals:
        if not is_cvcv(s):
            v.append(f"signal {s!r} is not two CV syllables from the inventories")
        elif s[0] in initials:
            v.append(f"signal {s!r} shares a first letter with a meaning")
        if wordlist is not None and s in wordlist:
            v.append(f"signal {s!r} is an English word")
    for a, b in itertools.combinations(sset.signals, 2):
        if damerau_levenshtein(a, b) < MIN_FORM_DISTANCE:
            v.append(f"signals too close in form: {a!r} / {b!r}")
    for s in sset.signals:
        for m in meanings:
            if damerau_levenshtein(s, m) < MIN_FORM_DISTANCE:
                v.append(f"signal {s!r} too close to meaning {m!r}")
    return v


def generate_signal_set(
    space: MeaningSpace, n: int, wordlist: frozenset[str], seed: int
) -> SignalSet:
    """Sample n CV-CV nonce signals for a meaning space. Deterministic in
    seed."""
    if n not in (7, 10):
        raise ValueError(f"signal set size must be 7 or 10, got {n}")
    rng = random.Random(seed)
    meanings = space.meanings()
    initials = {m[0] for m in meanings}
    pool = [f for f in all_cvcv_forms() if f[0] not in initials and f not in wordlist]
    if not pool:
        raise ExhaustionError("no candidate CV-CV forms left after filtering")
    signals: list[str] = []
    for _ in range(n):
        picked = None
        for _attempt in range(MAX_ATTEMPTS):
            cand = rng.choice(pool)
            if cand in signals:
                continue
            if any(
                damerau_levenshtein(cand, s) < MIN_FORM_DISTANCE for s in signals
            ):
                continue
            if any(
                damerau_levenshtein(cand, m) < MIN_FORM_DISTANCE for m in meanings
            ):
                continue
            picked = cand
            break
        if picked is None:
            raise ExhaustionError(
                f"could not find signal {len(signals) + 1} of {n} within the cap"
            )
        signals.append(picked)
    return SignalSet(signals=tuple(signals))


@dataclass(frozen=True)
class StimulusBundle:
    """Meaning space + signal set + provenance; the canonical input to the
    scheduler, the server and the simulator."""

    space: MeaningSpace
    signals: SignalSet
    seed: int

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "seed": self.seed,
            "variant": self.space.variant,
            "meaning_space": self.space.to_dict(),
            "signal_set": self.signals.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusBundle":
        return cls(
            space=MeaningSpace.from_dict(d["meaning_space"]),
            signals=SignalSet.from_dict(d["signal_set"]),
            seed=d["seed"],
        )

    @classmethod
    def from_json(cls, text: str) -> "StimulusBundle":
        return cls.from_dict(json.loads(text))


def make_stimulus(
    lex: Lexicon,
    wordlist: frozenset[str],
    variant: str,
    n_signals: int,
    seed: int,
) -> StimulusBundle:
    """Sample a full stimulus bundle (meaning space + signals) from one seed."""
    rng = random.Random(seed)
    space_seed = rng.getrandbits(63)
    signal_seed = rng.getrandbits(63)
    space = sample_meaning_space(lex, variant, space_seed)
    signals = generate_signal_set(space, n_signals, wordlist, signal_seed)
    return StimulusBundle(space=space, signals=signals, seed=seed)


def load_stimulus(path: str | Path) -> StimulusBundle:
    return StimulusBundle.from_json(Path(path).read_text(encoding="utf-8"))
