"""Builds the bundled mini-lexicon (data/lexicon.tsv) and English wordlist
(data/wordlist.txt), then verifies them through the package validators.

The lexicon ships 13 curated near-synonym pairs, 2 scored pairs that miss
the eligibility bar, and a pool of distractor nouns with fabricated pairwise
embedding cosines. Most cosines sit safely under the 0.2 cap; a handful are
set above it so the cap is exercised by real data. Run from the repo root:

    python3 scripts/build_bundled_lexicon.py
"""

from __future__ import annotations

import itertools
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from colexgame.editdist import damerau_levenshtein
from colexgame.lexicon import (
    PAIRED_DISTRACTORS,
    STANDARD,
    eligible_target_pairs,
    generate_signal_set,
    load_lexicon,
    load_wordlist,
    sample_meaning_space,
    validate_meaning_space,
    validate_signal_set,
)

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "colexgame" / "data"

# Near-synonym pairs: high crowdsourced similarity, low association.
ELIGIBLE_PAIRS = [
    ("abdomen", "belly", 8.1, 0.1),
    ("area", "zone", 8.4, 0.5),
    ("author", "creator", 8.6, 0.7),
    ("bag", "purse", 8.2, 0.4),
    ("coast", "shore", 8.9, 0.6),
    ("couple", "pair", 8.5, 0.8),
    ("danger", "threat", 8.8, 0.9),
    ("drizzle", "rain", 8.3, 0.6),
    ("engine", "motor", 9.0, 0.7),
    ("fashion", "style", 8.7, 0.5),
    ("job", "task", 8.4, 0.3),
    ("journey", "trip", 8.6, 0.2),
    ("noise", "racket", 8.1, 0.4),
]

# Scored pairs that fail eligibility: one highly associated, one dissimilar.
INELIGIBLE_PAIRS = [
    ("jet", "plane", 8.1, 6.6),
    ("arm", "leg", 2.9, 6.7),
]

# Candidate distractor nouns (picturable concepts, 3-7 letters). Initial
# letters deliberately avoid q/w/h/l so signal generation always has free
# consonants; the filter below drops candidates too close in form to the
# near-synonym pair members or to earlier candidates.
DISTRACTOR_POOL = [
    "table", "garden", "forest", "pencil", "bottle", "candle", "mirror",
    "camera", "guitar", "jacket", "bridge", "donkey", "eagle", "falcon",
    "island", "kettle", "magnet", "needle", "ocean", "pillow", "rabbit",
    "temple", "turtle", "violin", "zebra", "anchor", "basket", "cannon",
    "barrel", "button", "carpet", "cherry", "circus", "collar", "curtain",
    "diamond", "feather", "finger", "flower", "funnel", "goose", "grape",
    "igloo", "jungle", "kitten", "marble", "napkin", "onion", "orange",
    "oyster", "panda", "parrot", "peanut", "pebble", "penguin", "piano",
    "pigeon", "planet", "pocket", "potato", "puddle", "puppet", "radish",
    "ribbon", "robot", "sandal", "shovel", "spider", "spoon", "squid",
    "statue", "sword", "teapot", "tiger", "tomato", "tunnel", "vulture",
    "cactus", "cobweb", "comet", "coral", "crayon", "sunset", "turnip",
]

N_DISTRACTORS = 44
HIGH_COSINE_PAIRS = 5
COSINE_SEED = 20240917

WORDLIST_EXTRA = """
about above acorn after again alarm alley ankle apple apron attic awake
badge baker beach beard birch blaze blend block bloom board brain brave
bread brick broom brush cabin chalk charm chess chest chill churn cider
cliff cloak clock cloud coach comic couch cove craft crane crate creek
crest crisp crown crumb cycle daisy dance dawn deck dish ditch dock dough
dream dress drum dusk dust earth easel edge elbow ember fable fairy fence
fern field flame flask fleet flock foam fog frost fruit gale gate gem
glade glass glove gown grain grove gulf gust harbor hatch hearth hill
hinge hive honey hook horn house hush inlet ivory ivy jewel keel knight
knoll lace lake lamp latch leaf ledge loft log loom maple mask mast meadow
mist moss moth nest oak oar orchard otter owl palace path peak pearl pier
plank plum pond porch quilt rack raft reef ridge river road rock roof
root rope rose rust sail salt sand scarf shade shelf shell ship silk
slope smoke snow spark spear spice spring stack stair stamp star steam
steel stem step stool storm stove straw stream street sugar swamp swan
thorn tide tower trail tree trunk twig valley vase vine wall wave well
wharf wheat wool yard yarn
"""

# English words shaped like two consonant-vowel syllables over the signal
# inventories; these make the wordlist exclusion bite during generation.
WORDLIST_CVCV = """
fame fate file fine fire fume fuse hale halo hare hate here hero hire
hole home hope hose hula lame lane late life lime line lone lore lute
mama mane mare mate mesa mile mime mine mire mole mope more mote mule
muse mute name nape nine none nope nose note pale pane pare papa peso
pile pine pipe pole polo pore pose puma pure ripe rise rite rule rune
ruse safe sale same sane silo sire site sofa sole solo sore sumo sure
tale tame tape taro tile time tire tofu tone tote tuna tune wane ware
wife wile wine wipe wire wise wore
"""


def forms_ok(a: str, b: str) -> bool:
    if a in b or b in a:
        return False
    return damerau_levenshtein(a, b) >= 3


def pick_distractors() -> list[str]:
    anchors = [w for p in ELIGIBLE_PAIRS for w in p[:2]]
    kept: list[str] = []
    for cand in DISTRACTOR_POOL:
        if not 3 <= len(cand) <= 7:
            continue
        if all(forms_ok(cand, w) for w in anchors + kept):
            kept.append(cand)
        if len(kept) == N_DISTRACTORS:
            break
    if len(kept) < N_DISTRACTORS:
        raise SystemExit(
            f"distractor pool too small after filtering: {len(kept)}"
        )
    return kept


def build_rows(distractors: list[str]) -> list[tuple[str, str, str, str, str]]:
    rows = []
    for w1, w2, sim, assoc in ELIGIBLE_PAIRS + INELIGIBLE_PAIRS:
        rows.append((w1, w2, f"{sim}", f"{assoc}", ""))

    anchors = sorted({w for p in ELIGIBLE_PAIRS for w in p[:2]})
    rng = random.Random(COSINE_SEED)
    dd_pairs = [
        tuple(sorted(p)) for p in itertools.combinations(sorted(distractors), 2)
    ]
    high = set(dd_pairs[:HIGH_COSINE_PAIRS])
    for w1, w2 in dd_pairs:
        if (w1, w2) in high:
            cos = round(rng.uniform(0.25, 0.6), 2)
        else:
            cos = round(rng.uniform(0.01, 0.18), 2)
        rows.append((w1, w2, "", "", f"{cos}"))
    for d in sorted(distractors):
        for a in anchors:
            w1, w2 = sorted((d, a))
            cos = round(rng.uniform(0.01, 0.18), 2)
            rows.append((w1, w2, "", "", f"{cos}"))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def build_wordlist(distractors: list[str]) -> list[str]:
    words = set(WORDLIST_EXTRA.split()) | set(WORDLIST_CVCV.split())
    words.update(w for p in ELIGIBLE_PAIRS + INELIGIBLE_PAIRS for w in p[:2])
    words.update(distractors)
    return sorted(words)


def verify(n_seeds: int = 50) -> None:
    lex = load_lexicon(DATA_DIR / "lexicon.tsv")
    wordlist = load_wordlist(DATA_DIR / "wordlist.txt")
    expected = sorted(tuple(sorted(p[:2])) for p in ELIGIBLE_PAIRS)
    got = eligible_target_pairs(lex)
    assert got == expected, f"eligible pairs mismatch:\n{got}\n{expected}"

    for variant in (STANDARD, PAIRED_DISTRACTORS):
        for seed in range(1, n_seeds + 1):
            space = sample_meaning_space(lex, variant, seed)
            bad = validate_meaning_space(space, lex)
            assert not bad, f"{variant} seed {seed}: {bad}"
            for n in (7, 10):
                sset = generate_signal_set(space, n, wordlist, seed)
                bad = validate_signal_set(sset, space, wordlist)
                assert not bad, f"signals {variant} seed {seed} n={n}: {bad}"
    print(f"verified {n_seeds} seeds per variant, signal sets of 7 and 10")


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    distractors = pick_distractors()
    rows = build_rows(distractors)
    lex_path = DATA_DIR / "lexicon.tsv"
    with open(lex_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word1\tword2\tsimilarity\tassociation\tcosine\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    print(f"wrote {lex_path} ({len(rows)} scored pairs)")

    wl_path = DATA_DIR / "wordlist.txt"
    with open(wl_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(build_wordlist(distractors)) + "\n")
    print(f"wrote {wl_path}")

    verify()


if __name__ == "__main__":
    main()
