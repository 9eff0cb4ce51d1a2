"""colexgame: a dyadic colexification communication game platform.

Stimulus generation, communicative-need trial schedules, a sender/receiver
game engine for simulated agents and live human dyads, and the analysis
pipeline (colexification coding, entropy, cost scoring, logistic fits).
"""

from colexgame.editdist import damerau_levenshtein

__version__ = "0.1.0"

__all__ = ["damerau_levenshtein", "__version__"]
