"""Damerau-Levenshtein edit distance with adjacent transpositions.

Picks the compiled kernel at import time when the extension built, else the
pure-Python one. ``BACKEND`` reports which is active; ``benchmarks/`` has a
comparison harness.
"""

from __future__ import annotations

from colexgame._editdist_py import damerau_levenshtein as _dl_py

try:
    from colexgame._editdist import damerau_levenshtein_bytes as _dl_bytes

    BACKEND = "c"
except ImportError:  # extension not built
    _dl_bytes = None
    BACKEND = "python"


def damerau_levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions, substitutions and adjacent
    transpositions turning ``a`` into ``b``. Total function; symmetric;
    zero iff the strings are equal."""
    if _dl_bytes is not None:
        try:
            return _dl_bytes(a.encode("ascii"), b.encode("ascii"))
        except UnicodeEncodeError:
            pass  # non-ASCII: the pure kernel works on code points
    return _dl_py(a, b)
