"""Pure-Python Damerau-Levenshtein kernel (Lowrance-Wagner algorithm).

This is the fallback used when the compiled extension is unavailable; both
kernels must agree on every input. Unlike the "optimal string alignment"
shortcut, this unrestricted variant is a true metric (triangle inequality
holds), which the stimulus validators rely on.
"""

from __future__ import annotations


def damerau_levenshtein(a, b) -> int:
    """Edit distance allowing insertions, deletions, substitutions and
    transpositions of adjacent characters. Accepts strings or byte strings."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la

    maxdist = la + lb
    # DP table with a one-row/column sentinel border (index shift of +1).
    d = [[maxdist] * (lb + 2) for _ in range(la + 2)]
    for i in range(la + 1):
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[1][j + 1] = j

    last_row: dict = {}  # char -> last row in `a` where it occurred (1-based)
    for i in range(1, la + 1):
        ch_a = a[i - 1]
        last_col = 0  # last column in this row where b matched a[i-1]
        row = d[i + 1]
        prev = d[i]
        for j in range(1, lb + 1):
            ch_b = b[j - 1]
            k = last_row.get(ch_b, 0)
            l = last_col
            if ch_a == ch_b:
                cost = 0
                last_col = j
            else:
                cost = 1
            row[j + 1] = min(
                prev[j] + cost,  # substitution / match
                row[j] + 1,  # insertion
                prev[j + 1] + 1,  # deletion
                d[k][l] + (i - k - 1) + 1 + (j - l - 1),  # transposition
            )
        last_row[ch_a] = i
    return d[la + 1][lb + 1]
