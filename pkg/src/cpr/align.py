"""Longest-common-subsequence alignment over token text lists."""

from __future__ import annotations


def lcs_table(a: list[str], b: list[str]):
    """Suffix LCS lengths: table[i][j] = LCS of a[i:] and b[j:]."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = table[i], table[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]
    return table


def lcs_match(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    """Matched (i, j) index pairs; ties resolved toward the leftmost match."""
    table = lcs_table(a, b)
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j] and table[i][j] == table[i + 1][j + 1] + 1:
            out.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def lcs_length(a: list[str], b: list[str]) -> int:
    return lcs_table(a, b)[0][0] if a and b else 0


def similarity(a: list[str], b: list[str]) -> float:
    """|LCS| / max(len); 1.0 when both sequences are empty."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return lcs_length(a, b) / max(len(a), len(b))


def changed_indices(base: list[str], other: list[str]) -> list[int]:
    """Indices of `other` that are not part of an LCS alignment with `base`."""
    matched = {j for _, j in lcs_match(base, other)}
    return [j for j in range(len(other)) if j not in matched]
