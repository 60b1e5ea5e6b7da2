"""Text normalization, whitespace tokenization, and edit-distance primitives.

Everything in this module is deterministic and dependency-free so that the
matching layers built on top of it stay reproducible across runs.
"""

from __future__ import annotations

import re

_WS_RUN = re.compile(r"\s+")
_TOKEN = re.compile(r"\S+")


def normalize_text(s: str) -> str:
    """Casefold and collapse all whitespace runs to single spaces.

    Idempotent: normalize_text(normalize_text(s)) == normalize_text(s).
    """
    return _WS_RUN.sub(" ", s).strip().casefold()


def token_spans(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character offsets of each maximal non-whitespace run."""
    return [m.span() for m in _TOKEN.finditer(text)]


def whitespace_token_count(text: str) -> int:
    """Number of maximal non-whitespace runs in *text*."""
    return sum(1 for _ in _TOKEN.finditer(text))


def levenshtein(a: str, b: str) -> int:
    """Edit distance between two strings (insert / delete / substitute, unit cost).

    Two-row dynamic program, O(len(a) * len(b)) time, O(min) space.
    """
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    if not a:
        return len(b)

    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j] + [0] * len(a)
        for i, ca in enumerate(a, start=1):
            if ca == cb:
                cur[i] = prev[i - 1]
            else:
                cur[i] = 1 + min(prev[i - 1], prev[i], cur[i - 1])
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """Normalized edit similarity: 1 - levenshtein / max(len(a), len(b)).

    Both strings empty -> 1.0.
    """
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))
