"""Post-text normalization.

Lowercase, drop URLs and @mentions, strip punctuation, and collapse
number tokens to ``#``. Hashtag tokens survive untouched apart from
lowercasing (they tend to carry topic signal), which also makes the
``#`` number placeholder a fixed point: preprocess is idempotent.
"""

from __future__ import annotations

import re

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_DIGITS_RE = re.compile(r"[0-9]+")

# ASCII punctuation plus the common typographic variants seen in posts.
_PUNCT = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~" + "‘’“”–—…")
_PUNCT_TABLE = {ord(c): None for c in _PUNCT}


def preprocess(text: str) -> str:
    """Normalize raw post text into a space-joined token stream."""
    s = _URL_RE.sub(" ", text)
    s = _MENTION_RE.sub(" ", s)
    s = s.lower()
    out = []
    for token in s.split():
        if token.startswith("#"):
            out.append(token)
            continue
        stripped = token.translate(_PUNCT_TABLE)
        if not stripped:
            continue
        if _DIGITS_RE.fullmatch(stripped):
            out.append("#")
        else:
            out.append(stripped)
    return " ".join(out)


def tokenize(text: str) -> list[str]:
    """Whitespace tokens of the normalized text."""
    return preprocess(text).split()
