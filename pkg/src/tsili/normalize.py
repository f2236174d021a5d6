"""Canonical code form for cross-version equivalence.

``normalize`` performs one left-to-right lexical scan: comments are dropped
(each replaced by a space), every whitespace run outside string and
character literals becomes a single space, and the result is trimmed.
Literal contents are copied verbatim, including comment look-alikes.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property

from .diagnostics import warn

WHITESPACE = " \t\n\r\f\v"

EMPTY_DIGEST = hashlib.sha256(b"").hexdigest()


@dataclass(frozen=True)
class LanguageProfile:
    name: str = "c-family"
    line_comment: str = "//"
    block_comment: tuple[str, str] = ("/*", "*/")
    quotes: tuple[str, ...] = ('"', "'")
    escape: str = "\\"
    source_extension: str = ".java"

    @cached_property
    def scanner(self) -> re.Pattern:
        ws = re.escape(WHITESPACE)
        lc = re.escape(self.line_comment)
        bo, bc = (re.escape(s) for s in self.block_comment)
        esc = re.escape(self.escape)
        alts = [
            rf"(?P<line>{lc}[^\n\r]*)",
            rf"(?P<block>{bo}.*?(?:{bc}|\Z))",
        ]
        for i, q in enumerate(self.quotes):
            qq = re.escape(q)
            # Unterminated literals run to end of input.
            alts.append(rf"(?P<lit{i}>{qq}(?:{esc}.|[^{qq}{esc}])*(?:{qq}|\Z))")
        alts.append(rf"(?P<ws>[{ws}]+)")
        stop = {self.line_comment[0], self.block_comment[0][0], *self.quotes}
        stop_cls = "".join(re.escape(c) for c in sorted(stop)) + ws
        alts.append(rf"(?P<code>[^{stop_cls}]+|.)")
        return re.compile("|".join(alts), re.DOTALL)


C_FAMILY = LanguageProfile()


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class NormalizedCode:
    text: str
    digest: str = field(default="")

    def __post_init__(self):
        if not self.digest:
            object.__setattr__(self, "digest", digest_text(self.text))

    @property
    def empty(self) -> bool:
        return self.text == ""


def digest_of(code: NormalizedCode) -> str:
    """SHA-256 hex digest of the canonical text (``EMPTY_DIGEST`` for "")."""
    return code.digest


def normalize(
    raw: str,
    profile: LanguageProfile = C_FAMILY,
    *,
    source: str = "<string>",
    warnings: list | None = None,
) -> NormalizedCode:
    out: list[str] = []
    pending_space = False
    block_close = profile.block_comment[1]
    for m in profile.scanner.finditer(raw):
        kind = m.lastgroup
        tok = m.group()
        if kind == "ws" or kind == "line":
            pending_space = True
            continue
        if kind == "block":
            if len(tok) < len(profile.block_comment[0]) + len(block_close) or not tok.endswith(block_close):
                warn("unterminated-comment", f"source={source} offset={m.start()}", warnings)
            pending_space = True
            continue
        if kind.startswith("lit"):
            quote = tok[0]
            closed = len(tok) >= 2 and tok.endswith(quote) and not _escaped_tail(tok, profile.escape)
            if not closed:
                warn("unterminated-literal", f"source={source} offset={m.start()}", warnings)
        if pending_space and out:
            out.append(" ")
        pending_space = False
        out.append(tok)
    return NormalizedCode("".join(out))


def _escaped_tail(tok: str, escape: str) -> bool:
    """True when the final quote of ``tok`` is itself escaped."""
    n = 0
    i = len(tok) - 2
    while i >= 1 and tok[i] == escape:
        n += 1
        i -= 1
    return n % 2 == 1


def normalize_file(path, profile: LanguageProfile = C_FAMILY, warnings: list | None = None) -> NormalizedCode:
    with open(path, "rb") as fh:
        raw = fh.read().decode("utf-8", errors="replace")
    return normalize(raw, profile, source=str(path), warnings=warnings)
