"""Vocabulary parsing and validation.

The import format is tab-separated text, one item per line::

    id <TAB> prompt <TAB> answer

Blank lines and lines starting with ``#`` are ignored.  Parsing is strict
otherwise: a malformed line fails the whole import with its line number,
and duplicate ids reject the document atomically.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class VocabularyError(ValueError):
    """A vocabulary document failed validation; nothing was ingested."""


@dataclass(frozen=True, slots=True)
class VocabularyItem:
    id: str
    prompt: str
    answer: str

    def __post_init__(self) -> None:
        if not self.id or not self.prompt or not self.answer:
            raise VocabularyError("id, prompt, and answer must be non-empty")


def parse_vocabulary(text: str) -> list[VocabularyItem]:
    items: list[VocabularyItem] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise VocabularyError(
                f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
            )
        item_id, prompt, answer = (f.strip() for f in fields)
        if not item_id or not prompt or not answer:
            raise VocabularyError(f"line {lineno}: empty id, prompt, or answer")
        if item_id in seen:
            raise VocabularyError(f"line {lineno}: duplicate id {item_id!r}")
        seen.add(item_id)
        items.append(VocabularyItem(item_id, prompt, answer))
    if not items:
        raise VocabularyError("vocabulary document holds no items")
    return items


def load_vocabulary(path: Path | None) -> list[VocabularyItem]:
    """Parse the file at ``path``, or the bundled sample when ``None``."""
    if path is None:
        text = resources.files("adaptutor.data").joinpath("sample_vocabulary.tsv").read_text(
            encoding="utf-8"
        )
        return parse_vocabulary(text)
    if not Path(path).exists():
        raise VocabularyError(f"vocabulary file not found: {path}")
    return parse_vocabulary(Path(path).read_text(encoding="utf-8"))
