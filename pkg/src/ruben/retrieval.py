"""Deterministic lexical retrieval over a small document corpus.

Scoring is a smoothed tf-idf: each query token contributes
``tf(token, doc) * log(1 + N / df(token))`` to a document's score, where N is
the corpus size and df counts documents containing the token.  The smoothing
keeps every matching token's contribution strictly positive, so any document
sharing at least one token with the question outranks any document sharing
none.  Ties break on ascending document id, which makes retrieval fully
deterministic for a fixed corpus and question.

Retrieved documents are working copies: their text can be edited (to inject
adversarial instructions) and reset without touching the corpus.  The
retrieved set is frozen at retrieval time — edits change what reaches the
model's prompt, never the ranking.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, RetrievalError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True, slots=True)
class CorpusDoc:
    """One immutable document as stored in a corpus file."""

    id: str
    title: str
    text: str


class Corpus:
    """A validated, ordered collection of documents."""

    def __init__(
        self,
        docs: list[CorpusDoc] | tuple[CorpusDoc, ...],
        system_tag: str | None = None,
    ):
        if not docs:
            raise ConfigError("corpus must contain at least one document")
        seen: set[str] = set()
        for doc in docs:
            if not doc.id:
                raise ConfigError("corpus document has an empty id")
            if doc.id in seen:
                raise ConfigError(f"duplicate document id in corpus: {doc.id!r}")
            if not doc.text:
                raise ConfigError(f"corpus document {doc.id!r} has empty text")
            seen.add(doc.id)
        self.docs: tuple[CorpusDoc, ...] = tuple(docs)
        self.system_tag = system_tag
        self._by_id: dict[str, CorpusDoc] = {d.id: d for d in self.docs}

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    def __getitem__(self, doc_id: str) -> CorpusDoc:
        return self._by_id[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id


@dataclass(slots=True)
class SourceDoc:
    """A retrieved document, mutable via user edits between mining runs."""

    id: str
    title: str
    original_text: str
    current_text: str
    score: float = field(default=0.0)

    @property
    def edited(self) -> bool:
        return self.current_text != self.original_text


def retrieve(query: str, corpus: Corpus, k: int) -> list[SourceDoc]:
    """Return the top-k documents for `query`, highest score first.

    Only documents sharing at least one token with the query are candidates;
    raises RetrievalError when no document matches at all.
    """
    if k < 1:
        raise ConfigError(f"retrieval k must be >= 1, got {k}")
    query_tokens = tokenize(query)
    if not query_tokens:
        raise RetrievalError("query contains no indexable tokens")

    doc_tokens: dict[str, list[str]] = {
        d.id: tokenize(d.title + " " + d.text) for d in corpus
    }
    n_docs = len(corpus)
    df: dict[str, int] = {}
    for token in set(query_tokens):
        df[token] = sum(1 for toks in doc_tokens.values() if token in toks)

    scored: list[tuple[float, str]] = []
    for doc in corpus:
        toks = doc_tokens[doc.id]
        score = 0.0
        for token in query_tokens:
            tf = toks.count(token)
            if tf:
                score += tf * math.log(1 + n_docs / df[token])
        if score > 0.0:
            scored.append((score, doc.id))
    if not scored:
        raise RetrievalError(f"no document shares a token with the query: {query!r}")
    scored.sort(key=lambda pair: (-pair[0], pair[1]))

    out: list[SourceDoc] = []
    for score, doc_id in scored[:k]:
        doc = corpus[doc_id]
        out.append(
            SourceDoc(
                id=doc.id,
                title=doc.title,
                original_text=doc.text,
                current_text=doc.text,
                score=score,
            )
        )
    return out


def edit_source(doc: SourceDoc, new_text: str) -> SourceDoc:
    """Replace the working text of one retrieved document."""
    doc.current_text = new_text
    return doc


def reset_source(doc: SourceDoc) -> SourceDoc:
    """Restore one retrieved document to its retrieved text."""
    doc.current_text = doc.original_text
    return doc


def load_corpus(path: str | Path, system_tag: str | None = None) -> Corpus:
    """Load a corpus from a JSON array of `{id, title, text}` documents."""
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):  # tolerate a wrapping object
        raw = raw.get("docs", raw.get("documents"))
    if not isinstance(raw, list):
        raise ConfigError(f"corpus file {path} must be a JSON array of documents")
    docs = []
    for i, entry in enumerate(raw):
        try:
            docs.append(
                CorpusDoc(id=entry["id"], title=entry["title"], text=entry["text"])
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"corpus doc #{i} in {path} is malformed: {exc}") from exc
    return Corpus(docs, system_tag=system_tag)
