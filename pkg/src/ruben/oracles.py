"""Model oracles: things that answer a question given a set of sources.

An oracle is any object with ``answer(question, sources, safety=None) -> str``.
The package ships deterministic mocks (truth tables, trigger rules) for
testing and red-team scenarios, plus an HTTP client for OpenAI-style chat
endpoints.  ``CachedOracle`` wraps any of them with an in-memory cache keyed
on the full prompt inputs, so repeated evaluations of the same subset cost
one upstream call.
"""
from __future__ import annotations

import json
import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import httpx

from .errors import ConfigError, OracleError
from .retrieval import SourceDoc


@dataclass(frozen=True, slots=True)
class OracleDescriptor:
    name: str
    deterministic: bool


@dataclass(frozen=True, slots=True)
class SafetyInstructions:
    """System-level instructions prepended to every prompt when enabled."""

    text: str


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    """Format strings controlling how a prompt is assembled."""

    safety_preamble: str = "{safety}"
    source_header_format: str = "[SOURCE {id}]"
    question_footer_format: str = "QUESTION: {question}"


DEFAULT_PROMPT_TEMPLATE = PromptTemplate()


def assemble_prompt(
    question: str,
    sources: Sequence[SourceDoc],
    safety: SafetyInstructions | None = None,
    template: PromptTemplate = DEFAULT_PROMPT_TEMPLATE,
) -> str:
    """Build the prompt text sent to a model for one subset evaluation.

    Layout: optional safety preamble on its own line, then one
    header+text block per included source (blank line between blocks),
    then the question footer.
    """
    parts: list[str] = []
    if safety is not None:
        parts.append(template.safety_preamble.format(safety=safety.text) + "\n")
    blocks = [
        template.source_header_format.format(id=doc.id) + "\n" + doc.current_text
        for doc in sources
    ]
    body = "\n\n".join(blocks)
    if blocks:
        body += "\n\n"
    body += template.question_footer_format.format(question=question)
    parts.append(body)
    return "".join(parts)


class ModelOracle(ABC):
    """Answers a question from a (possibly empty) set of sources."""

    descriptor: OracleDescriptor

    @abstractmethod
    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Truth-table oracle: exact control over every subset's output, for tests and
# for the equivalence harness.


@dataclass(slots=True)
class TruthTable:
    """Maps subset bitmasks (over a fixed universe) to output strings."""

    universe_size: int
    entries: dict[int, str]
    default_output: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.universe_size:
            raise ConfigError("universe_size must be non-negative")
        limit = 1 << self.universe_size
        for mask in self.entries:
            if not 0 <= mask < limit:
                raise ConfigError(
                    f"truth-table mask {mask} out of range for universe of "
                    f"{self.universe_size}"
                )

    def output_for(self, mask: int) -> str:
        return self.entries.get(mask, self.default_output)


def load_truth_table(path: str | Path) -> TruthTable:
    """Read a truth table from JSON: subsets are lists of source indices."""
    raw = json.loads(Path(path).read_text())
    try:
        n = raw["universe_size"]
        entries: dict[int, str] = {}
        for item in raw["entries"]:
            mask = 0
            for idx in item["subset"]:
                if not 0 <= idx < n:
                    raise ConfigError(
                        f"truth-table index {idx} out of range in {path}"
                    )
                mask |= 1 << idx
            entries[mask] = item["output"]
        return TruthTable(
            universe_size=n,
            entries=entries,
            default_output=raw.get("default_output", ""),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"truth-table file {path} is malformed: {exc}") from exc


def save_truth_table(table: TruthTable, path: str | Path) -> None:
    payload = {
        "universe_size": table.universe_size,
        "default_output": table.default_output,
        "entries": [
            {
                "subset": [i for i in range(table.universe_size) if mask >> i & 1],
                "output": output,
            }
            for mask, output in sorted(table.entries.items())
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


class TruthTableOracle(ModelOracle):
    """Deterministic oracle whose output is a pure function of the subset."""

    def __init__(self, table: TruthTable, universe_ids: Sequence[str]):
        if len(universe_ids) != table.universe_size:
            raise ConfigError(
                f"universe id count {len(universe_ids)} != table size "
                f"{table.universe_size}"
            )
        self.table = table
        self._index = {doc_id: i for i, doc_id in enumerate(universe_ids)}
        self.descriptor = OracleDescriptor(name="truth-table", deterministic=True)

    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        mask = 0
        for doc in sources:
            if doc.id not in self._index:
                raise OracleError(f"source {doc.id!r} not in truth-table universe")
            mask |= 1 << self._index[doc.id]
        return self.table.output_for(mask)


# ---------------------------------------------------------------------------
# Trigger oracles: scripted model behaviour for the bundled scenarios.  The
# trigger inspects the actual prompt inputs (source texts included), so edits
# to a source change behaviour the way they would for a real model.


class Trigger(ABC):
    @abstractmethod
    def fires(self, question: str, sources: Sequence[SourceDoc]) -> bool:
        raise NotImplementedError


class NeverTrigger(Trigger):
    def fires(self, question: str, sources: Sequence[SourceDoc]) -> bool:
        return False


class AllIdsPresentTrigger(Trigger):
    """Fires when every listed source id is included in the prompt."""

    def __init__(self, ids: Sequence[str]):
        if not ids:
            raise ConfigError("all_ids_present trigger needs at least one id")
        self.ids = frozenset(ids)

    def fires(self, question: str, sources: Sequence[SourceDoc]) -> bool:
        present = {doc.id for doc in sources}
        return self.ids <= present


class MarkedCountTrigger(Trigger):
    """Fires when at least `min_count` included sources contain `marker`."""

    def __init__(self, marker: str, min_count: int = 1):
        if not marker:
            raise ConfigError("marked_count trigger needs a non-empty marker")
        if min_count < 1:
            raise ConfigError("marked_count min_count must be >= 1")
        self.marker = marker
        self.min_count = min_count

    def fires(self, question: str, sources: Sequence[SourceDoc]) -> bool:
        hits = sum(1 for doc in sources if self.marker in doc.current_text)
        return hits >= self.min_count


class QuestionContainsAnyTrigger(Trigger):
    """Fires when the question contains any of the given substrings."""

    def __init__(self, values: Sequence[str]):
        if not values:
            raise ConfigError("question_contains_any trigger needs values")
        self.values = tuple(values)

    def fires(self, question: str, sources: Sequence[SourceDoc]) -> bool:
        return any(value in question for value in self.values)


def trigger_from_config(cfg: dict) -> Trigger:
    kind = cfg.get("kind")
    if kind == "never":
        return NeverTrigger()
    if kind == "all_ids_present":
        return AllIdsPresentTrigger(cfg["ids"])
    if kind == "marked_count":
        return MarkedCountTrigger(cfg["marker"], cfg.get("min_count", 1))
    if kind == "question_contains_any":
        return QuestionContainsAnyTrigger(cfg["values"])
    raise ConfigError(f"unknown trigger kind: {kind!r}")


class TriggeredOracle(ModelOracle):
    """Returns one of two fixed outputs depending on a trigger condition."""

    def __init__(
        self,
        name: str,
        trigger: Trigger,
        triggered_output: str,
        default_output: str,
    ):
        self.trigger = trigger
        self.triggered_output = triggered_output
        self.default_output = default_output
        self.descriptor = OracleDescriptor(name=name, deterministic=True)

    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        if self.trigger.fires(question, sources):
            return self.triggered_output
        return self.default_output


# ---------------------------------------------------------------------------
# Wrappers.


class CountingOracle(ModelOracle):
    """Delegates to another oracle while recording every call it sees."""

    def __init__(self, inner: ModelOracle):
        self.inner = inner
        self.descriptor = inner.descriptor
        self.calls: list[tuple[str, tuple[str, ...], bool]] = []

    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        self.calls.append(
            (question, tuple(doc.id for doc in sources), safety is not None)
        )
        return self.inner.answer(question, sources, safety)


class CachedOracle(ModelOracle):
    """Memoizes answers so each distinct prompt hits the model at most once.

    The key covers the question, the included sources' ids *and current
    texts*, and the safety text, so editing a source or toggling safety
    never serves a stale answer.  Concurrent callers asking for the same
    key block on a per-key lock while the first call is in flight; failed
    calls are not cached.
    """

    def __init__(self, inner: ModelOracle):
        self.inner = inner
        self.descriptor = inner.descriptor
        self.hits = 0
        self.misses = 0
        self._cache: dict[tuple, str] = {}
        self._key_locks: dict[tuple, threading.Lock] = {}
        self._guard = threading.Lock()

    @staticmethod
    def _key(
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None,
    ) -> tuple:
        return (
            question,
            tuple((doc.id, doc.current_text) for doc in sources),
            safety.text if safety is not None else None,
        )

    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        key = self._key(question, sources, safety)
        with self._guard:
            if key in self._cache:
                self.hits += 1
                return self._cache[key]
            lock = self._key_locks.setdefault(key, threading.Lock())
        with lock:
            with self._guard:
                if key in self._cache:
                    self.hits += 1
                    return self._cache[key]
            result = self.inner.answer(question, sources, safety)
            with self._guard:
                self._cache[key] = result
                self.misses += 1
            return result


def cached(oracle: ModelOracle) -> CachedOracle:
    """Wrap `oracle` in a cache unless it already is one."""
    if isinstance(oracle, CachedOracle):
        return oracle
    return CachedOracle(oracle)


# ---------------------------------------------------------------------------
# HTTP oracle for OpenAI-style chat-completion endpoints.


@dataclass(frozen=True, slots=True)
class HttpOracleConfig:
    base_url: str
    model: str
    api_key_env: str = "RUBEN_API_KEY"
    temperature: float = 0.0
    timeout_s: float = 30.0


class HttpChatOracle(ModelOracle):
    """Calls a chat-completions endpoint; safety text rides as the system message."""

    def __init__(
        self,
        config: HttpOracleConfig,
        transport: httpx.BaseTransport | None = None,
        template: PromptTemplate = DEFAULT_PROMPT_TEMPLATE,
    ):
        self.config = config
        self.template = template
        self._client = httpx.Client(
            base_url=config.base_url,
            timeout=config.timeout_s,
            transport=transport,
        )
        self.descriptor = OracleDescriptor(name=config.model, deterministic=False)

    def answer(
        self,
        question: str,
        sources: Sequence[SourceDoc],
        safety: SafetyInstructions | None = None,
    ) -> str:
        messages = []
        if safety is not None:
            messages.append({"role": "system", "content": safety.text})
        messages.append(
            {
                "role": "user",
                "content": assemble_prompt(
                    question, sources, safety=None, template=self.template
                ),
            }
        )
        headers = {}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = self._client.post(
                "/chat/completions",
                json={
                    "model": self.config.model,
                    "messages": messages,
                    "temperature": self.config.temperature,
                },
                headers=headers,
            )
        except httpx.HTTPError as exc:
            raise OracleError(f"chat endpoint request failed: {exc}") from exc
        if response.status_code != 200:
            raise OracleError(
                f"chat endpoint returned {response.status_code}: "
                f"{response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise OracleError(f"chat endpoint response malformed: {exc}") from exc

    def close(self) -> None:
        self._client.close()
