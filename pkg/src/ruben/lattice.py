"""Rule mining over the power-set lattice of retrieved sources.

A *rule* is a subset S of the retrieved sources such that prompting the model
with S — and with every superset of S — makes the output predicate hold.  A
rule is *minimal* when no proper subset of it is also a rule.  Minimal rules
are the tightest "if these sources are present, then the behaviour occurs"
explanations the source set supports.

Validity is upward-closed: if S is a rule, every superset of S is too.  The
contrapositive drives the miner — once any immediate superset of a subset is
known invalid, that subset is invalid and is pruned without a model call.
The miner walks the lattice top-down by cardinality (full set first, empty
set last), so every subset's immediate supersets are settled one level before
the subset itself is visited.  Upward closure also means a valid subset is
minimal exactly when none of its immediate subsets is valid, so minimality
for level k+1 is decided the moment level k finishes.

``brute_force_mine`` ignores all of that and evaluates every one of the 2^n
subsets, quantifying validity and minimality directly.  It exists to check
the pruning miner against, not to be fast.
"""
from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Sequence

from .errors import ConfigError, OracleError, PredicateError, RunFailedError
from .oracles import (
    DEFAULT_PROMPT_TEMPLATE,
    ModelOracle,
    PromptTemplate,
    SafetyInstructions,
    assemble_prompt,
)
from .predicates import OutputPredicate
from .retrieval import SourceDoc

BRUTE_FORCE_MAX_SOURCES = 12


class PredicateHeld(str, Enum):
    HELD = "held"
    FAILED = "failed"
    NOT_EVALUATED = "not_evaluated"


class EventKind(str, Enum):
    LEVEL_STARTED = "level_started"
    SUBSET_EVALUATED = "subset_evaluated"
    SUBSET_PRUNED = "subset_pruned"
    RULE_VALID = "rule_valid"
    RULE_MINIMAL = "rule_minimal"
    MINING_COMPLETE = "mining_complete"


@dataclass(frozen=True, slots=True)
class SourceSubset:
    """A subset of a fixed source universe, stored as a bitmask.

    Bit i set means the source at position i of the universe is included.
    `width` is the universe size; two subsets compare equal only if both
    bits and width match.
    """

    bits: int
    width: int

    def __post_init__(self) -> None:
        if self.width < 0:
            raise ConfigError(f"subset width must be >= 0, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ConfigError(
                f"subset bits {self.bits} out of range for width {self.width}"
            )

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.width) if self.bits >> i & 1)

    def contains(self, other: SourceSubset) -> bool:
        """True when self is a superset of `other` (not necessarily proper)."""
        return other.bits & ~self.bits == 0

    def is_subset_of(self, other: SourceSubset) -> bool:
        return other.contains(self)

    @classmethod
    def empty(cls, width: int) -> SourceSubset:
        return cls(bits=0, width=width)

    @classmethod
    def full(cls, width: int) -> SourceSubset:
        return cls(bits=(1 << width) - 1, width=width)

    @classmethod
    def from_positions(cls, positions: Sequence[int], width: int) -> SourceSubset:
        bits = 0
        for pos in positions:
            if not 0 <= pos < width:
                raise ConfigError(f"position {pos} out of range for width {width}")
            bits |= 1 << pos
        return cls(bits=bits, width=width)

    @classmethod
    def from_ids(
        cls, ids: Sequence[str], universe_ids: Sequence[str]
    ) -> SourceSubset:
        index = {doc_id: i for i, doc_id in enumerate(universe_ids)}
        try:
            positions = [index[doc_id] for doc_id in ids]
        except KeyError as exc:
            raise ConfigError(f"unknown source id {exc.args[0]!r}") from exc
        return cls.from_positions(positions, len(universe_ids))


@dataclass(frozen=True)
class SourceSet:
    """The fixed universe one mining run operates over."""

    question: str
    sources: tuple[SourceDoc, ...]
    safety_enabled: bool = True
    max_sources: int = 20

    def __post_init__(self) -> None:
        if not self.question:
            raise ConfigError("source set needs a non-empty question")
        if len(self.sources) > self.max_sources:
            raise ConfigError(
                f"{len(self.sources)} sources exceeds the cap of "
                f"{self.max_sources}; the lattice has 2^n nodes"
            )
        ids = [doc.id for doc in self.sources]
        if len(set(ids)) != len(ids):
            raise ConfigError("source ids must be unique within a source set")

    @property
    def size(self) -> int:
        return len(self.sources)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(doc.id for doc in self.sources)

    def docs_for(self, subset: SourceSubset) -> list[SourceDoc]:
        return [self.sources[i] for i in subset.positions]

    def ids_for(self, subset: SourceSubset) -> list[str]:
        return [self.sources[i].id for i in subset.positions]


@dataclass(frozen=True, slots=True)
class EvaluationRecord:
    """One oracle call and the predicate's verdict on its output."""

    subset: SourceSubset
    prompt_text: str
    model_output: str
    predicate_result: bool
    model_call_index: int


@dataclass(frozen=True, slots=True)
class RuleRecord:
    """Everything the miner concluded about one subset."""

    subset: SourceSubset
    predicate_held: PredicateHeld
    valid: bool
    minimal: bool
    pruned: bool
    evaluation: EvaluationRecord | None

    def __post_init__(self) -> None:
        if self.minimal and not self.valid:
            raise ConfigError("a minimal rule must be valid")
        if self.valid and self.predicate_held is not PredicateHeld.HELD:
            raise ConfigError("a valid rule must have a held predicate")
        if self.pruned:
            if self.valid or self.evaluation is not None:
                raise ConfigError("a pruned subset is unevaluated and invalid")
            if self.predicate_held is not PredicateHeld.NOT_EVALUATED:
                raise ConfigError("a pruned subset's predicate is not evaluated")
        else:
            if self.evaluation is None:
                raise ConfigError("an unpruned subset must carry an evaluation")
            held = self.predicate_held is PredicateHeld.HELD
            if held != self.evaluation.predicate_result:
                raise ConfigError("predicate_held disagrees with the evaluation")


@dataclass(frozen=True, slots=True)
class RuleEvent:
    """One entry in a run's streamed event log.

    `sequence` is gapless from 0.  `level` is the cardinality level being
    mined when the event fired (None for mining_complete).  Subset events
    carry the subset and its record; mining_complete carries the summary.
    """

    sequence: int
    kind: EventKind
    level: int | None = None
    subset: SourceSubset | None = None
    record: RuleRecord | None = None
    summary: dict | None = None


@dataclass
class MiningRun:
    """The complete result of mining one source set."""

    source_set: SourceSet
    records: dict[SourceSubset, RuleRecord]
    model_call_count: int
    minimal_rules: tuple[SourceSubset, ...]
    event_log: tuple[RuleEvent, ...]
    elapsed_ms: float
    completed: bool = True

    @property
    def evaluated_count(self) -> int:
        return sum(1 for r in self.records.values() if not r.pruned)

    @property
    def pruned_count(self) -> int:
        return sum(1 for r in self.records.values() if r.pruned)


def immediate_supersets(subset: SourceSubset) -> list[SourceSubset]:
    """All subsets one element larger, ordered by the added position."""
    out = []
    for i in range(subset.width):
        if not subset.bits >> i & 1:
            out.append(SourceSubset(bits=subset.bits | 1 << i, width=subset.width))
    return out


def immediate_subsets(subset: SourceSubset) -> list[SourceSubset]:
    """All subsets one element smaller, ordered by the removed position."""
    out = []
    for i in range(subset.width):
        if subset.bits >> i & 1:
            out.append(SourceSubset(bits=subset.bits & ~(1 << i), width=subset.width))
    return out


def level_masks(n: int, k: int) -> Iterator[int]:
    """Yield all n-bit masks with exactly k bits set, in ascending order.

    Gosper's hack: from one k-bit mask, isolate the lowest set bit, ripple
    the carry through the lowest run of ones, and redistribute the displaced
    ones at the bottom.  (combinations() order does not ascend as masks.)
    """
    if k == 0:
        yield 0
        return
    limit = 1 << n
    mask = (1 << k) - 1
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = ((ripple ^ mask) >> 2) // low | ripple


def _sort_key(subset: SourceSubset) -> tuple[int, int]:
    return (subset.cardinality, subset.bits)


def minimal_rules_of(run: MiningRun) -> list[SourceSubset]:
    """The run's minimal rules, smallest cardinality first, then mask order."""
    return sorted(
        (r.subset for r in run.records.values() if r.minimal), key=_sort_key
    )


class _EventLog:
    """Appends events, numbers them, and forwards each to an optional sink."""

    def __init__(self, sink: Callable[[RuleEvent], None] | None):
        self.events: list[RuleEvent] = []
        self._sink = sink

    def emit(self, kind: EventKind, **payload) -> RuleEvent:
        event = RuleEvent(sequence=len(self.events), kind=kind, **payload)
        self.events.append(event)
        if self._sink is not None:
            self._sink(event)
        return event


def _evaluate_subset(
    source_set: SourceSet,
    subset: SourceSubset,
    oracle: ModelOracle,
    predicate: OutputPredicate,
    safety: SafetyInstructions | None,
    template: PromptTemplate,
    call_index: int,
) -> EvaluationRecord:
    docs = source_set.docs_for(subset)
    prompt = assemble_prompt(source_set.question, docs, safety, template)
    output = oracle.answer(source_set.question, docs, safety)
    held = predicate.evaluate(output)
    return EvaluationRecord(
        subset=subset,
        prompt_text=prompt,
        model_output=output,
        predicate_result=held,
        model_call_index=call_index,
    )


def mine_rules(
    source_set: SourceSet,
    oracle: ModelOracle,
    predicate: OutputPredicate,
    sink: Callable[[RuleEvent], None] | None = None,
    *,
    safety: SafetyInstructions | None = None,
    template: PromptTemplate = DEFAULT_PROMPT_TEMPLATE,
    max_sources: int | None = None,
    workers: int = 1,
) -> MiningRun:
    """Mine all rules and minimal rules for one source set.

    Walks cardinality levels from n down to 0.  A subset is evaluated only
    when every immediate superset is a known rule; otherwise it is pruned.
    Once a whole level yields no rule, every remaining subset below is pruned
    without further model calls.  Events stream to `sink` as they happen and
    are identical for any `workers` setting; with workers > 1 the oracle
    calls within a level run concurrently.

    Raises RunFailedError (carrying the partial run) if the oracle or
    predicate fails mid-run.
    """
    n = source_set.size
    if max_sources is not None and n > max_sources:
        raise ConfigError(f"{n} sources exceeds the requested cap of {max_sources}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    effective_safety = safety if source_set.safety_enabled else None

    started = time.perf_counter()
    log = _EventLog(sink)
    records: dict[SourceSubset, RuleRecord] = {}
    minimal: list[SourceSubset] = []
    call_count = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def partial_run() -> MiningRun:
        return MiningRun(
            source_set=source_set,
            records=dict(records),
            model_call_count=call_count,
            minimal_rules=tuple(sorted(minimal, key=_sort_key)),
            event_log=tuple(log.events),
            elapsed_ms=(time.perf_counter() - started) * 1000.0,
            completed=False,
        )

    def promote_minimal(subset: SourceSubset, level: int) -> None:
        record = dataclasses.replace(records[subset], minimal=True)
        records[subset] = record
        minimal.append(subset)
        log.emit(EventKind.RULE_MINIMAL, level=level, subset=subset, record=record)

    try:
        prev_valid: set[int] | None = None  # None: level n has no parents
        for level in range(n, -1, -1):
            log.emit(EventKind.LEVEL_STARTED, level=level)
            valid_here: set[int] = set()

            if prev_valid is not None and not prev_valid:
                # No rules one level up, so nothing below can be one either.
                for mask in level_masks(n, level):
                    subset = SourceSubset(bits=mask, width=n)
                    record = RuleRecord(
                        subset=subset,
                        predicate_held=PredicateHeld.NOT_EVALUATED,
                        valid=False,
                        minimal=False,
                        pruned=True,
                        evaluation=None,
                    )
                    records[subset] = record
                    log.emit(
                        EventKind.SUBSET_PRUNED,
                        level=level,
                        subset=subset,
                        record=record,
                    )
                prev_valid = valid_here
                continue

            # Decide each subset's fate before touching the oracle so call
            # indices and event order stay deterministic under concurrency.
            to_prune: list[SourceSubset] = []
            to_evaluate: list[tuple[SourceSubset, int]] = []
            order: list[SourceSubset] = []
            for mask in level_masks(n, level):
                subset = SourceSubset(bits=mask, width=n)
                order.append(subset)
                parents_ok = prev_valid is None or all(
                    parent.bits in prev_valid
                    for parent in immediate_supersets(subset)
                )
                if parents_ok:
                    call_count += 1  # call indices are 1-based ordinals
                    to_evaluate.append((subset, call_count))
                else:
                    to_prune.append(subset)

            evaluations: dict[SourceSubset, EvaluationRecord | Exception] = {}
            if pool is not None and len(to_evaluate) > 1:
                futures = {
                    subset: pool.submit(
                        _evaluate_subset,
                        source_set,
                        subset,
                        oracle,
                        predicate,
                        effective_safety,
                        template,
                        index,
                    )
                    for subset, index in to_evaluate
                }
                for subset, future in futures.items():
                    exc = future.exception()
                    evaluations[subset] = (
                        exc if exc is not None else future.result()
                    )
            else:
                for subset, index in to_evaluate:
                    try:
                        evaluations[subset] = _evaluate_subset(
                            source_set,
                            subset,
                            oracle,
                            predicate,
                            effective_safety,
                            template,
                            index,
                        )
                    except (OracleError, PredicateError) as exc:
                        evaluations[subset] = exc
                        break  # later subsets this level were never attempted

            pruned_set = set(to_prune)
            for subset in order:
                if subset in pruned_set:
                    record = RuleRecord(
                        subset=subset,
                        predicate_held=PredicateHeld.NOT_EVALUATED,
                        valid=False,
                        minimal=False,
                        pruned=True,
                        evaluation=None,
                    )
                    records[subset] = record
                    log.emit(
                        EventKind.SUBSET_PRUNED,
                        level=level,
                        subset=subset,
                        record=record,
                    )
                    continue
                outcome = evaluations.get(subset)
                if outcome is None or isinstance(outcome, Exception):
                    call_count = sum(
                        1 for r in records.values() if not r.pruned
                    )
                    reason = outcome if outcome is not None else "not attempted"
                    raise RunFailedError(
                        f"evaluation of {source_set.ids_for(subset)} failed: "
                        f"{reason}",
                        partial_run(),
                    )
                held = outcome.predicate_result
                record = RuleRecord(
                    subset=subset,
                    predicate_held=(
                        PredicateHeld.HELD if held else PredicateHeld.FAILED
                    ),
                    valid=held,
                    minimal=False,
                    pruned=False,
                    evaluation=outcome,
                )
                records[subset] = record
                log.emit(
                    EventKind.SUBSET_EVALUATED,
                    level=level,
                    subset=subset,
                    record=record,
                )
                if held:
                    valid_here.add(subset.bits)
                    log.emit(
                        EventKind.RULE_VALID,
                        level=level,
                        subset=subset,
                        record=record,
                    )

            # Level `level` is settled, so rules one level up whose every
            # immediate subset just failed to be a rule are minimal.
            if prev_valid is not None:
                for bits in sorted(prev_valid):
                    parent = SourceSubset(bits=bits, width=n)
                    if not any(
                        child.bits in valid_here
                        for child in immediate_subsets(parent)
                    ):
                        promote_minimal(parent, level)
            prev_valid = valid_here

        # The empty set has no subsets at all: a rule there is minimal.
        empty = SourceSubset.empty(n)
        if prev_valid and empty.bits in prev_valid:
            promote_minimal(empty, 0)
    except (OracleError, PredicateError) as exc:
        # Only reachable from a sink callback re-raising; evaluation errors
        # are converted to RunFailedError above.
        raise RunFailedError(str(exc), partial_run()) from exc
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)

    minimal_sorted = tuple(sorted(minimal, key=_sort_key))
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    run = MiningRun(
        source_set=source_set,
        records=records,
        model_call_count=call_count,
        minimal_rules=minimal_sorted,
        event_log=(),
        elapsed_ms=elapsed_ms,
        completed=True,
    )
    log.emit(EventKind.MINING_COMPLETE, summary=summary_to_dict(run))
    run.event_log = tuple(log.events)
    return run


def brute_force_mine(
    source_set: SourceSet,
    oracle: ModelOracle,
    predicate: OutputPredicate,
    *,
    safety: SafetyInstructions | None = None,
    template: PromptTemplate = DEFAULT_PROMPT_TEMPLATE,
) -> MiningRun:
    """Evaluate every subset and quantify validity/minimality directly.

    Exactly 2^n model calls, no pruning, no event stream.  Capped at
    12 sources; this is the reference the lattice miner is checked against.
    """
    n = source_set.size
    if n > BRUTE_FORCE_MAX_SOURCES:
        raise ConfigError(
            f"brute force over {n} sources needs 2^{n} model calls; "
            f"the cap is {BRUTE_FORCE_MAX_SOURCES}"
        )
    effective_safety = safety if source_set.safety_enabled else None
    started = time.perf_counter()
    full = 1 << n

    held: dict[int, bool] = {}
    evaluations: dict[int, EvaluationRecord] = {}
    call_count = 0
    try:
        for level in range(n, -1, -1):
            for mask in level_masks(n, level):
                subset = SourceSubset(bits=mask, width=n)
                call_count += 1
                evaluation = _evaluate_subset(
                    source_set,
                    subset,
                    oracle,
                    predicate,
                    effective_safety,
                    template,
                    call_count,
                )
                held[mask] = evaluation.predicate_result
                evaluations[mask] = evaluation
    except (OracleError, PredicateError) as exc:
        raise RunFailedError(
            f"brute-force evaluation failed on call {call_count}: {exc}",
            MiningRun(
                source_set=source_set,
                records={},
                model_call_count=call_count - 1,
                minimal_rules=(),
                event_log=(),
                elapsed_ms=(time.perf_counter() - started) * 1000.0,
                completed=False,
            ),
        ) from exc

    def is_valid(mask: int) -> bool:
        # Walk every superset of mask: OR it with each submask of the
        # complement, counting down so the loop visits each exactly once.
        comp = (full - 1) & ~mask
        sub = comp
        while True:
            if not held[mask | sub]:
                return False
            if sub == 0:
                return True
            sub = (sub - 1) & comp

    valid: dict[int, bool] = {mask: is_valid(mask) for mask in range(full)}

    def is_minimal(mask: int) -> bool:
        if not valid[mask]:
            return False
        if mask == 0:
            return True  # the empty set has no proper subsets
        sub = (mask - 1) & mask
        while True:
            if valid[sub]:
                return False
            if sub == 0:
                return True
            sub = (sub - 1) & mask

    records: dict[SourceSubset, RuleRecord] = {}
    minimal: list[SourceSubset] = []
    for mask in range(full):
        subset = SourceSubset(bits=mask, width=n)
        mask_minimal = is_minimal(mask)
        records[subset] = RuleRecord(
            subset=subset,
            predicate_held=(
                PredicateHeld.HELD if held[mask] else PredicateHeld.FAILED
            ),
            valid=valid[mask],
            minimal=mask_minimal,
            pruned=False,
            evaluation=evaluations[mask],
        )
        if mask_minimal:
            minimal.append(subset)

    return MiningRun(
        source_set=source_set,
        records=records,
        model_call_count=call_count,
        minimal_rules=tuple(sorted(minimal, key=_sort_key)),
        event_log=(),
        elapsed_ms=(time.perf_counter() - started) * 1000.0,
        completed=True,
    )


# ---------------------------------------------------------------------------
# Serialization to plain dicts (JSON files, HTTP responses, SSE payloads).


def record_to_dict(record: RuleRecord, source_set: SourceSet) -> dict:
    out: dict = {
        "subset": source_set.ids_for(record.subset),
        "cardinality": record.subset.cardinality,
        "valid": record.valid,
        "minimal": record.minimal,
        "pruned": record.pruned,
        "predicate_held": record.predicate_held.value,
    }
    if record.evaluation is not None:
        out["model_call_index"] = record.evaluation.model_call_index
        out["model_output"] = record.evaluation.model_output
    return out


_MEASURED = object()


def summary_to_dict(run: MiningRun, elapsed_ms: object = _MEASURED) -> dict:
    """Run summary as a plain dict.

    Pass elapsed_ms explicitly to override the measured value (a report can
    set it to None to stay byte-stable across runs).
    """
    return {
        "question": run.source_set.question,
        "source_ids": list(run.source_set.ids),
        "model_call_count": run.model_call_count,
        "minimal_rules": [
            run.source_set.ids_for(subset) for subset in run.minimal_rules
        ],
        "elapsed_ms": run.elapsed_ms if elapsed_ms is _MEASURED else elapsed_ms,
    }


def event_to_dict(event: RuleEvent, source_set: SourceSet) -> dict:
    out: dict = {
        "sequence": event.sequence,
        "kind": event.kind.value,
        "level": event.level,
    }
    if event.subset is not None:
        out["subset"] = source_set.ids_for(event.subset)
    if event.record is not None:
        out["record"] = record_to_dict(event.record, source_set)
    if event.summary is not None:
        out["summary"] = event.summary
    return out
