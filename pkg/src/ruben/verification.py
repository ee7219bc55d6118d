"""Equivalence harness: the pruning miner versus the brute-force reference.

Every trial builds a randomized truth table, mines it both ways, and demands
identical conclusions — same minimal rules, same validity verdict for every
evaluated subset, and brute-force-invalid for every subset the pruning miner
skipped.  The event stream is audited against its structural invariants at
the same time.  A report like "1000/1000 MATCH" is the whole point.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .lattice import (
    EventKind,
    MiningRun,
    RuleEvent,
    SourceSet,
    SourceSubset,
    brute_force_mine,
    immediate_supersets,
    mine_rules,
    minimal_rules_of,
    summary_to_dict,
)
from .oracles import CountingOracle, TruthTable, TruthTableOracle
from .predicates import ContainsPredicate
from .retrieval import SourceDoc

_HELD_OUTPUT = "EXPLOIT confirmed for subset {mask}"
_BENIGN_OUTPUT = "nothing of interest for subset {mask}"


def make_sources(n: int) -> tuple[SourceDoc, ...]:
    """A synthetic universe of n sources with ids s0..s{n-1}."""
    return tuple(
        SourceDoc(
            id=f"s{i}",
            title=f"Synthetic source {i}",
            original_text=f"synthetic body {i}",
            current_text=f"synthetic body {i}",
        )
        for i in range(n)
    )


def uniform_truth_table(n: int, rng: random.Random) -> TruthTable:
    """Each subset independently holds the predicate with probability 1/2."""
    entries = {
        mask: (
            _HELD_OUTPUT.format(mask=mask)
            if rng.random() < 0.5
            else _BENIGN_OUTPUT.format(mask=mask)
        )
        for mask in range(1 << n)
    }
    return TruthTable(universe_size=n, entries=entries, default_output="")


def planted_monotone_table(
    n: int, rng: random.Random
) -> tuple[TruthTable, list[int]]:
    """A table whose held-set is the up-closure of a random antichain.

    Returns the table and the antichain masks — by construction exactly the
    minimal rules a correct miner must find.
    """
    count = rng.randint(1, max(1, n // 2))
    drawn = {rng.randrange(1 << n) for _ in range(count)}
    antichain = [
        m for m in drawn if not any(o != m and m & o == o for o in drawn)
    ]
    entries = {}
    for mask in range(1 << n):
        held = any(mask & a == a for a in antichain)
        entries[mask] = (
            _HELD_OUTPUT.format(mask=mask)
            if held
            else _BENIGN_OUTPUT.format(mask=mask)
        )
    return (
        TruthTable(universe_size=n, entries=entries, default_output=""),
        sorted(antichain, key=lambda m: (bin(m).count("1"), m)),
    )


def full_set_only_table(n: int) -> TruthTable:
    """Only the full subset holds: forces maximal pruning (1 + n calls)."""
    return TruthTable(
        universe_size=n,
        entries={(1 << n) - 1: _HELD_OUTPUT.format(mask=(1 << n) - 1)},
        default_output=_BENIGN_OUTPUT.format(mask=0),
    )


def exploit_predicate() -> ContainsPredicate:
    return ContainsPredicate("exploit-marker", "EXPLOIT")


def check_event_stream(events: list[RuleEvent], run: MiningRun) -> list[str]:
    """Audit a completed run's event stream; returns violation descriptions."""
    bad: list[str] = []
    n = run.source_set.size

    for i, event in enumerate(events):
        if event.sequence != i:
            bad.append(f"event {i} has sequence {event.sequence}")

    if not events or events[-1].kind is not EventKind.MINING_COMPLETE:
        bad.append("stream does not end with mining_complete")
    completes = [e for e in events if e.kind is EventKind.MINING_COMPLETE]
    if len(completes) != 1:
        bad.append(f"{len(completes)} mining_complete events")
    elif completes[0].summary != summary_to_dict(run):
        bad.append("mining_complete summary disagrees with the run")

    level_starts = [e.level for e in events if e.kind is EventKind.LEVEL_STARTED]
    if level_starts != list(range(n, -1, -1)):
        bad.append(f"level_started sequence {level_starts} != {list(range(n, -1, -1))}")

    # Per-subset bookkeeping across the whole stream.
    seen_subset_events: dict[int, EventKind] = {}
    valid_bits: set[int] = set()
    minimal_bits: set[int] = set()
    current_level: int | None = None
    minimal_seen_this_level = False
    last_mask_this_level = -1

    for event in events:
        if event.kind is EventKind.LEVEL_STARTED:
            current_level = event.level
            minimal_seen_this_level = False
            last_mask_this_level = -1
            continue
        if event.kind is EventKind.MINING_COMPLETE:
            continue
        subset = event.subset
        if subset is None or event.record is None:
            bad.append(f"{event.kind.value} event without subset/record")
            continue
        if event.kind in (EventKind.SUBSET_EVALUATED, EventKind.SUBSET_PRUNED):
            if subset.cardinality != current_level:
                bad.append(
                    f"subset event for |S|={subset.cardinality} during level "
                    f"{current_level}"
                )
            if minimal_seen_this_level:
                bad.append(
                    f"subset event after rule_minimal within level {current_level}"
                )
            if subset.bits <= last_mask_this_level:
                bad.append(
                    f"subset masks not ascending at level {current_level}: "
                    f"{subset.bits} after {last_mask_this_level}"
                )
            last_mask_this_level = subset.bits
            if subset.bits in seen_subset_events:
                bad.append(f"subset {subset.bits} has two subset events")
            seen_subset_events[subset.bits] = event.kind
            pruned = event.kind is EventKind.SUBSET_PRUNED
            if event.record.pruned != pruned:
                bad.append(f"subset {subset.bits} record/pruned-kind mismatch")
        elif event.kind is EventKind.RULE_VALID:
            if not event.record.valid:
                bad.append(f"rule_valid for invalid subset {subset.bits}")
            if seen_subset_events.get(subset.bits) is not EventKind.SUBSET_EVALUATED:
                bad.append(f"rule_valid before evaluation of {subset.bits}")
            valid_bits.add(subset.bits)
        elif event.kind is EventKind.RULE_MINIMAL:
            minimal_seen_this_level = True
            if not event.record.minimal:
                bad.append(f"rule_minimal with unmarked record {subset.bits}")
            if subset.bits in minimal_bits:
                bad.append(f"duplicate rule_minimal for {subset.bits}")
            minimal_bits.add(subset.bits)
            expected_card = (
                (0, 1) if current_level == 0 else (current_level + 1,)
                if current_level is not None
                else ()
            )
            if subset.cardinality not in expected_card:
                bad.append(
                    f"rule_minimal for |S|={subset.cardinality} during level "
                    f"{current_level}"
                )

    if len(seen_subset_events) != (1 << n):
        bad.append(
            f"{len(seen_subset_events)} subset events for a lattice of {1 << n}"
        )

    # Event-derived conclusions must match the run's final records.
    record_valid = {r.subset.bits for r in run.records.values() if r.valid}
    record_minimal = {s.bits for s in minimal_rules_of(run)}
    if valid_bits != record_valid:
        bad.append("rule_valid events disagree with record validity")
    if minimal_bits != record_minimal:
        bad.append("rule_minimal events disagree with record minimality")
    if minimal_bits != {s.bits for s in run.minimal_rules}:
        bad.append("rule_minimal events disagree with run.minimal_rules")

    evaluated = [
        e for e in events if e.kind is EventKind.SUBSET_EVALUATED
    ]
    call_indices = [
        e.record.evaluation.model_call_index
        for e in evaluated
        if e.record is not None and e.record.evaluation is not None
    ]
    if call_indices != list(range(1, len(call_indices) + 1)):
        bad.append(f"model call indices not 1..N gapless: {call_indices[:8]}")
    if len(call_indices) != run.model_call_count:
        bad.append(
            f"{len(call_indices)} evaluations but model_call_count="
            f"{run.model_call_count}"
        )
    return bad


@dataclass
class VerificationReport:
    n: int
    trials: int
    seed: int
    matches: int = 0
    failures: list[str] = field(default_factory=list)
    lattice_calls: int = 0
    brute_calls: int = 0

    @property
    def passed(self) -> bool:
        return self.matches == self.trials and not self.failures

    def summary_line(self) -> str:
        if self.passed:
            return f"{self.matches}/{self.trials} MATCH"
        return f"{self.matches}/{self.trials} MATCH ({len(self.failures)} FAILED)"


def _check_call_soundness(
    calls: list[tuple[str, tuple[str, ...], bool]],
    lattice: MiningRun,
    brute: MiningRun,
) -> list[str]:
    """Audit the actual oracle calls the pruning miner made.

    A call is only justified when every immediate superset of its subset is
    valid (per the brute-force ground truth); and the total can never exceed
    the lattice size.
    """
    bad: list[str] = []
    n = brute.source_set.size
    positions = {doc.id: i for i, doc in enumerate(brute.source_set.sources)}
    if len(calls) != lattice.model_call_count:
        bad.append(
            f"{len(calls)} oracle calls but model_call_count="
            f"{lattice.model_call_count}"
        )
    if len(calls) > 1 << n:
        bad.append(f"{len(calls)} oracle calls exceed the 2^{n} lattice")
    for _question, ids, _safety in calls:
        subset = SourceSubset.from_positions([positions[i] for i in ids], n)
        for superset in immediate_supersets(subset):
            if not brute.records[superset].valid:
                bad.append(
                    f"called subset {subset.bits} though its superset "
                    f"{superset.bits} is invalid"
                )
    return bad


def _compare_runs(lattice: MiningRun, brute: MiningRun) -> list[str]:
    bad: list[str] = []
    if list(lattice.minimal_rules) != list(brute.minimal_rules):
        bad.append(
            f"minimal rules differ: {[s.bits for s in lattice.minimal_rules]} "
            f"vs {[s.bits for s in brute.minimal_rules]}"
        )
    for subset, record in lattice.records.items():
        reference = brute.records[subset]
        if record.pruned:
            if reference.valid:
                bad.append(f"pruned subset {subset.bits} is brute-force valid")
            continue
        if record.valid != reference.valid:
            bad.append(
                f"validity of {subset.bits}: lattice {record.valid}, "
                f"brute {reference.valid}"
            )
        if record.predicate_held != reference.predicate_held:
            bad.append(f"predicate verdict differs on {subset.bits}")
        if record.minimal != reference.minimal:
            bad.append(
                f"minimality of {subset.bits}: lattice {record.minimal}, "
                f"brute {reference.minimal}"
            )
    if len(lattice.records) != len(brute.records):
        bad.append("lattice did not account for every subset")
    if lattice.model_call_count > brute.model_call_count:
        bad.append(
            f"lattice used {lattice.model_call_count} calls, more than "
            f"brute force's {brute.model_call_count}"
        )
    return bad


def run_verification(n: int, trials: int, seed: int) -> VerificationReport:
    """Mine `trials` randomized truth tables both ways and compare.

    Even trials draw uniformly random tables (arbitrary, mostly
    non-monotone behaviour); odd trials plant a monotone up-set with known
    minimal rules, which additionally get checked against the plant.  Each
    trial audits three categories, prefixed in the failure strings:
    "compare:" (conclusions differ from brute force), "stream:" (event-log
    invariant broken), "calls:" (an unjustified or excess oracle call).
    """
    report = VerificationReport(n=n, trials=trials, seed=seed)
    rng = random.Random(seed)
    sources = make_sources(n)
    ids = [doc.id for doc in sources]
    predicate = exploit_predicate()

    for trial in range(trials):
        planted: list[int] | None = None
        if trial % 2 == 0:
            table = uniform_truth_table(n, rng)
        else:
            table, planted = planted_monotone_table(n, rng)
        source_set = SourceSet(
            question=f"verification trial {trial}",
            sources=sources,
            safety_enabled=False,
        )
        oracle = TruthTableOracle(table, ids)
        counting = CountingOracle(oracle)
        events: list[RuleEvent] = []
        lattice_run = mine_rules(
            source_set, counting, predicate, sink=events.append
        )
        brute_run = brute_force_mine(source_set, oracle, predicate)

        problems = [f"compare: {p}" for p in _compare_runs(lattice_run, brute_run)]
        problems += [f"stream: {p}" for p in check_event_stream(events, lattice_run)]
        problems += [
            f"calls: {p}"
            for p in _check_call_soundness(counting.calls, lattice_run, brute_run)
        ]
        if planted is not None:
            found = [s.bits for s in lattice_run.minimal_rules]
            if found != planted:
                problems.append(
                    f"compare: planted antichain {planted} but mined {found}"
                )
        report.lattice_calls += lattice_run.model_call_count
        report.brute_calls += brute_run.model_call_count
        if problems:
            report.failures.append(
                f"trial {trial}: " + "; ".join(problems[:3])
            )
        else:
            report.matches += 1
    return report
