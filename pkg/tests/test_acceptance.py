"""Acceptance gate: the six binding behaviours of the rule-mining engine.

Each test here is one criterion; the conftest hook prints one
``[ACCEPTANCE] <test-name>: PASS|FAIL`` line per criterion at the end of the
run.  The equivalence sweep (1000 seeded trials at each universe size in
{4, 6, 8, 10}) is shared by the equivalence, call-soundness, and streaming
criteria; each trial is audited in all three categories as it runs.
"""
from __future__ import annotations

import time

import pytest
from click.testing import CliRunner

from conftest import table_from_held
from ruben.cli import main
from ruben.lattice import SourceSet, brute_force_mine, mine_rules
from ruben.oracles import TruthTableOracle
from ruben.retrieval import SourceDoc
from ruben.scenarios import (
    FINANCE_OVERRIDE,
    FINANCE_QUESTION,
    run_employees,
    run_finance,
    run_software,
)
from ruben.verification import (
    exploit_predicate,
    full_set_only_table,
    make_sources,
    run_verification,
)

SWEEP_SIZES = (4, 6, 8, 10)
SWEEP_TRIALS = 1000
SWEEP_SEED = 20260817
SWEEP_BUDGET_S = 120.0
SCENARIO_BUDGET_S = 5.0


@pytest.fixture(scope="module")
def sweep():
    started = time.perf_counter()
    reports = {
        n: run_verification(n=n, trials=SWEEP_TRIALS, seed=SWEEP_SEED + n)
        for n in SWEEP_SIZES
    }
    return reports, time.perf_counter() - started


def failures_of(report, category: str) -> list[str]:
    return [f for f in report.failures if f"{category}:" in f]


def test_oracle_equivalence(sweep):
    """Pruned mining agrees exactly with brute force on every seeded trial."""
    reports, elapsed = sweep
    for n in SWEEP_SIZES:
        report = reports[n]
        assert report.trials == SWEEP_TRIALS
        assert failures_of(report, "compare") == []
        assert report.matches == report.trials, report.failures[:5]
        assert report.brute_calls == SWEEP_TRIALS * (1 << n)
    assert elapsed < SWEEP_BUDGET_S, f"sweep took {elapsed:.1f}s"


def test_pruning_soundness_and_call_bounds(sweep):
    """No unjustified oracle call, never more than 2^n, and the
    holds-only-at-the-full-set table costs exactly 1 + n calls."""
    reports, _ = sweep
    for n in SWEEP_SIZES:
        report = reports[n]
        assert failures_of(report, "calls") == []
        assert report.lattice_calls <= report.brute_calls
    for n in SWEEP_SIZES:
        sources = make_sources(n)
        table = full_set_only_table(n)
        run = mine_rules(
            SourceSet(question="top only", sources=sources, safety_enabled=False),
            TruthTableOracle(table, [doc.id for doc in sources]),
            exploit_predicate(),
        )
        assert run.model_call_count == 1 + n
        assert [s.bits for s in run.minimal_rules] == [(1 << n) - 1]


def test_bundled_scenario_outcomes():
    """The four scripted red-team outcomes, end to end, in under 5 seconds."""
    started = time.perf_counter()

    finance_weak = run_finance(strong=False)
    assert len(finance_weak.minimal_rules) == 1
    assert finance_weak.minimal_rules[0].positions == (0, 2)  # {S1, S3}

    finance_strong = run_finance(strong=True)
    assert finance_strong.minimal_rules == ()

    software = run_software(edited=True)
    assert len(software.minimal_rules) == 1
    edited_positions = tuple(
        i for i, doc in enumerate(software.source_set.sources) if doc.edited
    )
    assert software.minimal_rules[0].positions == edited_positions
    assert len(edited_positions) == 1

    employees_before = run_employees(injected=False)
    assert employees_before.minimal_rules == ()
    employees_after = run_employees(injected=True)
    assert employees_after.minimal_rules == ()

    elapsed = time.perf_counter() - started
    assert elapsed < SCENARIO_BUDGET_S, f"scenarios took {elapsed:.1f}s"


def test_hand_derived_three_source_case():
    """n=3, predicate holds on {a},{a,b},{a,c},{a,b,c}: one minimal rule {a},
    5 oracle calls, 3 pruned subsets — checked against brute force."""
    docs = tuple(
        SourceDoc(
            id=x, title=f"source {x}", original_text=f"{x} body",
            current_text=f"{x} body",
        )
        for x in "abc"
    )
    table = table_from_held(3, {0b001, 0b011, 0b101, 0b111})
    oracle = TruthTableOracle(table, ["a", "b", "c"])
    predicate = exploit_predicate()
    source_set = SourceSet(question="hand case", sources=docs,
                           safety_enabled=False)

    run = mine_rules(source_set, oracle, predicate)
    assert [list(source_set.ids_for(s)) for s in run.minimal_rules] == [["a"]]
    assert run.model_call_count == 5
    assert run.pruned_count == 3

    brute = brute_force_mine(source_set, oracle, predicate)
    assert brute.model_call_count == 8
    assert brute.minimal_rules == run.minimal_rules
    for subset, record in run.records.items():
        reference = brute.records[subset]
        if record.pruned:
            assert not reference.valid
        else:
            assert record.valid == reference.valid
            assert record.minimal == reference.minimal
            assert record.predicate_held == reference.predicate_held


def test_streaming_contract(sweep):
    """Every sweep trial's event log is gapless and level-monotone, and its
    rule_minimal events equal the rules folded back out of the records."""
    reports, _ = sweep
    for n in SWEEP_SIZES:
        report = reports[n]
        assert failures_of(report, "stream") == []
        assert report.matches == report.trials


def test_byte_identical_reruns(tmp_path):
    """Re-mining an identical run spec writes byte-identical output files."""
    override = tmp_path / "override.txt"
    override.write_text("Pinned post.\n\n" + FINANCE_OVERRIDE + "\n")
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        result = CliRunner().invoke(
            main,
            ["mine", "--manifest", "finance", "--question", FINANCE_QUESTION,
             "--edit", f"S1={override}", "--edit", f"S3={override}",
             "--oracle", "assistant-weak", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        outputs.append(
            {
                "records.jsonl": (out / "records.jsonl").read_bytes(),
                "summary.json": (out / "summary.json").read_bytes(),
            }
        )
    assert outputs[0]["records.jsonl"] == outputs[1]["records.jsonl"]
    assert outputs[0]["summary.json"] == outputs[1]["summary.json"]
