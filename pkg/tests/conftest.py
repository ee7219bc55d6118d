from __future__ import annotations

import pytest

from ruben.lattice import SourceSet
from ruben.oracles import TruthTable, TruthTableOracle
from ruben.predicates import ContainsPredicate
from ruben.retrieval import SourceDoc

# --------------------------------------------------------------------------
# Acceptance reporting: every test in test_acceptance.py is one named
# criterion; a summary block prints one PASS/FAIL line per criterion at the
# end of the run, whatever the capture settings.

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call":
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"
    elif report.failed:  # setup/teardown error counts as a failure
        _acceptance_results[name] = "FAIL"
    elif report.when == "setup" and report.skipped:
        _acceptance_results[name] = "FAIL (skipped)"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results.items():
        terminalreporter.write_line(f"[ACCEPTANCE] {name}: {outcome}")


def make_docs(n: int, prefix: str = "d") -> tuple[SourceDoc, ...]:
    return tuple(
        SourceDoc(
            id=f"{prefix}{i}",
            title=f"doc {i}",
            original_text=f"text {i}",
            current_text=f"text {i}",
        )
        for i in range(n)
    )


def table_from_held(n: int, held_masks: set[int]) -> TruthTable:
    """Truth table whose output carries the marker exactly on held_masks."""
    entries = {
        mask: ("EXPLOIT hit" if mask in held_masks else "benign miss")
        for mask in range(1 << n)
    }
    return TruthTable(universe_size=n, entries=entries, default_output="")


def upset_table(n: int, anchors: list[int]) -> TruthTable:
    """Truth table holding exactly on supersets of any anchor mask."""
    held = {
        mask
        for mask in range(1 << n)
        if any(mask & anchor == anchor for anchor in anchors)
    }
    return table_from_held(n, held)


# session-scoped: stateless, and hypothesis-driven tests may share it
@pytest.fixture(scope="session")
def marker_predicate() -> ContainsPredicate:
    return ContainsPredicate("marker", "EXPLOIT")


def oracle_for(table: TruthTable, docs) -> TruthTableOracle:
    return TruthTableOracle(table, [doc.id for doc in docs])


def source_set_for(docs, question: str = "q") -> SourceSet:
    return SourceSet(question=question, sources=tuple(docs), safety_enabled=False)
