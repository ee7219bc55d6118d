"""Command-line interface: batch mining, equivalence verification, stats, serving.

`mine` drives a full run from either a system manifest (retrieve → edit →
mine) or a truth-table file (synthetic universe, marker predicate), writing
line-delimited rule records plus a run summary.  `verify` pits the pruning
miner against the brute-force reference over seeded random tables.  `stats`
reports how much of the lattice a saved run pruned.  `serve` starts the HTTP
service.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import ConfigError, RetrievalError, RubenError, RunFailedError
from .lattice import SourceSet, mine_rules, record_to_dict, summary_to_dict
from .oracles import TruthTableOracle, cached, load_truth_table
from .retrieval import edit_source, retrieve
from .systems import load_system, resolve_manifest_path
from .verification import exploit_predicate, make_sources, run_verification

BRUTE_FORCE_LIMIT = 12


@click.group()
def main() -> None:
    """Mine minimal if-then rules explaining retrieval-augmented LLM outputs."""


def _parse_edit(spec: str) -> tuple[str, str]:
    if "=" not in spec:
        raise click.UsageError(f"--edit expects id=file, got {spec!r}")
    source_id, _, file_ref = spec.partition("=")
    try:
        return source_id, Path(file_ref).read_text()
    except OSError as exc:
        raise click.UsageError(f"cannot read edit file {file_ref!r}: {exc}") from exc


def _resolve_edit_target(sources, source_id: str):
    """Accept either a document id or a rank label like S1."""
    for i, doc in enumerate(sources):
        if doc.id == source_id or f"S{i + 1}" == source_id:
            return doc
    raise click.UsageError(
        f"no retrieved source {source_id!r}; have "
        f"{[doc.id for doc in sources]} (or S1..S{len(sources)})"
    )


def _write_outputs(run, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"
    ordered = sorted(
        run.records.values(), key=lambda r: (-r.subset.cardinality, r.subset.bits)
    )
    with records_path.open("w") as fh:
        for record in ordered:
            fh.write(json.dumps(record_to_dict(record, run.source_set)) + "\n")
    summary_path = out_dir / "summary.json"
    # elapsed_ms is nulled in the file so identical runs are byte-identical;
    # the measured value goes to stdout instead.
    summary_path.write_text(
        json.dumps(summary_to_dict(run, elapsed_ms=None), indent=2) + "\n"
    )
    return records_path, summary_path


@main.command()
@click.option("--manifest", help="System manifest path, or a bundled tag.")
@click.option("--table", help="Truth-table JSON file (synthetic universe).")
@click.option("--question", help="Question to ask (required with --manifest).")
@click.option(
    "--edit",
    "edits",
    multiple=True,
    help="Replace a retrieved source's text: id=file or S<rank>=file.",
)
@click.option("--oracle", help="Oracle name from the manifest (default: its default).")
@click.option(
    "--safety",
    type=click.Choice(["on", "off"]),
    default="on",
    show_default=True,
    help="Pass the system's safety instructions to the model.",
)
@click.option(
    "--out",
    default="ruben-run",
    show_default=True,
    help="Directory for records.jsonl and summary.json.",
)
def mine(manifest, table, question, edits, oracle, safety, out):
    """Mine rules for one question and write the run to disk."""
    if bool(manifest) == bool(table):
        raise click.UsageError("provide exactly one of --manifest or --table")

    if table:
        if edits:
            raise click.UsageError("--edit applies only to --manifest runs")
        if oracle:
            raise click.UsageError("--oracle applies only to --manifest runs")
        try:
            truth_table = load_truth_table(table)
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(str(exc)) from exc
        sources = make_sources(truth_table.universe_size)
        source_set = SourceSet(
            question=question or "truth-table run",
            sources=sources,
            safety_enabled=False,
        )
        model = TruthTableOracle(truth_table, [doc.id for doc in sources])
        predicate = exploit_predicate()
        safety_text = None
    else:
        if not question:
            raise click.UsageError("--question is required with --manifest")
        try:
            system = load_system(resolve_manifest_path(manifest))
            retrieved = retrieve(question, system.corpus, system.k)
        except (ConfigError, RetrievalError) as exc:
            raise click.UsageError(str(exc)) from exc
        for spec in edits:
            source_id, new_text = _parse_edit(spec)
            edit_source(_resolve_edit_target(retrieved, source_id), new_text)
        source_set = SourceSet(
            question=question,
            sources=tuple(retrieved),
            safety_enabled=(safety == "on"),
        )
        try:
            model = cached(system.build_oracle(oracle))
            predicate = system.build_predicate()
        except ConfigError as exc:
            raise click.UsageError(str(exc)) from exc
        safety_text = system.safety

    try:
        run = mine_rules(source_set, model, predicate, safety=safety_text)
    except RunFailedError as exc:
        partial = exc.partial_run
        click.echo(f"run failed: {exc}", err=True)
        click.echo(
            f"partial run: {partial.model_call_count} calls, "
            f"{len(partial.records)} records",
            err=True,
        )
        sys.exit(1)

    records_path, summary_path = _write_outputs(run, Path(out))
    n = source_set.size
    click.echo(f"question: {source_set.question}")
    click.echo(f"sources: {', '.join(source_set.ids)}")
    click.echo(f"minimal rules: {len(run.minimal_rules)}")
    for subset in run.minimal_rules:
        ids = run.source_set.ids_for(subset)
        labels = ",".join(f"S{i + 1}" for i in subset.positions)
        click.echo(f"  [{', '.join(ids)}]  ({labels})")
    click.echo(f"model calls: {run.model_call_count}")
    click.echo(
        f"evaluated {run.evaluated_count}, pruned {run.pruned_count}, "
        f"total {1 << n}"
    )
    click.echo(f"elapsed: {run.elapsed_ms:.1f} ms")
    click.echo(f"wrote {records_path} and {summary_path}")


@main.command()
@click.option("--n", default=8, show_default=True, help="Universe size (≤ 12).")
@click.option("--trials", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def verify(n, trials, seed):
    """Check mine_rules against brute force over random truth tables."""
    if n < 1 or n > BRUTE_FORCE_LIMIT:
        raise click.UsageError(f"--n must be in 1..{BRUTE_FORCE_LIMIT}, got {n}")
    if trials < 0:
        raise click.UsageError("--trials must be >= 0")
    if trials == 0:
        click.echo("0 trials requested: vacuous pass")
        return
    report = run_verification(n=n, trials=trials, seed=seed)
    click.echo(report.summary_line())
    for failure in report.failures[:20]:
        click.echo(f"  {failure}", err=True)
    if report.passed:
        click.echo(
            f"lattice calls {report.lattice_calls} vs brute-force "
            f"{report.brute_calls}"
        )
    else:
        sys.exit(1)


@main.command()
@click.argument("run_path")
def stats(run_path):
    """Report evaluated/pruned node counts for a saved run."""
    path = Path(run_path)
    records_file = path / "records.jsonl" if path.is_dir() else path
    try:
        lines = records_file.read_text().splitlines()
        records = [json.loads(line) for line in lines if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read run records: {exc}") from exc
    if not records:
        raise click.UsageError(f"{records_file} holds no records")
    total = len(records)
    pruned = sum(1 for record in records if record.get("pruned"))
    evaluated = total - pruned
    click.echo(f"evaluated {evaluated}, pruned {pruned}, total {total}")
    click.echo(
        f"model calls avoided: {pruned}/{total} "
        f"({100.0 * pruned / total:.1f}% of the lattice)"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--config-dir", help="Directory of *.manifest.json (default: bundled).")
@click.option("--snapshot-dir", help="Write completed run summaries here.")
@click.option("--ui-dir", help="Serve a built web UI from this directory.")
def serve(host, port, config_dir, snapshot_dir, ui_dir):
    """Run the HTTP service (sessions, retrieval, SSE rule streaming)."""
    import uvicorn

    from .service import create_app

    try:
        app = create_app(
            config_dir=config_dir, snapshot_dir=snapshot_dir, ui_dir=ui_dir
        )
    except RubenError as exc:
        raise click.UsageError(str(exc)) from exc
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
