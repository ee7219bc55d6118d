from __future__ import annotations

import json
import threading

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_docs
from ruben.errors import ConfigError, OracleError
from ruben.oracles import (
    AllIdsPresentTrigger,
    CachedOracle,
    CountingOracle,
    HttpChatOracle,
    HttpOracleConfig,
    MarkedCountTrigger,
    NeverTrigger,
    QuestionContainsAnyTrigger,
    SafetyInstructions,
    TriggeredOracle,
    TruthTable,
    TruthTableOracle,
    assemble_prompt,
    cached,
    load_truth_table,
    save_truth_table,
    trigger_from_config,
)

F = SafetyInstructions(text="F-text")


def doc(doc_id: str, text: str | None = None):
    d = make_docs(1)[0]
    d.id = doc_id
    d.current_text = text if text is not None else f"{doc_id}-text"
    d.original_text = d.current_text
    return d


class TestAssemblePrompt:
    def test_exact_layout_with_safety(self):
        prompt = assemble_prompt("q", [doc("d2")], safety=F)
        assert prompt == "F-text\n[SOURCE d2]\nd2-text\n\nQUESTION: q"

    def test_footer_only_without_sources_or_safety(self):
        assert assemble_prompt("q", []) == "QUESTION: q"
        assert assemble_prompt("q", [], safety=F) == "F-text\nQUESTION: q"

    def test_sources_keep_given_order(self):
        prompt = assemble_prompt("q", [doc("b"), doc("a")])
        assert prompt.index("[SOURCE b]") < prompt.index("[SOURCE a]")

    def test_uses_current_text_not_original(self):
        d = doc("d1")
        d.current_text = "edited body"
        assert "edited body" in assemble_prompt("q", [d])
        assert "d1-text" not in assemble_prompt("q", [d])

    def test_deterministic(self):
        docs = [doc("x"), doc("y")]
        assert assemble_prompt("q", docs, safety=F) == assemble_prompt(
            "q", docs, safety=F
        )

    @given(st.sets(st.integers(min_value=0, max_value=7)))
    def test_includes_exactly_the_selected_sources(self, included):
        all_docs = [doc(f"s{i}", text=f"UNIQ-{i}-BODY") for i in range(8)]
        chosen = [all_docs[i] for i in sorted(included)]
        prompt = assemble_prompt("q", chosen)
        for i in range(8):
            assert (f"UNIQ-{i}-BODY" in prompt) == (i in included)


class TestTruthTable:
    def test_missing_key_falls_back_to_default(self):
        table = TruthTable(universe_size=2, entries={0b11: "hit"}, default_output="miss")
        assert table.output_for(0b01) == "miss"
        assert table.output_for(0b11) == "hit"

    def test_out_of_range_mask_rejected(self):
        with pytest.raises(ConfigError):
            TruthTable(universe_size=2, entries={4: "x"})

    def test_file_round_trip(self, tmp_path):
        table = TruthTable(
            universe_size=3,
            entries={0b101: "EXPLOIT", 0b111: "EXPLOIT too"},
            default_output="nope",
        )
        path = tmp_path / "table.json"
        save_truth_table(table, path)
        loaded = load_truth_table(path)
        assert loaded == table
        raw = json.loads(path.read_text())
        assert {"universe_size", "default_output", "entries"} <= set(raw)
        assert raw["entries"][0]["subset"] == [0, 2]

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"entries": []}')
        with pytest.raises(ConfigError):
            load_truth_table(path)
        path.write_text(
            '{"universe_size": 2, "entries": [{"subset": [5], "output": "x"}]}'
        )
        with pytest.raises(ConfigError):
            load_truth_table(path)


class TestTruthTableOracle:
    def test_lookup_by_included_ids(self):
        table = TruthTable(universe_size=3, entries={0b101: "hit"}, default_output="miss")
        oracle = TruthTableOracle(table, ["a", "b", "c"])
        assert oracle.answer("q", [doc("a"), doc("c")]) == "hit"
        assert oracle.answer("q", [doc("a")]) == "miss"
        assert oracle.answer("q", []) == "miss"

    def test_unknown_source_rejected(self):
        oracle = TruthTableOracle(TruthTable(universe_size=1, entries={}), ["a"])
        with pytest.raises(OracleError):
            oracle.answer("q", [doc("zz")])

    def test_universe_size_must_match(self):
        with pytest.raises(ConfigError):
            TruthTableOracle(TruthTable(universe_size=2, entries={}), ["a"])


class TestTriggers:
    def test_never(self):
        assert not NeverTrigger().fires("q", [doc("a")])

    def test_all_ids_present(self):
        trigger = AllIdsPresentTrigger(["a", "b"])
        assert trigger.fires("q", [doc("a"), doc("b"), doc("c")])
        assert not trigger.fires("q", [doc("a")])

    def test_marked_count(self):
        trigger = MarkedCountTrigger("OVERRIDE", min_count=2)
        marked = [doc("a", "x OVERRIDE y"), doc("b", "OVERRIDE")]
        assert trigger.fires("q", marked)
        assert not trigger.fires("q", marked[:1])

    def test_question_contains_any(self):
        trigger = QuestionContainsAnyTrigger(["alpha", "beta"])
        assert trigger.fires("ask about beta", [])
        assert not trigger.fires("gamma", [])

    def test_from_config(self):
        assert isinstance(trigger_from_config({"kind": "never"}), NeverTrigger)
        t = trigger_from_config(
            {"kind": "marked_count", "marker": "X", "min_count": 3}
        )
        assert isinstance(t, MarkedCountTrigger) and t.min_count == 3
        with pytest.raises(ConfigError):
            trigger_from_config({"kind": "wat"})
        with pytest.raises(ConfigError):
            trigger_from_config({"kind": "marked_count", "marker": ""})


def test_triggered_oracle_switches_output():
    oracle = TriggeredOracle(
        "weak",
        MarkedCountTrigger("POISON", 1),
        triggered_output="leak",
        default_output="refuse",
    )
    assert oracle.answer("q", [doc("a", "has POISON")]) == "leak"
    assert oracle.answer("q", [doc("a", "clean")]) == "refuse"
    assert oracle.descriptor.deterministic


def test_counting_oracle_records_calls():
    inner = TriggeredOracle("x", NeverTrigger(), "", "out")
    counting = CountingOracle(inner)
    counting.answer("q1", [doc("a")], None)
    counting.answer("q2", [doc("a"), doc("b")], F)
    assert counting.calls == [("q1", ("a",), False), ("q2", ("a", "b"), True)]


class TestCachedOracle:
    def make(self):
        inner = CountingOracle(TriggeredOracle("x", NeverTrigger(), "", "out"))
        return inner, CachedOracle(inner)

    def test_hit_and_miss_counters(self):
        inner, oracle = self.make()
        docs = [doc("a")]
        assert oracle.answer("q", docs) == "out"
        assert oracle.answer("q", docs) == "out"
        assert (oracle.hits, oracle.misses) == (1, 1)
        assert len(inner.calls) == 1

    def test_safety_flag_partitions_the_cache(self):
        inner, oracle = self.make()
        oracle.answer("q", [doc("a")], None)
        oracle.answer("q", [doc("a")], F)
        assert len(inner.calls) == 2

    def test_editing_a_source_invalidates_its_entry(self):
        inner, oracle = self.make()
        d = doc("a")
        oracle.answer("q", [d])
        d.current_text = "poisoned"
        oracle.answer("q", [d])
        assert len(inner.calls) == 2

    def test_errors_are_not_cached(self):
        class Flaky:
            descriptor = None

            def __init__(self):
                self.calls = 0

            def answer(self, question, sources, safety=None):
                self.calls += 1
                if self.calls == 1:
                    raise OracleError("boom")
                return "fine"

        flaky = Flaky()
        oracle = CachedOracle(flaky)
        with pytest.raises(OracleError):
            oracle.answer("q", [])
        assert oracle.answer("q", []) == "fine"
        assert flaky.calls == 2

    def test_concurrent_callers_share_one_inner_call(self):
        entered = threading.Event()
        release = threading.Event()

        class Slow:
            descriptor = None
            calls = 0

            def answer(self, question, sources, safety=None):
                Slow.calls += 1
                entered.set()
                release.wait(timeout=5)
                return "slow-out"

        oracle = CachedOracle(Slow())
        results = []
        threads = [
            threading.Thread(target=lambda: results.append(oracle.answer("q", [])))
            for _ in range(4)
        ]
        for t in threads:
            t.start()
        entered.wait(timeout=5)
        release.set()
        for t in threads:
            t.join(timeout=5)
        assert results == ["slow-out"] * 4
        assert Slow.calls == 1

    def test_cached_is_idempotent(self):
        _, oracle = self.make()
        assert cached(oracle) is oracle


class TestHttpChatOracle:
    def make(self, handler, **config):
        cfg = HttpOracleConfig(
            base_url="http://model.test", model="test-model", **config
        )
        return HttpChatOracle(cfg, transport=httpx.MockTransport(handler))

    def test_round_trip_and_wire_shape(self, monkeypatch):
        monkeypatch.setenv("RUBEN_API_KEY", "sk-test")
        captured = {}

        def handler(request):
            captured["json"] = json.loads(request.content)
            captured["auth"] = request.headers.get("authorization")
            captured["url"] = str(request.url)
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "canned"}}]},
            )

        oracle = self.make(handler)
        out = oracle.answer("q", [doc("d2")], safety=F)
        assert out == "canned"
        assert captured["url"] == "http://model.test/chat/completions"
        assert captured["auth"] == "Bearer sk-test"
        body = captured["json"]
        assert body["model"] == "test-model"
        assert body["temperature"] == 0.0
        assert body["messages"][0] == {"role": "system", "content": "F-text"}
        assert body["messages"][1]["role"] == "user"
        assert body["messages"][1]["content"] == "[SOURCE d2]\nd2-text\n\nQUESTION: q"

    def test_no_system_message_without_safety(self):
        def handler(request):
            body = json.loads(request.content)
            assert [m["role"] for m in body["messages"]] == ["user"]
            return httpx.Response(
                200, json={"choices": [{"message": {"content": "ok"}}]}
            )

        assert self.make(handler).answer("q", []) == "ok"

    def test_http_error_status(self):
        oracle = self.make(lambda request: httpx.Response(500, text="boom"))
        with pytest.raises(OracleError, match="500"):
            oracle.answer("q", [])

    def test_malformed_body(self):
        oracle = self.make(lambda request: httpx.Response(200, json={"nope": 1}))
        with pytest.raises(OracleError, match="malformed"):
            oracle.answer("q", [])

    def test_transport_failure(self):
        def handler(request):
            raise httpx.ConnectTimeout("slow network")

        with pytest.raises(OracleError, match="request failed"):
            self.make(handler).answer("q", [])
