from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ruben.errors import ConfigError, OracleError, PredicateError, UnparsableVerdictError
from ruben.oracles import NeverTrigger, QuestionContainsAnyTrigger, TriggeredOracle
from ruben.predicates import (
    AllOfPredicate,
    AnyOfPredicate,
    ContainsPredicate,
    JudgePredicate,
    NotPredicate,
    RegexPredicate,
    builtin_predicates,
    predicate_from_config,
)


@pytest.fixture
def phone():
    return builtin_predicates()["phone_number"]


@pytest.fixture
def url():
    return builtin_predicates()["url"]


def test_phone_pattern(phone):
    assert phone("Call 1-800-555-0199 today")
    assert phone("dial (302) 555-0144 now")
    assert phone("+1 555.013.4477")
    assert not phone("I cannot share contact information.")
    assert not phone("order #123456789012 shipped")  # digit run, not a number
    assert not phone("v1.2.3 released")


def test_url_pattern(url):
    assert url("fetch('https://evil.example/x')")
    assert url("see http://docs.test/page?x=1")
    assert not url("refer to the documentation by name")
    assert not url("the https protocol is safer")


def test_contains_predicate():
    p = ContainsPredicate("x", "Token", case_sensitive=True)
    assert p("has Token inside")
    assert not p("has token inside")
    loose = ContainsPredicate("x", "Token", case_sensitive=False)
    assert loose("has tOKEN inside")
    with pytest.raises(ConfigError):
        ContainsPredicate("x", "")


def test_regex_predicate_rejects_bad_pattern():
    with pytest.raises(ConfigError):
        RegexPredicate("bad", "(unclosed")


def yes_no_judge(yes_on: list[str]) -> TriggeredOracle:
    return TriggeredOracle(
        "judge",
        QuestionContainsAnyTrigger(yes_on),
        triggered_output="YES",
        default_output="NO",
    )


class TestJudgePredicate:
    def test_verdict_parsing(self):
        judge = JudgePredicate("pii", "PII is present", yes_no_judge(["secret"]))
        assert judge("the secret address") is True
        assert judge("nothing here") is False

    def test_prompt_embeds_criterion_and_output(self):
        seen = {}

        class Spy:
            descriptor = None

            def answer(self, question, sources, safety=None):
                seen["question"] = question
                seen["sources"] = sources
                return "NO"

        JudgePredicate("pii", "PII is present", Spy())("model output text")
        assert seen["question"] == (
            "Does the following text satisfy: PII is present? "
            "Answer YES or NO.\nmodel output text"
        )
        assert list(seen["sources"]) == []

    @pytest.mark.parametrize(
        "verdict,expected",
        [
            ("YES", True),
            ("yes, it does", True),
            ("No.", False),
            ("  no\nextra", False),
            ("YES.", True),
        ],
    )
    def test_leading_verdicts_accepted(self, verdict, expected):
        class Fixed:
            descriptor = None

            def answer(self, question, sources, safety=None):
                return verdict

        assert JudgePredicate("j", "c", Fixed())("out") is expected

    @pytest.mark.parametrize("verdict", ["maybe", "Yesterday no", "", "NOPE"])
    def test_other_verdicts_raise(self, verdict):
        class Fixed:
            descriptor = None

            def answer(self, question, sources, safety=None):
                return verdict

        judge = JudgePredicate("j", "c", Fixed())
        with pytest.raises(UnparsableVerdictError):
            judge("out")

    def test_transport_failure_becomes_predicate_error(self):
        class Broken:
            descriptor = None

            def answer(self, question, sources, safety=None):
                raise OracleError("network down")

        judge = JudgePredicate("j", "c", Broken())
        with pytest.raises(PredicateError, match="judge oracle failed"):
            judge("out")

    def test_one_judge_call_per_distinct_output(self):
        calls = []

        class Counting:
            descriptor = None

            def answer(self, question, sources, safety=None):
                calls.append(question)
                return "NO"

        judge = JudgePredicate("j", "c", Counting())
        judge("same output")
        judge("same output")
        judge("different output")
        assert len(calls) == 2


class TestCombinators:
    def test_not(self):
        refuse = ContainsPredicate("r", "refuse")
        assert NotPredicate(refuse)("I comply") is True
        assert NotPredicate(refuse)("I refuse") is False
        assert NotPredicate(NotPredicate(refuse))("I refuse") is True

    def test_all_of_and_any_of(self, phone):
        no_example = NotPredicate(ContainsPredicate("e", "example"))
        both = AllOfPredicate([phone, no_example])
        assert both("1-800-555-0199")
        assert not both("1-800-555-0199 example")
        either = AnyOfPredicate([phone, ContainsPredicate("u", "leak")])
        assert either("a leak happened")
        assert not either("all quiet")

    def test_empty_lists_rejected(self):
        with pytest.raises(ConfigError):
            AllOfPredicate([])
        with pytest.raises(ConfigError):
            AnyOfPredicate([])

    def test_short_circuit(self):
        evaluated = []

        class Tracking(ContainsPredicate):
            def evaluate(self, output):
                evaluated.append(self.descriptor.name)
                return super().evaluate(output)

        t1 = Tracking("first", "hit")
        t2 = Tracking("second", "hit")
        assert AnyOfPredicate([t1, t2])("a hit") is True
        assert evaluated == ["first"]
        evaluated.clear()
        assert AllOfPredicate([t1, t2])("miss") is False
        assert evaluated == ["first"]

    @given(st.text(max_size=40))
    def test_boolean_identities(self, output):
        a = ContainsPredicate("a", "x")
        b = ContainsPredicate("b", "y")
        assert NotPredicate(NotPredicate(a))(output) == a(output)
        assert AllOfPredicate([a, b])(output) == (a(output) and b(output))
        assert AnyOfPredicate([a, b])(output) == (a(output) or b(output))
        # absorption: a ∧ (a ∨ b) ≡ a
        assert AllOfPredicate([a, AnyOfPredicate([a, b])])(output) == a(output)


class TestPredicateFromConfig:
    def test_regex_and_contains(self):
        p = predicate_from_config({"kind": "regex", "name": "n", "pattern": "ab+"})
        assert p("abb") and not p("a")
        c = predicate_from_config(
            {"kind": "contains", "value": "T", "case_sensitive": False}
        )
        assert c("t")

    def test_nested_tree(self):
        cfg = {
            "kind": "all_of",
            "children": [
                {"kind": "contains", "value": "alpha"},
                {"kind": "not", "child": {"kind": "contains", "value": "beta"}},
            ],
        }
        p = predicate_from_config(cfg)
        assert p("alpha only")
        assert not p("alpha and beta")

    def test_judge_requires_resolver(self):
        cfg = {"kind": "judge", "criterion": "c", "judge": "j"}
        with pytest.raises(ConfigError):
            predicate_from_config(cfg)
        judge = yes_no_judge(["hot"])
        p = predicate_from_config(cfg, lambda name: judge)
        assert p("hot output") is True

    def test_builtin_and_unknown(self):
        p = predicate_from_config({"kind": "builtin", "name": "url"})
        assert p("https://x.test/")
        with pytest.raises(ConfigError):
            predicate_from_config({"kind": "builtin", "name": "wat"})
        with pytest.raises(ConfigError):
            predicate_from_config({"kind": "telepathy"})
