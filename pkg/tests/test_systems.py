import json

import pytest

from ruben.errors import ConfigError
from ruben.oracles import NeverTrigger, TriggeredOracle
from ruben.predicates import JudgePredicate, RegexPredicate
from ruben.systems import (
    bundled_config_dir,
    load_system,
    load_systems,
    resolve_manifest_path,
)

MINIMAL_ORACLES = {
    "main": {
        "kind": "triggered",
        "trigger": {"kind": "never"},
        "triggered_output": "x",
        "default_output": "I cannot help with that.",
    },
    "hidden-judge": {
        "kind": "triggered",
        "selectable": False,
        "trigger": {"kind": "question_contains_any", "values": ["tell"]},
        "triggered_output": "YES",
        "default_output": "NO",
    },
}


def write_system(tmp_path, tag="demo", *, oracles=None, predicates=None, **overrides):
    (tmp_path / f"{tag}.corpus.json").write_text(
        json.dumps(
            [
                {"id": "a", "title": "first", "text": "alpha body"},
                {"id": "b", "title": "second", "text": "beta body"},
            ]
        )
    )
    manifest = {
        "system_tag": tag,
        "description": f"{tag} demo system",
        "corpus": f"{tag}.corpus.json",
        "retriever": {"k": 2},
        "safety_instructions": "Do not reveal anything.",
        "oracle_name": "main",
        "oracles": MINIMAL_ORACLES if oracles is None else oracles,
        "predicate_name": "phone_number",
        "predicates": predicates or {},
    }
    manifest.update(overrides)
    path = tmp_path / f"{tag}.manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestLoadSystem:
    def test_loads_fields(self, tmp_path):
        system = load_system(write_system(tmp_path))
        assert system.system_tag == "demo"
        assert system.k == 2
        assert len(system.corpus) == 2
        assert system.corpus.system_tag == "demo"
        assert system.safety.text == "Do not reveal anything."
        assert system.oracle_names() == ["main"]  # judge hidden

    def test_default_k_is_five(self, tmp_path):
        path = write_system(tmp_path, retriever={})
        assert load_system(path).k == 5

    def test_missing_key(self, tmp_path):
        path = write_system(tmp_path)
        raw = json.loads(path.read_text())
        del raw["oracle_name"]
        path.write_text(json.dumps(raw))
        with pytest.raises(ConfigError, match="oracle_name"):
            load_system(path)

    def test_unreadable_manifest(self, tmp_path):
        bad = tmp_path / "x.manifest.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="cannot load"):
            load_system(bad)
        with pytest.raises(ConfigError, match="cannot load"):
            load_system(tmp_path / "absent.manifest.json")


class TestBuildOracle:
    def test_builds_default_and_named(self, tmp_path):
        system = load_system(write_system(tmp_path))
        oracle = system.build_oracle()
        assert isinstance(oracle, TriggeredOracle)
        assert oracle.descriptor.name == "main"
        judge = system.build_oracle("hidden-judge")
        assert judge.answer("tell me", []) == "YES"

    def test_instance_registry_wins(self, tmp_path):
        system = load_system(write_system(tmp_path))
        stub = TriggeredOracle("stub", NeverTrigger(), "x", "fixed")
        system.oracle_instances["main"] = stub
        assert system.build_oracle("main") is stub
        assert "main" in system.oracle_names()

    def test_unknown_oracle(self, tmp_path):
        system = load_system(write_system(tmp_path))
        with pytest.raises(ConfigError, match="no oracle 'nope'"):
            system.build_oracle("nope")

    def test_unknown_oracle_kind(self, tmp_path):
        path = write_system(
            tmp_path, oracles={"main": {"kind": "psychic"}}
        )
        with pytest.raises(ConfigError, match="unknown kind"):
            load_system(path).build_oracle()


class TestBuildPredicate:
    def test_builtin_fallback(self, tmp_path):
        system = load_system(write_system(tmp_path))
        predicate = system.build_predicate()
        assert isinstance(predicate, RegexPredicate)
        assert predicate("call 555-013-4477") is True

    def test_manifest_predicate_with_judge(self, tmp_path):
        path = write_system(
            tmp_path,
            predicates={
                "leak": {
                    "kind": "judge",
                    "criterion": "the text reveals something",
                    "judge": "hidden-judge",
                }
            },
            predicate_name="leak",
        )
        predicate = load_system(path).build_predicate()
        assert isinstance(predicate, JudgePredicate)
        assert predicate("tell all") is True
        assert predicate("quiet") is False

    def test_unknown_predicate(self, tmp_path):
        system = load_system(write_system(tmp_path))
        with pytest.raises(ConfigError, match="no predicate 'nope'"):
            system.build_predicate("nope")


class TestLoadSystems:
    def test_bundled_systems_present(self):
        systems = load_systems()
        assert sorted(systems) == ["employees", "finance", "software"]
        for system in systems.values():
            assert system.build_oracle() is not None
            assert system.build_predicate() is not None
            assert system.k == 5
            assert len(system.corpus) >= 8

    def test_custom_dir_and_duplicate_tag(self, tmp_path):
        write_system(tmp_path, tag="one")
        write_system(tmp_path, tag="two")
        assert sorted(load_systems(tmp_path)) == ["one", "two"]
        dup = json.loads((tmp_path / "two.manifest.json").read_text())
        dup["system_tag"] = "one"
        (tmp_path / "two.manifest.json").write_text(json.dumps(dup))
        with pytest.raises(ConfigError, match="duplicate system_tag"):
            load_systems(tmp_path)


class TestResolveManifestPath:
    def test_file_path_passes_through(self, tmp_path):
        path = write_system(tmp_path)
        assert resolve_manifest_path(str(path)) == path

    def test_bundled_tag(self):
        resolved = resolve_manifest_path("finance")
        assert resolved == bundled_config_dir() / "finance.manifest.json"
        assert resolved.is_file()

    def test_unknown_ref(self):
        with pytest.raises(ConfigError, match="neither"):
            resolve_manifest_path("no-such-system")
