"""Mine minimal if-then rules explaining retrieval-augmented LLM outputs.

Given a question, a set of retrieved sources, a model oracle, and an output
predicate, the miner finds every minimal subset of sources whose presence in
the prompt consistently makes the predicate hold — the tightest available
explanation of which sources drive a behaviour.
"""
from .errors import (
    ConfigError,
    OracleError,
    PredicateError,
    RetrievalError,
    RubenError,
    RunFailedError,
    UnparsableVerdictError,
)
from .lattice import (
    EvaluationRecord,
    EventKind,
    MiningRun,
    PredicateHeld,
    RuleEvent,
    RuleRecord,
    SourceSet,
    SourceSubset,
    brute_force_mine,
    event_to_dict,
    immediate_subsets,
    immediate_supersets,
    mine_rules,
    minimal_rules_of,
    record_to_dict,
    summary_to_dict,
)
from .oracles import (
    CachedOracle,
    HttpChatOracle,
    HttpOracleConfig,
    ModelOracle,
    PromptTemplate,
    SafetyInstructions,
    TriggeredOracle,
    TruthTable,
    TruthTableOracle,
    assemble_prompt,
    cached,
    load_truth_table,
    save_truth_table,
)
from .predicates import (
    AllOfPredicate,
    AnyOfPredicate,
    ContainsPredicate,
    JudgePredicate,
    NotPredicate,
    OutputPredicate,
    RegexPredicate,
    predicate_from_config,
)
from .retrieval import (
    Corpus,
    CorpusDoc,
    SourceDoc,
    edit_source,
    load_corpus,
    reset_source,
    retrieve,
)
from .systems import (
    SystemConfig,
    load_system,
    load_systems,
    resolve_manifest_path,
)
from .verification import run_verification

__version__ = "0.1.0"

__all__ = [
    "AllOfPredicate",
    "AnyOfPredicate",
    "CachedOracle",
    "ConfigError",
    "ContainsPredicate",
    "Corpus",
    "CorpusDoc",
    "EvaluationRecord",
    "EventKind",
    "HttpChatOracle",
    "HttpOracleConfig",
    "JudgePredicate",
    "MiningRun",
    "ModelOracle",
    "NotPredicate",
    "OracleError",
    "OutputPredicate",
    "PredicateError",
    "PredicateHeld",
    "PromptTemplate",
    "RegexPredicate",
    "RetrievalError",
    "RubenError",
    "RuleEvent",
    "RuleRecord",
    "RunFailedError",
    "SafetyInstructions",
    "SourceDoc",
    "SourceSet",
    "SourceSubset",
    "SystemConfig",
    "TriggeredOracle",
    "TruthTable",
    "TruthTableOracle",
    "UnparsableVerdictError",
    "assemble_prompt",
    "brute_force_mine",
    "cached",
    "edit_source",
    "event_to_dict",
    "immediate_subsets",
    "immediate_supersets",
    "load_corpus",
    "load_system",
    "load_systems",
    "load_truth_table",
    "mine_rules",
    "minimal_rules_of",
    "predicate_from_config",
    "record_to_dict",
    "reset_source",
    "resolve_manifest_path",
    "retrieve",
    "run_verification",
    "save_truth_table",
    "summary_to_dict",
]
