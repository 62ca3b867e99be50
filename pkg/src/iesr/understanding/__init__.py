from .dimensions import DimensionError, check_equation, equation_variables, expression_dimension
from .pipeline import (
    UnderstandingConfig,
    ValidatedState,
    extract_semantic_state,
    run_understanding,
    verify_relations,
)
from .rules import Constraint, Formula, RuleBase, RuleBaseError, UnitSpec, default_rulebase
from .scoring import (
    ScoredRelation,
    filter_high,
    jaccard,
    match_relation,
    score_relation,
    similarity,
    tokens,
    unit_compat,
)
from .state import (
    Entity,
    NumericExpr,
    RelationHypothesis,
    SemanticState,
    UnitMention,
    parse_state_block,
    render_state_block,
)

__all__ = [
    "Constraint",
    "DimensionError",
    "Entity",
    "Formula",
    "NumericExpr",
    "RelationHypothesis",
    "RuleBase",
    "RuleBaseError",
    "ScoredRelation",
    "SemanticState",
    "UnderstandingConfig",
    "UnitMention",
    "UnitSpec",
    "ValidatedState",
    "check_equation",
    "default_rulebase",
    "equation_variables",
    "expression_dimension",
    "extract_semantic_state",
    "filter_high",
    "jaccard",
    "match_relation",
    "parse_state_block",
    "render_state_block",
    "run_understanding",
    "score_relation",
    "similarity",
    "tokens",
    "unit_compat",
    "verify_relations",
]
