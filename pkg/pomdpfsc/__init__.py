"""
pomdpfsc: finite-state controller synthesis for POMDPs.

Controllers come from two searches that feed each other: belief-space
exploration cut off by a finite-state controller, and abstraction-refinement
search over families of memory-model controllers.

Public API
----------
Names exported via ``__all__`` are the supported public entry points.
Helpers prefixed with ``_`` are internal and subject to change.
"""

from .__about__ import __version__, __build__
from .errors import (
    PomdpFscError,
    ConfigurationError,
    ModelError,
    ModelParseError,
    SchemaError,
    ModelValidationError,
    ControllerError,
    BeliefError,
    CannotSplitError,
)
from .models import Distribution, Mdp, Pomdp, Objective, Specification, make_pomdp, validate, reachable_states
from .model_io import parse_model, emit_model
from .checker import ValueVector, MemorylessPolicy, check_mc, check_mdp, induced_values
from .fsc import Fsc, FscValue, FscSize, evaluate, induced_mc, fsc_size, default_cutoff_fsc
from .fsc_io import export_fsc, import_fsc, export_dot
from .belief import Belief, BeliefFragment, unfold, check_fragment, extract_belief_fsc, action_sets
from .family import FamilySpace, full_family
from .abstraction import build_abstraction, check_abstraction, split
from .inductive import SearchResult, SearchStats, synthesize, memory_model_from
from .budget import CancellationToken, Deadline
from .saynt import (
    SayntConfig,
    SayntResult,
    IterationRecord,
    iterate_saynt,
    run_saynt,
    run_belief_only,
    run_inductive_only,
    run_oneshot_q1,
    run_oneshot_q2,
)
from .generators import gen_lanes, gen_lanes_plus, gen_paper_micro, gen_random_pomdp

__all__ = [
    "__version__",
    "__build__",
    "PomdpFscError",
    "ConfigurationError",
    "ModelError",
    "ModelParseError",
    "SchemaError",
    "ModelValidationError",
    "ControllerError",
    "BeliefError",
    "CannotSplitError",
    "Distribution",
    "Mdp",
    "Pomdp",
    "Objective",
    "Specification",
    "make_pomdp",
    "validate",
    "reachable_states",
    "parse_model",
    "emit_model",
    "ValueVector",
    "MemorylessPolicy",
    "check_mc",
    "check_mdp",
    "induced_values",
    "Fsc",
    "FscValue",
    "FscSize",
    "evaluate",
    "induced_mc",
    "fsc_size",
    "default_cutoff_fsc",
    "export_fsc",
    "import_fsc",
    "export_dot",
    "Belief",
    "BeliefFragment",
    "unfold",
    "check_fragment",
    "extract_belief_fsc",
    "action_sets",
    "FamilySpace",
    "full_family",
    "build_abstraction",
    "check_abstraction",
    "split",
    "SearchResult",
    "SearchStats",
    "synthesize",
    "memory_model_from",
    "CancellationToken",
    "Deadline",
    "SayntConfig",
    "SayntResult",
    "IterationRecord",
    "iterate_saynt",
    "run_saynt",
    "run_belief_only",
    "run_inductive_only",
    "run_oneshot_q1",
    "run_oneshot_q2",
    "gen_lanes",
    "gen_lanes_plus",
    "gen_paper_micro",
    "gen_random_pomdp",
]
