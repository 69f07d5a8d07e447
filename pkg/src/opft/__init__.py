"""Exact checks of operational fine tuning for finite classical scenarios."""

from .prob import CondDist, FiniteSpace, make_cond_dist, to_rational
from .combs import (
    Comb,
    apply,
    combs_equal,
    compose_combs,
    discard_output_comb,
    identity_comb,
    mix_combs,
    permutation_comb,
    set_input_comb,
    swap_comb,
)
from .ontology import OntComb, OnticExtensionDist, apply_ont, canonical_lift, trivial_extension
from .system import ConstraintSystem
from .solver import InfeasibilityCertificate, Witness, solve, verify
from .experiment import Equation, Experiment, LambdaConfig, Scenario, Side, Variable, annotate
from .finetune import (
    FINE_TUNED,
    NO_FINE_TUNING,
    Verdict,
    check_bell_local_causality,
    check_equations,
    check_no_fine_tuning,
    check_operational_equation,
    check_parameter_independence_only,
    check_preparation_noncontextuality,
    check_scenario,
    check_time_symmetry,
)

__version__ = "0.1.0"
