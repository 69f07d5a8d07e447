"""Deciding whether an operational equation is fine tuned.

An equation ``f0(E) == f1(E')`` between processed statistics is *not* fine
tuned under a set of assumptions when ontic extensions of ``E`` and ``E'``
exist, satisfying the assumptions, whose canonical lifts obey the same
equation at the ontic level. Everything is compiled into one linear system
and handed to the exact solver.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .assumptions import (
    MEASUREMENT_INDEPENDENCE,
    OUTCOME_INDEPENDENCE,
    PARAMETER_INDEPENDENCE,
    LAMBDA_MEDIATION,
    FreeModel,
    StrategyModel,
    _add,
    normalize_assumptions,
    numeric_ext,
    symbolic_apply,
)
from .combs import (
    Comb,
    apply,
    compose_combs,
    discard_output_comb,
    identity_comb,
    is_trivial_permutation,
    set_input_comb,
    swap_comb,
)
from .errors import PremiseFailed, ShapeMismatch, UnsupportedCombination
from .experiment import (
    MEASUREMENT,
    Equation,
    Experiment,
    LambdaConfig,
    Side,
    annotate,
)
from .ontology import (
    OnticExtensionDist,
    apply_ont,
    canonical_lift,
    check_ontic_extension_condition,
    check_sufficient_statistics,
    ontic_space,
)
from .prob import CondDist, FiniteSpace, differing_cells, dist_equal
from .solver import FeasibilityVerdict, Witness, solve, verify
from .system import ConstraintSystem

NO_FINE_TUNING = "NO-FINE-TUNING"
FINE_TUNED = "FINE-TUNED"
DEFAULT_MAX_LAMBDA_PERM = 8

CAVEAT = (
    "verdict holds for the stated assumptions and ontic parametrization; "
    "FINE-TUNED means no ontic extension of this form mirrors the equation"
)


def max_lambda_perm() -> int:
    return int(os.environ.get("OPFT_MAX_LAMBDA_PERM", DEFAULT_MAX_LAMBDA_PERM))


def check_operational_equation(E: CondDist, Ep: CondDist, f0: Comb, f1: Comb) -> bool:
    return dist_equal(apply(f0, E), apply(f1, Ep))


def _premise(eq: Equation) -> None:
    left = apply(eq.lhs.comb, eq.lhs.experiment.dist)
    right = apply(eq.rhs.comb, eq.rhs.experiment.dist)
    if left.input != right.input or left.output != right.output:
        raise PremiseFailed(
            f"equation {eq.label!r}: the two sides land on different spaces "
            f"({left.output.names}|{left.input.names} vs {right.output.names}|{right.input.names})",
            [],
        )
    cells = differing_cells(left, right)
    if cells:
        raise PremiseFailed(
            f"equation {eq.label!r} does not hold operationally ({len(cells)} differing entries)",
            cells,
        )


@dataclass
class Compiled:
    system: ConstraintSystem
    models: dict
    Lam: FiniteSpace
    lifts: list
    k: Optional[tuple]


def _experiments(equations) -> dict:
    found = {}
    for eq in equations:
        for side in (eq.lhs, eq.rhs):
            E = side.experiment
            prev = found.get(E.label)
            if prev is not None and prev is not E and not dist_equal(prev.dist, E.dist):
                raise ShapeMismatch(f"two different experiments share the label {E.label!r}")
            found.setdefault(E.label, E)
    return found


def build_models(experiments: dict, assumptions, lam: LambdaConfig) -> dict:
    assumptions = normalize_assumptions(assumptions)
    models = {}
    for label, E in experiments.items():
        if lam.mode == "stochastic":
            models[label] = FreeModel(E, lam.size, assumptions)
        elif lam.mode == "planted":
            if label not in lam.strategies:
                raise ShapeMismatch(f"no planted strategies for experiment {label!r}")
            models[label] = StrategyModel(E, assumptions, lam.strategies[label])
        else:
            models[label] = StrategyModel(E, assumptions)
    sizes = {m.Lam.size for m in models.values()}
    if len(sizes) > 1:
        detail = ", ".join(f"{l}:{m.Lam.size}" for l, m in models.items())
        raise ShapeMismatch(f"experiments in one check need ontic spaces of equal size ({detail})")
    return models


def inverse(k: Sequence[int]) -> tuple:
    inv = [0] * len(k)
    for i, j in enumerate(k):
        inv[j] = i
    return tuple(inv)


def compile_equations(
    equations: Sequence[Equation],
    assumptions,
    lam: LambdaConfig,
    k: Optional[Sequence[int]] = None,
    models: Optional[dict] = None,
) -> Compiled:
    """Reproduction + assumption rows + the ontic image of every equation.

    ``k`` is the ontic relabeling paired with permutations: the mirrored side
    must satisfy ``ext_E(., lam) = ext_E'(., k(lam))``, which is what the lift
    with kernel ``k^-1`` on permutation leaves expresses.
    """
    if models is None:
        models = build_models(_experiments(equations), assumptions, lam)
    Lam = ontic_space(next(iter(models.values())).Lam.size)
    system = ConstraintSystem()
    for model in models.values():
        system.extend(model.reproduction())
        system.extend(model.structural())
    lift_k = None if k is None else inverse(k)
    lifts = []
    for eq in equations:
        h0 = canonical_lift(eq.lhs.comb, Lam, lift_k)
        h1 = canonical_lift(eq.rhs.comb, Lam, lift_k)
        lifts.append((h0, h1))
        left = symbolic_apply(h0, models[eq.lhs.experiment.label].ext)
        right = symbolic_apply(h1, models[eq.rhs.experiment.label].ext)
        U, R = h0.U.concat(h0.Omega), h0.R
        for key in sorted(set(left) | set(right)):
            expr = dict(left.get(key, {}))
            _add(expr, right.get(key, {}), -1)
            uw, r = key
            system.add_eq(
                expr, 0,
                f"nft[{eq.label}:{U.label(U.assignment(uw))}|{R.label(R.assignment(r)) if len(R) else '-'}]",
            )
    return Compiled(system, models, Lam, lifts, None if k is None else tuple(k))


def _has_permutation(f: Comb) -> bool:
    kind = f.origin[0]
    if kind == "permutation":
        return not is_trivial_permutation(f)
    if kind == "compose":
        return _has_permutation(f.origin[1]) or _has_permutation(f.origin[2])
    if kind == "mix":
        return _has_permutation(f.origin[2]) or _has_permutation(f.origin[3])
    return False


def _matching_k(eq: Equation, models: dict) -> Optional[tuple]:
    """Relabeling pairing each strategy of the plain side with its mirror image.

    When weights do not depend on any setting, a strategy with positive weight
    must equal the mirror of its partner everywhere, so this ``k`` alone is
    decisive when it exists.
    """
    ml, mr = models[eq.lhs.experiment.label], models[eq.rhs.experiment.label]
    El, Er = ml.experiment, mr.experiment
    images = {}
    for mu in range(mr.size):
        det = CondDist.deterministic(Er.S, Er.T, lambda s, mu=mu: mr.response(mu, s))
        key = apply(eq.rhs.comb, det).columns
        images.setdefault(tuple(map(tuple, key)), []).append(mu)
    k = []
    for lam in range(ml.size):
        det = CondDist.deterministic(El.S, El.T, lambda s, lam=lam: ml.response(lam, s))
        hits = images.get(tuple(map(tuple, apply(eq.lhs.comb, det).columns)), [])
        if len(hits) != 1:
            return None
        k.append(hits[0])
    return tuple(k) if sorted(k) == list(range(mr.size)) else None


def candidate_ks(equations, models, lam: LambdaConfig):
    """Relabelings to try, in order.

    Returns ``(ks, exhaustive)``; ``[None]`` when no permutation is involved.
    """
    if lam.k is not None:
        return [tuple(lam.k)], False
    if not any(_has_permutation(eq.lhs.comb) or _has_permutation(eq.rhs.comb) for eq in equations):
        return [None], True
    n = next(iter(models.values())).Lam.size
    if n == 1:
        return [(0,)], True
    if len(equations) == 1:
        eq = equations[0]
        plain = eq.lhs.comb.origin[0] == "identity" and eq.rhs.comb.origin[0] == "permutation"
        distinct = eq.lhs.experiment.label != eq.rhs.experiment.label
        unweighted = all(
            isinstance(m, StrategyModel) and not m.weight_vars for m in models.values()
        )
        if plain and distinct and unweighted:
            k = _matching_k(eq, models)
            if k is not None:
                return [k], True
        if plain and distinct and lam.mode == "stochastic":
            # free tables of distinct experiments: relabeling one side is a symmetry
            return [tuple(range(n))], True
    if n > max_lambda_perm():
        raise UnsupportedCombination(
            f"searching {math.factorial(n)} ontic relabelings exceeds OPFT_MAX_LAMBDA_PERM={max_lambda_perm()}; "
            "pin k in the lambda configuration"
        )
    return list(itertools.permutations(range(n))), True


@dataclass
class Attempt:
    k: Optional[tuple]
    system: ConstraintSystem
    verdict: FeasibilityVerdict


@dataclass
class Verdict:
    fine_tuned: bool
    assumptions: tuple
    lam: LambdaConfig
    attempts: list
    equations: list
    k: Optional[tuple] = None
    lifts: list = field(default_factory=list)
    extensions: dict = field(default_factory=dict)
    caveat: str = CAVEAT

    @property
    def label(self) -> str:
        return FINE_TUNED if self.fine_tuned else NO_FINE_TUNING

    @property
    def system(self) -> ConstraintSystem:
        return self.attempts[-1].system

    @property
    def verdict(self) -> FeasibilityVerdict:
        return self.attempts[-1].verdict

    @property
    def witness(self) -> Optional[Witness]:
        return None if self.fine_tuned else self.verdict

    @property
    def certificates(self) -> list:
        return [a.verdict for a in self.attempts] if self.fine_tuned else []

    def verify(self) -> bool:
        return all(verify(a.system, a.verdict) for a in self.attempts)

    def summary(self) -> str:
        names = ",".join(self.assumptions) or "none"
        line = f"{self.label} assumptions={names} lambda={self.lam.describe()}"
        if self.k is not None and not self.fine_tuned:
            line += f" k={','.join(map(str, self.k))}"
        if self.fine_tuned and len(self.attempts) > 1:
            line += f" relabelings_tried={len(self.attempts)}"
        return line


def _validate_witness(compiled: Compiled, equations, values) -> dict:
    """Rebuild the extensions and re-check every consistency condition."""
    exts = {}
    for label, model in compiled.models.items():
        joint = numeric_ext(model, values)
        exts[label] = OnticExtensionDist(model.experiment.dist, compiled.Lam, joint)
    for eq, (h0, h1) in zip(equations, compiled.lifts):
        for side, h in ((eq.lhs, h0), (eq.rhs, h1)):
            if not check_ontic_extension_condition(h, side.comb):
                raise AssertionError(f"lift of {side.comb.name} is not an ontic extension of it")
            if not check_sufficient_statistics(h, [exts[side.experiment.label]]):
                raise AssertionError(f"lift of {side.comb.name} loses ontic information")
        a = apply_ont(h0, exts[eq.lhs.experiment.label])
        b = apply_ont(h1, exts[eq.rhs.experiment.label])
        if not dist_equal(a.joint, b.joint):
            raise AssertionError(f"witness violates the ontic image of {eq.label!r}")
        if not dist_equal(a.base, apply(eq.lhs.comb, eq.lhs.experiment.dist)):
            raise AssertionError(f"witness does not marginalize onto {eq.label!r}")
    return exts


def check_equations(
    equations: Sequence[Equation],
    assumptions: Sequence[str],
    lam: LambdaConfig,
) -> Verdict:
    equations = list(equations)
    if not equations:
        raise ShapeMismatch("nothing to check: no equations")
    assumptions = normalize_assumptions(assumptions)
    lam = lam.resolve(assumptions)
    for eq in equations:
        _premise(eq)
    models = build_models(_experiments(equations), assumptions, lam)
    ks, _ = candidate_ks(equations, models, lam)
    attempts = []
    for k in ks:
        compiled = compile_equations(equations, assumptions, lam, k, models)
        result = solve(compiled.system)
        attempts.append(Attempt(compiled.k, compiled.system, result))
        if result.feasible:
            exts = _validate_witness(compiled, equations, result.values)
            return Verdict(
                False, assumptions, lam, attempts, equations,
                k=compiled.k, lifts=compiled.lifts, extensions=exts, caveat=_caveat(assumptions, lam),
            )
    return Verdict(True, assumptions, lam, attempts, equations, caveat=_caveat(assumptions, lam))


def _caveat(assumptions, lam: LambdaConfig) -> str:
    if lam.mode != "stochastic" and not {OUTCOME_INDEPENDENCE, LAMBDA_MEDIATION} & set(assumptions):
        return CAVEAT + "; deterministic responses additionally impose outcome determinism"
    return CAVEAT


def check_no_fine_tuning(
    E: Experiment,
    Ep: Experiment,
    f0: Comb,
    f1: Comb,
    assumptions: Sequence[str],
    lam: LambdaConfig,
) -> Verdict:
    """Single-equation form; ``lam`` must be given explicitly."""
    if not isinstance(lam, LambdaConfig):
        raise TypeError("check_no_fine_tuning needs an explicit LambdaConfig")
    return check_equations([Equation(Side(E, f0), Side(Ep, f1))], assumptions, lam)


# ---- wrappers for the standard reductions -------------------------------


def check_scenario(scenario, assumptions=None, lam: Optional[LambdaConfig] = None) -> Verdict:
    return check_equations(
        scenario.equations,
        scenario.assumptions if assumptions is None else assumptions,
        scenario.lam if lam is None else lam,
    )


def check_preparation_noncontextuality(scenario, lam: Optional[LambdaConfig] = None) -> Verdict:
    return check_equations(
        scenario.equations, (LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE), lam or LambdaConfig()
    )


BELL_STAGES = {"x": MEASUREMENT, "y": MEASUREMENT, "a": MEASUREMENT, "b": MEASUREMENT}
BELL_PARTIES = {"x": "A", "a": "A", "y": "B", "b": "B"}


def bell_experiment(box, label: str = "E") -> Experiment:
    if isinstance(box, Experiment):
        return box
    if box.input.names != ("x", "y") or box.output.names != ("a", "b"):
        raise ShapeMismatch("a Bell box is p(a, b|x, y)")
    return annotate(label, box, BELL_STAGES, BELL_PARTIES)


def no_signaling_equations(experiment: Experiment) -> list:
    """Each party's marginal must not depend on the other party's setting."""
    S, T = experiment.S, experiment.T
    eqs = []
    for own_out, other_in in (("a", "y"), ("b", "x")):
        others = [o for o in T.names if o != own_out]
        f = {}
        for v in range(S.card(other_in)):
            sel = set_input_comb(S, T, other_in, v)
            f[v] = compose_combs(discard_output_comb(sel.R, sel.U, others), sel)
        for v in range(1, S.card(other_in)):
            eqs.append(
                Equation(
                    Side(experiment, f[0], _ns_spec(other_in, 0, others)),
                    Side(experiment, f[v], _ns_spec(other_in, v, others)),
                    f"{own_out}:{other_in}=0~{other_in}={v}",
                )
            )
    return eqs


def _ns_spec(var, value, discard):
    return {
        "op": "compose",
        "steps": [{"op": "set_input", "var": var, "value": value}, {"op": "discard", "vars": list(discard)}],
    }


def check_bell_local_causality(box, lam: Optional[LambdaConfig] = None) -> Verdict:
    E = bell_experiment(box)
    return check_equations(
        no_signaling_equations(E),
        (PARAMETER_INDEPENDENCE, OUTCOME_INDEPENDENCE, MEASUREMENT_INDEPENDENCE),
        lam or LambdaConfig(),
    )


def check_parameter_independence_only(box, lam: Optional[LambdaConfig] = None) -> Verdict:
    """Parameter independence without outcome independence.

    Deterministic responses would force outcome independence too, so this runs
    over free joint tables (two ontic states unless told otherwise).
    """
    E = bell_experiment(box)
    return check_equations(
        no_signaling_equations(E),
        (PARAMETER_INDEPENDENCE, MEASUREMENT_INDEPENDENCE),
        lam or LambdaConfig("stochastic", 2),
    )


def time_symmetry_equation(E: Experiment, Ep: Experiment) -> Equation:
    return Equation(
        Side(E, identity_comb(E.S, E.T), {"op": "identity"}),
        Side(Ep, swap_comb(Ep.S, Ep.T), {"op": "swap"}),
        "time-symmetry",
    )


def check_time_symmetry(
    E: Experiment,
    Ep: Experiment,
    lam: Optional[LambdaConfig] = None,
    assumptions: Sequence[str] = (),
) -> Verdict:
    """Defaults to two free ontic states: enumerating strategies would leave
    too many relabelings to search."""
    lam = lam or LambdaConfig("stochastic", 2)
    return check_equations([time_symmetry_equation(E, Ep)], assumptions, lam)
