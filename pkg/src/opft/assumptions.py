"""Ontic models of an experiment and the linear constraints they must obey.

Two parametrizations of ``p(t, lam|s)`` are offered:

* ``StrategyModel``: ``lam`` ranges over deterministic response functions and
  the unknowns are weights ``w[label:W:lK]`` with ``W`` the controlled
  variables the weight may depend on. Causal assumptions prune the domains of
  the response functions or the index ``W``.
* ``FreeModel``: a fixed number of ontic states and one unknown per cell of
  the joint table. Only assumptions that stay linear are accepted.

Both expose ``ext``: the joint table as linear expressions in the unknowns,
keyed by ``(t * |Lam| + lam, s)``.
"""

from __future__ import annotations

import itertools
import os
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    NotOperationallyEquivalent,
    NotOperationallyTimeSymmetric,
    ParseError,
    ShapeMismatch,
    UnsupportedCombination,
)
from .experiment import MEASUREMENT, PREPARATION, Experiment
from .ontology import OntComb, ont_transfer, ontic_space
from .prob import ZERO, CondDist, FiniteSpace, to_rational
from .system import ConstraintSystem

LAMBDA_MEDIATION = "lambda-mediation"
MEASUREMENT_INDEPENDENCE = "measurement-independence"
PARAMETER_INDEPENDENCE = "parameter-independence"
OUTCOME_INDEPENDENCE = "outcome-independence"
ASSUMPTIONS = (
    LAMBDA_MEDIATION,
    MEASUREMENT_INDEPENDENCE,
    PARAMETER_INDEPENDENCE,
    OUTCOME_INDEPENDENCE,
)

DEFAULT_MAX_STRATEGIES = 100_000


def normalize_assumptions(names: Iterable[str]) -> tuple:
    """Validated, de-duplicated, in canonical order."""
    names = set(names)
    unknown = names - set(ASSUMPTIONS)
    if unknown:
        raise ParseError(
            f"unknown assumption(s) {sorted(unknown)}; valid names: {', '.join(ASSUMPTIONS)}"
        )
    return tuple(a for a in ASSUMPTIONS if a in names)


def max_strategies() -> int:
    return int(os.environ.get("OPFT_MAX_STRATEGIES", DEFAULT_MAX_STRATEGIES))


def _stage(experiment: Experiment, name: str, default=None) -> Optional[str]:
    return experiment.var(name).stage or default


def _require_stages(experiment: Experiment, what: str) -> None:
    untagged = [n for n in experiment.S.names if experiment.var(n).stage is None]
    if untagged:
        raise ShapeMismatch(
            f"{what} needs preparation/measurement tags on controlled variables; "
            f"{experiment.label!r} leaves {untagged} untagged"
        )


def _require_parties(experiment: Experiment, what: str) -> list:
    untagged = [v.name for v in experiment.variables if v.party is None]
    if untagged:
        raise ShapeMismatch(f"{what} needs a party on every variable; missing on {untagged}")
    parties = sorted({v.party for v in experiment.variables})
    if len(parties) < 2:
        raise ShapeMismatch(f"{what} needs at least two parties")
    return parties


def _label(space: FiniteSpace, assignment) -> str:
    return space.label(assignment) if len(space) else "-"


def _add(expr: dict, other: Mapping, scale=1) -> None:
    for name, c in other.items():
        v = expr.get(name, ZERO) + scale * c
        if v:
            expr[name] = v
        else:
            expr.pop(name, None)


class StrategyModel:
    """Mixtures of deterministic response functions.

    ``domains[o]`` lists the controlled variables the response for observed
    variable ``o`` may read; ``weight_vars`` those the weights may depend on.
    Outcome independence is automatic: responses are point distributions.
    """

    kind = "deterministic"

    def __init__(self, experiment: Experiment, assumptions: Iterable[str] = (), strategies=None):
        self.experiment = experiment
        self.assumptions = normalize_assumptions(assumptions)
        S, T = experiment.S, experiment.T
        a = set(self.assumptions)

        weight_vars = list(S.names)
        if MEASUREMENT_INDEPENDENCE in a:
            _require_stages(experiment, "measurement independence")
            weight_vars = [n for n in S.names if _stage(experiment, n) == PREPARATION]
        self.weight_vars = tuple(weight_vars)

        if LAMBDA_MEDIATION in a:
            _require_stages(experiment, "lambda-mediation")
        if PARAMETER_INDEPENDENCE in a:
            _require_parties(experiment, "parameter independence")
        domains = {}
        for o in T.names:
            dom = list(S.names)
            o_stage = _stage(experiment, o, MEASUREMENT)
            if LAMBDA_MEDIATION in a and o_stage == MEASUREMENT:
                dom = [n for n in dom if _stage(experiment, n) != PREPARATION]
            if MEASUREMENT_INDEPENDENCE in a and o_stage == PREPARATION:
                dom = [n for n in dom if _stage(experiment, n) != MEASUREMENT]
            if PARAMETER_INDEPENDENCE in a:
                party = experiment.var(o).party
                dom = [n for n in dom if experiment.var(n).party == party]
            domains[o] = tuple(dom)
        self.domains = domains
        self.domain_spaces = {o: S.keep(d) for o, d in domains.items()}

        if strategies is None:
            count = 1
            for o in T.names:
                count *= T.card(o) ** self.domain_spaces[o].size
            if count > max_strategies():
                raise UnsupportedCombination(
                    f"{count} deterministic strategies for {experiment.label!r} exceed "
                    f"OPFT_MAX_STRATEGIES={max_strategies()}"
                )
            per_var = [
                itertools.product(range(T.card(o)), repeat=self.domain_spaces[o].size)
                for o in T.names
            ]
            self.strategies = tuple(itertools.product(*per_var))
        else:
            self.strategies = tuple(self._planted(s) for s in strategies)
            if not self.strategies:
                raise ShapeMismatch("a planted model needs at least one strategy")
        self.Lam = ontic_space(len(self.strategies))
        self.W = S.keep(self.weight_vars)
        self._ext = None

    def _planted(self, strategy) -> tuple:
        T = self.experiment.T
        if isinstance(strategy, Mapping):
            strategy = [strategy[o] for o in T.names]
        out = []
        for o, table in zip(T.names, strategy):
            table = tuple(int(v) for v in table)
            if len(table) != self.domain_spaces[o].size or not all(0 <= v < T.card(o) for v in table):
                raise ShapeMismatch(
                    f"planted response for {o!r} must list {self.domain_spaces[o].size} values in range"
                )
            out.append(table)
        if len(out) != len(T.names):
            raise ShapeMismatch("planted strategy must give one response table per observed variable")
        return tuple(out)

    @property
    def size(self) -> int:
        return len(self.strategies)

    def unknown(self, w_index: int, lam: int) -> str:
        parts = [self.experiment.label]
        if len(self.W):
            parts.append(self.W.label(self.W.assignment(w_index)))
        parts.append(f"l{lam}")
        return "w[" + ":".join(parts) + "]"

    def unknowns(self) -> list:
        return [self.unknown(w, lam) for w in range(self.W.size) for lam in range(self.size)]

    def response(self, lam: int, s: Sequence[int]) -> tuple:
        S = self.experiment.S
        strat = self.strategies[lam]
        return tuple(
            strat[i][self.domain_spaces[o].index(S.project(s, self.domains[o]))]
            for i, o in enumerate(self.experiment.T.names)
        )

    @property
    def ext(self) -> dict:
        if self._ext is None:
            S, T = self.experiment.S, self.experiment.T
            nl = self.size
            ext = {}
            for si, s in enumerate(S.assignments):
                wi = self.W.index(S.project(s, self.weight_vars))
                for lam in range(nl):
                    t = T.index(self.response(lam, s))
                    ext[(t * nl + lam, si)] = {self.unknown(wi, lam): 1}
            self._ext = ext
        return self._ext

    def reproduction(self) -> ConstraintSystem:
        """``sum_lam ext(t, lam|s) = p(t|s)`` for every cell."""
        return _reproduction(self)

    def structural(self) -> ConstraintSystem:
        """Nothing beyond reproduction: the assumptions are built into the parametrization."""
        return ConstraintSystem()

    def describe(self) -> str:
        doms = "; ".join(f"{o}<-({','.join(d)})" for o, d in self.domains.items())
        w = ",".join(self.weight_vars) or "-"
        return f"{self.size} strategies [{doms}], weights indexed by ({w})"


class FreeModel:
    """``size`` ontic states with one unknown per joint cell ``q[label:t:lK|s]``."""

    kind = "stochastic"

    def __init__(self, experiment: Experiment, size: int, assumptions: Iterable[str] = ()):
        self.experiment = experiment
        self.assumptions = normalize_assumptions(assumptions)
        a = set(self.assumptions)
        bad = a & {LAMBDA_MEDIATION, OUTCOME_INDEPENDENCE}
        if bad:
            raise UnsupportedCombination(
                f"{sorted(bad)} are not linear over a free joint table; use deterministic strategies"
            )
        if PARAMETER_INDEPENDENCE in a and MEASUREMENT_INDEPENDENCE not in a:
            raise UnsupportedCombination(
                "parameter independence over a free joint table is linear only together with "
                "measurement independence"
            )
        if MEASUREMENT_INDEPENDENCE in a:
            _require_stages(experiment, "measurement independence")
        if PARAMETER_INDEPENDENCE in a:
            _require_parties(experiment, "parameter independence")
        self.size = int(size)
        self.Lam = ontic_space(self.size)
        self._ext = None

    def unknown(self, t: int, lam: int, s: int) -> str:
        S, T = self.experiment.S, self.experiment.T
        return (
            f"q[{self.experiment.label}:{_label(T, T.assignment(t))}:l{lam}"
            f"|{_label(S, S.assignment(s))}]"
        )

    def unknowns(self) -> list:
        S, T = self.experiment.S, self.experiment.T
        return [
            self.unknown(t, lam, s)
            for s in range(S.size)
            for t in range(T.size)
            for lam in range(self.size)
        ]

    @property
    def ext(self) -> dict:
        if self._ext is None:
            nl = self.size
            self._ext = {
                (t * nl + lam, s): {self.unknown(t, lam, s): 1}
                for s in range(self.experiment.S.size)
                for t in range(self.experiment.T.size)
                for lam in range(nl)
            }
        return self._ext

    def reproduction(self) -> ConstraintSystem:
        return _reproduction(self)

    def structural(self) -> ConstraintSystem:
        system = ConstraintSystem(self.unknowns())
        a = set(self.assumptions)
        if MEASUREMENT_INDEPENDENCE in a:
            system.extend(_free_measurement_independence(self))
        if PARAMETER_INDEPENDENCE in a:
            system.extend(_free_parameter_independence(self))
        return system

    def describe(self) -> str:
        return f"{self.size} free ontic states"


def _reproduction(model) -> ConstraintSystem:
    E = model.experiment
    S, T = E.S, E.T
    nl = model.Lam.size
    system = ConstraintSystem(model.unknowns())
    ext = model.ext
    for si in range(S.size):
        col = E.dist.columns[si]
        for t in range(T.size):
            expr = {}
            for lam in range(nl):
                _add(expr, ext.get((t * nl + lam, si), {}))
            system.add_eq(
                expr, col[t],
                f"rep[{E.label}:{_label(T, T.assignment(t))}|{_label(S, S.assignment(si))}]",
            )
    return system


def _marginal_expr(model, s: int, lam: int, keep_t=None) -> dict:
    """``sum_t ext(t, lam|s)`` over the ``t`` accepted by ``keep_t``."""
    nl = model.Lam.size
    expr = {}
    for t in range(model.experiment.T.size):
        if keep_t is None or keep_t(t):
            _add(expr, model.ext.get((t * nl + lam, s), {}))
    return expr


def _free_measurement_independence(model: FreeModel) -> ConstraintSystem:
    E = model.experiment
    S = E.S
    meas = [n for n in S.names if E.var(n).stage == MEASUREMENT]
    system = ConstraintSystem(model.unknowns())
    for si, s in enumerate(S.assignments):
        if all(S.project(s, meas)[i] == 0 for i in range(len(meas))):
            continue
        base = list(s)
        for n in meas:
            base[S.position(n)] = 0
        s0 = S.index(base)
        for lam in range(model.size):
            expr = _marginal_expr(model, si, lam)
            _add(expr, _marginal_expr(model, s0, lam), -1)
            system.add_eq(expr, 0, f"mi[{E.label}:l{lam}|{S.label(s)}]")
    return system


def _free_parameter_independence(model: FreeModel) -> ConstraintSystem:
    E = model.experiment
    S, T = E.S, E.T
    system = ConstraintSystem(model.unknowns())
    for party in _require_parties(E, "parameter independence"):
        outs = [n for n in T.names if E.var(n).party == party]
        others = [n for n in S.names if E.var(n).party != party]
        if not outs or not others:
            continue
        O = T.keep(outs)
        for si, s in enumerate(S.assignments):
            if all(v == 0 for v in S.project(s, others)):
                continue
            base = list(s)
            for n in others:
                base[S.position(n)] = 0
            s0 = S.index(base)
            for o in range(O.size):
                o_assign = O.assignment(o)

                def match(t, o_assign=o_assign):
                    return T.project(T.assignment(t), outs) == o_assign

                for lam in range(model.size):
                    expr = _marginal_expr(model, si, lam, match)
                    _add(expr, _marginal_expr(model, s0, lam, match), -1)
                    system.add_eq(
                        expr, 0, f"pi[{E.label}:{O.label(o_assign)}:l{lam}|{S.label(s)}]"
                    )
    return system


def symbolic_apply(h: OntComb, ext: Mapping) -> dict:
    """``apply_ont`` on a joint table of linear expressions: ``{(uw, r): expr}``."""
    out = {}
    for (uw, r, tl, s), coeff in ont_transfer(h).items():
        src = ext.get((tl, s))
        if src:
            expr = out.setdefault((uw, r), {})
            _add(expr, src, coeff)
    return out


def numeric_ext(model, values: Mapping) -> CondDist:
    """The joint ``p(t, lam|s)`` a solution assigns."""
    E = model.experiment
    nl = model.Lam.size
    n_out = E.T.size * nl
    cols = [[ZERO] * n_out for _ in range(E.S.size)]
    for (tl, s), expr in model.ext.items():
        cols[s][tl] = sum((c * values[name] for name, c in expr.items()), ZERO)
    return CondDist(E.S, E.T.concat(model.Lam), cols)


# ---- hand-coded fragments ------------------------------------------------


def _model_for(experiment, model, assumptions):
    if model is not None:
        if model.experiment is not experiment:
            raise ShapeMismatch("model belongs to a different experiment")
        return model
    return StrategyModel(experiment, assumptions)


def lambda_mediation(experiment: Experiment) -> ConstraintSystem:
    """Reproduction with measurement responses reading only measurement settings."""
    if not experiment.controlled(PREPARATION) or not experiment.controlled(MEASUREMENT):
        raise ShapeMismatch("lambda-mediation needs preparation and measurement settings")
    return StrategyModel(experiment, [LAMBDA_MEDIATION]).reproduction()


def measurement_independence(experiment: Experiment, model=None) -> ConstraintSystem:
    """Reproduction with weights indexed by preparation settings only.

    A supplied ``model`` whose weights read a measurement setting is rejected.
    """
    if model is None:
        model = StrategyModel(experiment, [MEASUREMENT_INDEPENDENCE])
    if isinstance(model, StrategyModel):
        _require_stages(experiment, "measurement independence")
        leaked = [n for n in model.weight_vars if experiment.var(n).stage == MEASUREMENT]
        if leaked:
            raise UnsupportedCombination(f"weights depend on measurement settings {leaked}")
        return model.reproduction()
    if MEASUREMENT_INDEPENDENCE not in model.assumptions:
        raise UnsupportedCombination("free model was built without measurement independence")
    return model.reproduction().extend(model.structural())


def _bell_shape(experiment: Experiment) -> None:
    parties = _require_parties(experiment, "a Bell fragment")
    for p in parties:
        if not any(experiment.var(n).party == p for n in experiment.S.names):
            raise ShapeMismatch(f"party {p!r} has no setting")
        if not any(experiment.var(n).party == p for n in experiment.T.names):
            raise ShapeMismatch(f"party {p!r} has no outcome")


def parameter_independence(experiment: Experiment, size: Optional[int] = None) -> ConstraintSystem:
    """Deterministic local responses, or with ``size`` the linear free-table form."""
    _bell_shape(experiment)
    if size is None:
        return StrategyModel(
            experiment, [PARAMETER_INDEPENDENCE, MEASUREMENT_INDEPENDENCE]
        ).reproduction()
    model = FreeModel(experiment, size, [PARAMETER_INDEPENDENCE, MEASUREMENT_INDEPENDENCE])
    return model.reproduction().extend(model.structural())


def outcome_independence(experiment: Experiment, size: Optional[int] = None) -> ConstraintSystem:
    """Vacuous for deterministic responses; not linear over a free table."""
    _bell_shape(experiment)
    if size is not None:
        raise UnsupportedCombination("outcome independence is bilinear over a free joint table")
    return ConstraintSystem()


def _prep_mixture(experiment: Experiment, mixture: Mapping) -> dict:
    P = experiment.S.keep(experiment.controlled(PREPARATION))
    out = {}
    for key, weight in mixture.items():
        idx = key if isinstance(key, int) else P.index(tuple(key))
        if not 0 <= idx < P.size:
            raise ShapeMismatch(f"preparation {key!r} out of range")
        out[idx] = out.get(idx, ZERO) + to_rational(weight)
    if sum(out.values(), ZERO) != 1 or any(v < 0 for v in out.values()):
        raise ShapeMismatch(f"preparation mixture {mixture!r} is not a probability vector")
    return out


def _mixture_terms(experiment: Experiment, mix: dict, m: Sequence[int]) -> list:
    """``[(s_index, weight)]`` for a preparation mixture at measurement setting ``m``."""
    S = experiment.S
    preps = experiment.controlled(PREPARATION)
    meas = experiment.controlled(MEASUREMENT)
    P = S.keep(preps)
    terms = []
    for p, w in mix.items():
        values = dict(zip(preps, P.assignment(p)))
        values.update(zip(meas, m))
        terms.append((S.index(tuple(values[n] for n in S.names)), w))
    return terms


def preparation_noncontextuality(
    experiment: Experiment, equivalences: Sequence, model=None
) -> ConstraintSystem:
    """Operationally equivalent preparation mixtures get equal ontic joints.

    ``equivalences`` holds pairs of mixtures ``{preparation: weight}`` with
    preparations given as index or assignment over the preparation variables.
    Each pair must first be operationally equivalent for every measurement.
    """
    _require_stages(experiment, "preparation noncontextuality")
    model = _model_for(experiment, model, [LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE])
    M = experiment.S.keep(experiment.controlled(MEASUREMENT))
    T = experiment.T
    nl = model.Lam.size
    system = model.reproduction().extend(model.structural())
    for n, (left, right) in enumerate(equivalences):
        left = _prep_mixture(experiment, left)
        right = _prep_mixture(experiment, right)
        for m in M.assignments:
            lt = _mixture_terms(experiment, left, m)
            rt = _mixture_terms(experiment, right, m)
            for t in range(T.size):
                lv = sum((w * experiment.dist.columns[s][t] for s, w in lt), ZERO)
                rv = sum((w * experiment.dist.columns[s][t] for s, w in rt), ZERO)
                if lv != rv:
                    raise NotOperationallyEquivalent(
                        f"equivalence {n}: p({_label(T, T.assignment(t))}|{_label(M, m)}) is "
                        f"{lv} vs {rv}"
                    )
        for m in M.assignments:
            lt = _mixture_terms(experiment, left, m)
            rt = _mixture_terms(experiment, right, m)
            for t in range(T.size):
                for lam in range(nl):
                    expr = {}
                    for s, w in lt:
                        _add(expr, model.ext.get((t * nl + lam, s), {}), w)
                    for s, w in rt:
                        _add(expr, model.ext.get((t * nl + lam, s), {}), -w)
                    system.add_eq(expr, 0, f"pnc[{n}:{_label(T, T.assignment(t))}:l{lam}|{_label(M, m)}]")
    return system


def _reverse_index(space: FiniteSpace, index: int) -> int:
    return space.index(tuple(reversed(space.assignment(index))))


def time_symmetry(model_e, model_ep, k: Optional[Sequence[int]] = None) -> ConstraintSystem:
    """``ext_E(u, lam|r) = ext_E'(reversed u, k(lam)|reversed r)`` for every cell.

    Both models must be built already (their parametrization fixes the
    assumptions); ``k`` defaults to the identity.
    """
    E, Ep = model_e.experiment, model_ep.experiment
    S, T = E.S, E.T
    rS = FiniteSpace(tuple(reversed(S.variables)))
    rT = FiniteSpace(tuple(reversed(T.variables)))
    if Ep.S.cards != rS.cards or Ep.T.cards != rT.cards:
        raise ShapeMismatch("the two experiments are not mirror images of each other")
    for s in range(S.size):
        for t in range(T.size):
            a = E.dist.columns[s][t]
            b = Ep.dist.columns[_reverse_index(S, s)][_reverse_index(T, t)]
            if a != b:
                raise NotOperationallyTimeSymmetric(
                    f"p_E({T.label(T.assignment(t))}|{S.label(S.assignment(s))}) = {a} but "
                    f"the mirrored entry of E' is {b}"
                )
    nl = model_e.Lam.size
    if model_ep.Lam.size != nl:
        raise ShapeMismatch("time symmetry needs ontic spaces of equal size")
    k = tuple(range(nl)) if k is None else tuple(k)
    if sorted(k) != list(range(nl)):
        raise ShapeMismatch(f"{k} is not a bijection of the ontic space")
    system = model_e.reproduction().extend(model_e.structural())
    system.extend(model_ep.reproduction()).extend(model_ep.structural())
    for s in range(S.size):
        rs = _reverse_index(S, s)
        for t in range(T.size):
            rt = _reverse_index(T, t)
            for lam in range(nl):
                expr = dict(model_e.ext.get((t * nl + lam, s), {}))
                _add(expr, model_ep.ext.get((rt * nl + k[lam], rs), {}), -1)
                system.add_eq(
                    expr, 0, f"ts[{T.label(T.assignment(t))}:l{lam}|{S.label(S.assignment(s))}]"
                )
    return system


def time_symmetry_candidates(model_e, model_ep) -> list:
    """``[(k, system)]`` for every bijection ``k`` of the ontic space."""
    n = model_e.Lam.size
    return [(k, time_symmetry(model_e, model_ep, k)) for k in itertools.permutations(range(n))]
