"""Experiments with role-annotated variables, and the equations between them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .combs import (
    Comb,
    compose_combs,
    discard_output_comb,
    identity_comb,
    mix_combs,
    permutation_comb,
    set_input_comb,
    swap_comb,
)
from .errors import ParseError, ShapeMismatch
from .prob import CondDist, FiniteSpace, to_rational

CONTROLLED = "controlled"
OBSERVED = "observed"
PREPARATION = "preparation"
MEASUREMENT = "measurement"


@dataclass(frozen=True)
class Variable:
    name: str
    cardinality: int
    role: str
    stage: Optional[str] = None
    party: Optional[str] = None

    def __post_init__(self):
        if self.role not in (CONTROLLED, OBSERVED):
            raise ShapeMismatch(f"variable {self.name!r}: role must be controlled or observed")
        if self.stage not in (None, PREPARATION, MEASUREMENT):
            raise ShapeMismatch(f"variable {self.name!r}: unknown stage {self.stage!r}")


@dataclass(frozen=True, eq=False)
class Experiment:
    label: str
    dist: CondDist
    variables: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        by_name = {v.name: v for v in self.variables}
        if len(by_name) != len(self.variables):
            raise ShapeMismatch(f"experiment {self.label!r} declares a variable twice")
        for space, role in ((self.dist.input, CONTROLLED), (self.dist.output, OBSERVED)):
            for name, card in space.variables:
                v = by_name.get(name)
                if v is None or v.role != role or v.cardinality != card:
                    raise ShapeMismatch(
                        f"experiment {self.label!r}: {name!r} must be declared {role} with cardinality {card}"
                    )
        if len(by_name) != len(self.dist.input) + len(self.dist.output):
            raise ShapeMismatch(f"experiment {self.label!r} declares unused variables")

    def var(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def S(self) -> FiniteSpace:
        return self.dist.input

    @property
    def T(self) -> FiniteSpace:
        return self.dist.output

    def controlled(self, stage=None) -> tuple:
        return tuple(n for n in self.S.names if stage is None or self.var(n).stage == stage)

    def observed(self, stage=None) -> tuple:
        return tuple(n for n in self.T.names if stage is None or self.var(n).stage == stage)

    def __repr__(self):
        return f"Experiment({self.label!r}, {self.dist!r})"


def annotate(label: str, dist: CondDist, stages=None, parties=None) -> Experiment:
    """Wrap ``dist`` as an experiment; ``stages``/``parties`` map names to tags."""
    stages = stages or {}
    parties = parties or {}
    variables = [
        Variable(n, c, CONTROLLED, stages.get(n), parties.get(n)) for n, c in dist.input.variables
    ] + [Variable(n, c, OBSERVED, stages.get(n), parties.get(n)) for n, c in dist.output.variables]
    return Experiment(label, dist, tuple(variables))


@dataclass(frozen=True)
class Side:
    experiment: Experiment
    comb: Comb
    spec: Optional[dict] = None

    def __post_init__(self):
        if self.comb.S != self.experiment.S or self.comb.T != self.experiment.T:
            raise ShapeMismatch(
                f"{self.comb!r} does not act on experiment {self.experiment.label!r}"
            )


@dataclass(frozen=True)
class Equation:
    lhs: Side
    rhs: Side
    label: str = "eq"


@dataclass(frozen=True)
class LambdaConfig:
    """How the ontic space is parametrized.

    ``deterministic``: every response function allowed by the assumptions.
    ``stochastic``: ``size`` ontic states with unrestricted joint tables.
    ``planted``: a fixed list of response functions per experiment label.
    ``auto``: deterministic when outcome independence or lambda-mediation is
    assumed (there deterministic responses lose nothing), otherwise a single
    free ontic state, which already decides every remaining assumption set.
    ``k`` optionally pins the ontic relabeling used for permutations.
    """

    mode: str = "auto"
    size: Optional[int] = None
    strategies: Optional[dict] = None
    k: Optional[tuple] = None

    def __post_init__(self):
        if self.mode not in ("auto", "deterministic", "stochastic", "planted"):
            raise ParseError(f"unknown lambda mode {self.mode!r}")
        if self.mode == "stochastic" and (self.size is None or self.size < 1):
            raise ParseError("stochastic lambda mode needs a positive size")
        if self.mode == "planted" and not self.strategies:
            raise ParseError("planted lambda mode needs strategies")

    def resolve(self, assumptions) -> "LambdaConfig":
        if self.mode != "auto":
            return self
        if {"outcome-independence", "lambda-mediation"} & set(assumptions):
            return LambdaConfig("deterministic", k=self.k)
        return LambdaConfig("stochastic", 1, k=self.k)

    def describe(self) -> str:
        if self.mode == "stochastic":
            return f"stochastic:{self.size}"
        if self.mode == "planted":
            sizes = ",".join(f"{k}={len(v)}" for k, v in sorted(self.strategies.items()))
            return f"planted:{sizes}"
        return self.mode


@dataclass
class Scenario:
    name: str
    experiments: dict
    equations: list
    assumptions: tuple = ()
    lam: LambdaConfig = field(default_factory=LambdaConfig)
    description: str = ""
    functor: Optional[dict] = None


def build_comb(spec: dict, S: FiniteSpace, T: FiniteSpace) -> Comb:
    """Comb from its JSON-style description, acting on ``p(T|S)``."""
    if not isinstance(spec, dict) or "op" not in spec:
        raise ParseError(f"comb spec must be an object with an 'op': {spec!r}")
    op = spec["op"]
    allowed = {
        "identity": {"op", "corr"},
        "swap": {"op"},
        "permutation": {"op", "inputs", "outputs"},
        "set_input": {"op", "var", "value"},
        "discard": {"op", "vars"},
        "compose": {"op", "steps"},
        "mix": {"op", "sigma", "first", "second"},
    }
    if op not in allowed:
        raise ParseError(f"unknown comb op {op!r}; valid ops: {sorted(allowed)}")
    extra = set(spec) - allowed[op]
    if extra:
        raise ParseError(f"unknown fields {sorted(extra)} in {op} comb")
    try:
        if op == "identity":
            return identity_comb(S, T, int(spec.get("corr", 1)))
        if op == "swap":
            return swap_comb(S, T)
        if op == "permutation":
            return permutation_comb(S, T, spec["inputs"], spec["outputs"])
        if op == "set_input":
            return set_input_comb(S, T, spec["var"], int(spec["value"]))
        if op == "discard":
            return discard_output_comb(S, T, spec["vars"])
        if op == "compose":
            steps = spec["steps"]
            if not steps:
                raise ParseError("compose needs at least one step")
            f = build_comb(steps[0], S, T)
            for step in steps[1:]:
                g = build_comb(step, f.R, f.U)
                f = compose_combs(g, f)
            return f
        first = build_comb(spec["first"], S, T)
        second = build_comb(spec["second"], S, T)
        return mix_combs(to_rational(spec["sigma"]), first, second)
    except KeyError as exc:
        raise ParseError(f"{op} comb is missing field {exc}") from None


def side(experiment: Experiment, spec: dict) -> Side:
    return Side(experiment, build_comb(spec, experiment.S, experiment.T), spec)
