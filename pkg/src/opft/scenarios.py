"""Built-in scenarios with exact rational statistics."""

from __future__ import annotations

from fractions import Fraction

from .combs import apply, swap_comb
from .errors import AsymmetricParams, SigmaOutOfRange
from .experiment import (
    MEASUREMENT,
    PREPARATION,
    Equation,
    Experiment,
    LambdaConfig,
    Scenario,
    annotate,
    side,
)
from .finetune import (
    bell_experiment,
    no_signaling_equations,
    time_symmetry_equation,
)
from .assumptions import (
    LAMBDA_MEDIATION,
    MEASUREMENT_INDEPENDENCE,
    OUTCOME_INDEPENDENCE,
    PARAMETER_INDEPENDENCE,
)
from .prob import CondDist, FiniteSpace, dist_equal, make_cond_dist, to_rational

HALF = Fraction(1, 2)
BELL_IN = FiniteSpace.of(x=2, y=2)
BELL_OUT = FiniteSpace.of(a=2, b=2)
BELL_ASSUMPTIONS = (PARAMETER_INDEPENDENCE, OUTCOME_INDEPENDENCE, MEASUREMENT_INDEPENDENCE)
PNC_ASSUMPTIONS = (LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE)


def noisy_pr_box(v) -> CondDist:
    """``v`` PR box plus ``1 - v`` white noise."""
    v = to_rational(v)
    if not 0 <= v <= 1:
        raise SigmaOutOfRange(f"visibility {v} outside [0, 1]")
    entries = {}
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    pr = HALF if (a ^ b) == (x & y) else 0
                    entries[(a, b), (x, y)] = v * pr + (1 - v) / 4
    return make_cond_dist(BELL_IN, BELL_OUT, entries)


def chsh(d: CondDist) -> Fraction:
    """``sum_{xy} (-1)^{xy} E(x, y)`` with ``E`` the parity correlator."""
    total = Fraction(0)
    for x in range(2):
        for y in range(2):
            corr = sum(
                (-1) ** (a ^ b) * d((a, b), (x, y)) for a in range(2) for b in range(2)
            )
            total += (-1) ** (x * y) * corr
    return total


def bell_scenario(v, name=None) -> Scenario:
    E = bell_experiment(noisy_pr_box(v))
    return Scenario(
        name or f"noisy-pr-{to_rational(v).numerator}_{to_rational(v).denominator}",
        {E.label: E},
        no_signaling_equations(E),
        BELL_ASSUMPTIONS,
        LambdaConfig(),
        f"noisy PR box at visibility {to_rational(v)}; marginals must not depend on the remote setting",
    )


def signaling_scenario() -> Scenario:
    """Alice's outcome copies Bob's setting, so no-signaling fails operationally."""
    box = CondDist.deterministic(BELL_IN, BELL_OUT, lambda s: (s[1], 0))
    E = bell_experiment(box)
    return Scenario(
        "signaling-box", {E.label: E}, no_signaling_equations(E), BELL_ASSUMPTIONS, LambdaConfig(),
        "a box whose outcome a equals the remote setting y",
    )


# cos(60 n degrees) for n mod 6
_COS60 = (Fraction(1), HALF, -HALF, Fraction(-1), -HALF, HALF)

PREP_SPACE = FiniteSpace.of(r1=6, r2=3)
OUT_SPACE = FiniteSpace.of(u=2)


def _prep_measure(label: str, prob0) -> Experiment:
    """``p(u|r1, r2)`` from ``prob0(r1, r2) = p(u=0|r1, r2)``."""
    dist = CondDist.from_function(
        PREP_SPACE, OUT_SPACE, lambda u, s: prob0(*s) if u == (0,) else 1 - prob0(*s)
    )
    return annotate(label, dist, {"r1": PREPARATION, "r2": MEASUREMENT, "u": MEASUREMENT})


def trine_angle(r1: int) -> int:
    """Bloch angle of preparation ``r1`` in units of 60 degrees."""
    j, flipped = r1 % 3, r1 >= 3
    return (2 * j + (3 if flipped else 0)) % 6


PAIRS = ((0, 3), (1, 4), (2, 5))


def _equivalences(E: Experiment) -> list:
    mixes = [
        {
            "op": "mix",
            "sigma": "1/2",
            "first": {"op": "set_input", "var": "r1", "value": a},
            "second": {"op": "set_input", "var": "r1", "value": b},
        }
        for a, b in PAIRS
    ]
    eqs = []
    for i in range(3):
        for j in range(i + 1, 3):
            eqs.append(Equation(side(E, mixes[i]), side(E, mixes[j]), f"mix{i}~mix{j}"))
    return eqs


def trine_prep_scenario() -> Scenario:
    E = _prep_measure("P", lambda r1, r2: (1 + _COS60[(trine_angle(r1) - 2 * r2) % 6]) / 2)
    return Scenario(
        "trine", {"P": E}, _equivalences(E), PNC_ASSUMPTIONS, LambdaConfig(),
        "three qubit trine states and antipodes, measured in the trine bases; "
        "the three even antipodal mixtures coincide",
    )


# ontic states are bit pairs (z, x); measurement m reads z, x or z xor x
CLASSICAL_SUPPORTS = (
    ((0, 0), (0, 1)),  # z = 0
    ((0, 0), (1, 0)),  # x = 0
    ((0, 0), (1, 1)),  # z xor x = 0
    ((1, 0), (1, 1)),  # z = 1
    ((0, 1), (1, 1)),  # x = 1
    ((0, 1), (1, 0)),  # z xor x = 1
)


def classical_response(state, m: int) -> int:
    z, x = state
    return (z, x, z ^ x)[m]


def classical_control_model() -> dict:
    """The generating model: ``{r1: {strategy: weight}}`` with strategies as response triples."""
    model = {}
    for r1, support in enumerate(CLASSICAL_SUPPORTS):
        model[r1] = {tuple(classical_response(st, m) for m in range(3)): HALF for st in support}
    return model


def classical_control_scenario() -> Scenario:
    def prob0(r1, r2):
        support = CLASSICAL_SUPPORTS[r1]
        return Fraction(sum(1 for st in support if classical_response(st, r2) == 0), len(support))

    E = _prep_measure("P", prob0)
    return Scenario(
        "classical-control", {"P": E}, _equivalences(E), PNC_ASSUMPTIONS, LambdaConfig(),
        "six preparations of a two-bit classical system, uniform on pairs of ontic states",
    )


TS_IN = FiniteSpace.of(r1=2, r2=2)
TS_OUT = FiniteSpace.of(u1=2, u2=2)
TS_STAGES = {"r1": PREPARATION, "u1": PREPARATION, "r2": MEASUREMENT, "u2": MEASUREMENT}


def time_symmetric_pair(table, labels=("E", "Ep")) -> tuple:
    """``(E, E')`` with ``E' = Pi(E)``; ``table`` must be swap-invariant."""
    d = table if isinstance(table, CondDist) else make_cond_dist(TS_IN, TS_OUT, table)
    mirrored = apply(swap_comb(d.input, d.output), d)
    if not dist_equal(d, mirrored):
        raise AsymmetricParams("table changes under exchanging (r1, u1) with (r2, u2)")
    E = annotate(labels[0], d, TS_STAGES)
    Ep = annotate(labels[1], mirrored, TS_STAGES)
    return E, Ep


def swap_channel() -> CondDist:
    """``u1 = r2`` and ``u2 = r1``."""
    return CondDist.deterministic(TS_IN, TS_OUT, lambda s: (s[1], s[0]))


def time_symmetric_scenario(table=None, size: int = 2) -> Scenario:
    E, Ep = time_symmetric_pair(swap_channel() if table is None else table)
    return Scenario(
        "time-symmetric", {E.label: E, Ep.label: Ep}, [time_symmetry_equation(E, Ep)], (),
        LambdaConfig("stochastic", size),
        "an experiment and its time reverse, related by exchanging both ends",
    )


FUNCTOR_GENERATORS = [
    {"op": "swap"},
    {"op": "set_input", "var": "x", "value": 0},
    {"op": "discard", "vars": ["b"]},
    {"op": "mix", "sigma": "1/2", "first": {"op": "swap"}, "second": {"op": "identity"}},
]


def functor_bell_scenario() -> Scenario:
    sc = bell_scenario(HALF, "functor-bell")
    sc.description = "noisy PR box with a generator set for checking the lift's functor laws"
    sc.functor = {"experiment": "E", "generators": FUNCTOR_GENERATORS, "bound": 8, "lambda_size": 2, "k": [1, 0]}
    return sc


BUILTIN = {
    "trine": trine_prep_scenario,
    "classical-control": classical_control_scenario,
    "noisy-pr-1_2": lambda: bell_scenario(HALF),
    "noisy-pr-5_8": lambda: bell_scenario(Fraction(5, 8)),
    "signaling-box": signaling_scenario,
    "time-symmetric": time_symmetric_scenario,
    "functor-bell": functor_bell_scenario,
}
