import itertools
from fractions import Fraction

import pytest

from opft.assumptions import (
    ASSUMPTIONS,
    LAMBDA_MEDIATION,
    MEASUREMENT_INDEPENDENCE,
    OUTCOME_INDEPENDENCE,
    PARAMETER_INDEPENDENCE,
    FreeModel,
    StrategyModel,
    lambda_mediation,
    measurement_independence,
    normalize_assumptions,
    outcome_independence,
    parameter_independence,
    preparation_noncontextuality,
    time_symmetry,
    time_symmetry_candidates,
)
from opft.errors import (
    NotOperationallyEquivalent,
    NotOperationallyTimeSymmetric,
    ParseError,
    ShapeMismatch,
    UnsupportedCombination,
)
from opft.experiment import MEASUREMENT, PREPARATION, LambdaConfig, annotate
from opft.finetune import bell_experiment, compile_equations, no_signaling_equations
from opft.prob import CondDist, FiniteSpace
from opft.scenarios import (
    PAIRS,
    TS_IN,
    TS_OUT,
    TS_STAGES,
    classical_control_scenario,
    noisy_pr_box,
    swap_channel,
    time_symmetric_pair,
    trine_prep_scenario,
)
from opft.solver import solve, verify
from oracles import bell_local_by_lp, born_trine, pnc_feasible_lp

HALF = Fraction(1, 2)
PM_STAGES = {"r1": PREPARATION, "r2": MEASUREMENT, "u": MEASUREMENT}
PM_IN = FiniteSpace.of(r1=2, r2=2)
PM_OUT = FiniteSpace.of(u=2)


def prep_measure(fn):
    return annotate("P", CondDist.from_function(PM_IN, PM_OUT, fn), PM_STAGES)


def satisfied(system, values):
    return all(c.satisfied_by(values) for c in system.constraints)


def test_normalize_assumptions():
    assert normalize_assumptions(["outcome-independence", "lambda-mediation"]) == (
        "lambda-mediation", "outcome-independence",
    )
    with pytest.raises(ParseError) as exc:
        normalize_assumptions(["locality"])
    for name in ASSUMPTIONS:
        assert name in str(exc.value)


# ---- lambda-mediation ---------------------------------------------------


def test_one_bit_channel_is_mediated():
    E = prep_measure(lambda u, s: 1 if u[0] == s[0] else 0)
    system = lambda_mediation(E)
    v = solve(system)
    assert v.feasible and verify(system, v)
    model = StrategyModel(E, [LAMBDA_MEDIATION])
    const = {model.strategies[lam][0]: lam for lam in range(model.size)}
    values = {n: Fraction(0) for n in system.unknowns}
    for s in PM_IN.assignments:
        values[model.unknown(model.W.index(s), const[(s[0], s[0])])] = Fraction(1)
    assert satisfied(system, values)


def test_setting_blind_weights_cannot_mediate():
    """Weights that ignore r1 leave p(u|r1, r2) independent of r1."""
    E = prep_measure(lambda u, s: 1 if u[0] == s[0] else 0)
    model = StrategyModel(E, [LAMBDA_MEDIATION])
    system = lambda_mediation(E)
    for r2 in range(2):
        for lam in range(model.size):
            a = model.unknown(model.W.index((0, r2)), lam)
            b = model.unknown(model.W.index((1, r2)), lam)
            system.add_eq({a: 1, b: -1}, 0)
    v = solve(system)
    assert not v.feasible and verify(system, v)


def test_uniform_statistics_take_uniform_weights():
    E = prep_measure(lambda u, s: HALF)
    model = StrategyModel(E, [LAMBDA_MEDIATION])
    system = lambda_mediation(E)
    values = {n: Fraction(1, model.size) for n in system.unknowns}
    assert satisfied(system, values)


def test_mediation_needs_both_stages():
    E = annotate("E", noisy_pr_box(0), {"x": MEASUREMENT, "y": MEASUREMENT})
    with pytest.raises(ShapeMismatch):
        lambda_mediation(E)


# ---- measurement independence -------------------------------------------


def test_prep_measure_weights_read_preparation_only():
    E = prep_measure(lambda u, s: HALF)
    names = measurement_independence(E).unknowns
    assert names and all(n.startswith("w[P:r1=") and "r2" not in n for n in names)


def test_bell_weights_read_nothing():
    E = bell_experiment(noisy_pr_box(HALF))
    names = measurement_independence(E).unknowns
    assert len(names) == 256
    assert all(n.startswith("w[E:l") for n in names)


def test_measurement_dependent_model_rejected():
    E = prep_measure(lambda u, s: HALF)
    with pytest.raises(UnsupportedCombination):
        measurement_independence(E, StrategyModel(E, []))


# ---- parameter and outcome independence ---------------------------------


def test_sixteen_local_strategies():
    E = bell_experiment(noisy_pr_box(0))
    model = StrategyModel(E, [PARAMETER_INDEPENDENCE, MEASUREMENT_INDEPENDENCE])
    assert model.size == 16
    assert model.domains == {"a": ("x",), "b": ("y",)}
    system = parameter_independence(E)
    assert satisfied(system, {n: Fraction(1, 16) for n in system.unknowns})


@pytest.mark.parametrize("v", [Fraction(0), Fraction(1, 2), Fraction(5, 8), Fraction(1)])
def test_local_fragment_matches_lp_oracle(v):
    box = noisy_pr_box(v)
    E = bell_experiment(box)
    system = parameter_independence(E).extend(outcome_independence(E))
    assert solve(system).feasible == bell_local_by_lp(box)


def test_outcome_independence_fragment():
    E = bell_experiment(noisy_pr_box(1))
    assert len(outcome_independence(E)) == 0
    with pytest.raises(UnsupportedCombination):
        outcome_independence(E, size=2)


def test_local_causality_is_pi_oi_mi():
    for v in (Fraction(0), Fraction(1, 2), Fraction(1)):
        E = bell_experiment(noisy_pr_box(v))
        compiled = compile_equations(
            no_signaling_equations(E),
            [PARAMETER_INDEPENDENCE, OUTCOME_INDEPENDENCE, MEASUREMENT_INDEPENDENCE],
            LambdaConfig("deterministic"),
        ).system
        fragments = parameter_independence(E).extend(outcome_independence(E))
        assert compiled.canonical() == fragments.canonical()


def test_free_model_combinations():
    E = bell_experiment(noisy_pr_box(1))
    with pytest.raises(UnsupportedCombination):
        FreeModel(E, 2, [OUTCOME_INDEPENDENCE])
    with pytest.raises(UnsupportedCombination):
        FreeModel(E, 2, [PARAMETER_INDEPENDENCE])
    system = parameter_independence(E, size=2)
    assert solve(system).feasible


# ---- preparation noncontextuality ---------------------------------------


def trine_equivalences():
    mixes = [{a: HALF, b: HALF} for a, b in PAIRS]
    return [(mixes[i], mixes[j]) for i, j in itertools.combinations(range(3), 2)]


def test_self_equivalence_is_vacuous():
    E = trine_prep_scenario().experiments["P"]
    base = measurement_independence(E, StrategyModel(E, [LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE]))
    system = preparation_noncontextuality(E, [({0: 1}, {0: 1}), ({2: HALF, 5: HALF}, {5: HALF, 2: HALF})])
    assert system.canonical() == base.canonical()


def test_trine_is_contextual():
    E = trine_prep_scenario().experiments["P"]
    system = preparation_noncontextuality(E, trine_equivalences())
    v = solve(system)
    assert not v.feasible and verify(system, v)
    assert pnc_feasible_lp(born_trine()) is False


def test_classical_control_is_noncontextual():
    E = classical_control_scenario().experiments["P"]
    system = preparation_noncontextuality(E, trine_equivalences())
    v = solve(system)
    assert v.feasible and verify(system, v)


def test_inequivalent_mixtures_rejected():
    E = trine_prep_scenario().experiments["P"]
    with pytest.raises(NotOperationallyEquivalent):
        preparation_noncontextuality(E, [({0: 1}, {1: 1})])
    with pytest.raises(ShapeMismatch):
        preparation_noncontextuality(E, [({0: HALF}, {1: 1})])


# ---- time symmetry ------------------------------------------------------


def table(fn):
    """Planted response tables ``(u1 over S, u2 over S)`` for ``fn(r1, r2) -> (u1, u2)``."""
    outs = [fn(*s) for s in TS_IN.assignments]
    return (tuple(o[0] for o in outs), tuple(o[1] for o in outs))


def mirror(fn):
    return lambda r1, r2: tuple(reversed(fn(r2, r1)))


G = {(0, 0): (0, 1), (0, 1): (0, 0), (1, 0): (1, 1), (1, 1): (0, 1)}


def g(r1, r2):
    return G[r1, r2]


def h(r1, r2):
    # agrees with g except on the orbit {(1, 1)}, where it takes the mirror of g
    return mirror(g)(r1, r2) if (r1, r2) == (1, 1) else g(r1, r2)


def mixture(f1, f2):
    return CondDist.from_function(
        TS_IN, TS_OUT, lambda u, s: HALF * ((u == f1(*s)) + (u == f2(*s)))
    )


def test_symmetric_pair_identity_k():
    E, Ep = time_symmetric_pair(swap_channel())
    system = time_symmetry(FreeModel(E, 1), FreeModel(Ep, 1))
    assert solve(system).feasible


def test_two_state_space_has_two_candidates():
    E, Ep = time_symmetric_pair(swap_channel())
    cands = time_symmetry_candidates(FreeModel(E, 2), FreeModel(Ep, 2))
    assert [k for k, _ in cands] == [(0, 1), (1, 0)]


def test_asymmetric_planted_structure_is_infeasible():
    d = mixture(g, mirror(g))
    assert d.columns == mixture(h, mirror(h)).columns
    E, Ep = time_symmetric_pair(d)
    me = StrategyModel(E, [], [table(g), table(mirror(g))])
    bad = StrategyModel(Ep, [], [table(h), table(mirror(h))])
    for k, system in time_symmetry_candidates(me, bad):
        v = solve(system)
        assert not v.feasible and verify(system, v)
    good = StrategyModel(Ep, [], [table(g), table(mirror(g))])
    feasible = [k for k, system in time_symmetry_candidates(me, good) if solve(system).feasible]
    assert feasible == [(1, 0)]


def test_time_symmetry_premise():
    d = CondDist.deterministic(TS_IN, TS_OUT, lambda s: (s[0], 0))
    E = annotate("E", d, TS_STAGES)
    with pytest.raises(NotOperationallyTimeSymmetric):
        time_symmetry(FreeModel(E, 1), FreeModel(annotate("Ep", d, TS_STAGES), 1))
