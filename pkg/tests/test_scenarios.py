from fractions import Fraction

import pytest

from opft.combs import apply
from opft.errors import AsymmetricParams, SigmaOutOfRange
from opft.experiment import LambdaConfig
from opft.finetune import compile_equations
from opft.prob import dist_equal
from opft.scenarios import (
    BUILTIN,
    PAIRS,
    TS_IN,
    TS_OUT,
    chsh,
    classical_control_model,
    classical_control_scenario,
    noisy_pr_box,
    swap_channel,
    time_symmetric_pair,
    trine_angle,
    trine_prep_scenario,
)
from opft.prob import CondDist
from oracles import born_trine


@pytest.mark.parametrize("v, value", [(0, 0), (1, 4), (Fraction(5, 8), Fraction(5, 2)), (Fraction(1, 2), 2)])
def test_chsh_scales_with_visibility(v, value):
    assert chsh(noisy_pr_box(v)) == value


def test_visibility_range():
    with pytest.raises(SigmaOutOfRange):
        noisy_pr_box(Fraction(9, 8))


def test_trine_matches_born_rule():
    E = trine_prep_scenario().experiments["P"]
    born = born_trine()
    for r1 in range(6):
        for r2 in range(3):
            assert abs(float(E.dist((0,), (r1, r2))) - born[r1, r2]) < 1e-12
    assert E.dist((0,), (0, 0)) == 1
    assert E.dist((0,), (0, 1)) == Fraction(1, 4)
    assert [trine_angle(r) for r in range(6)] == [0, 2, 4, 3, 5, 1]


@pytest.mark.parametrize("make", [trine_prep_scenario, classical_control_scenario])
def test_antipodal_mixtures_coincide(make):
    sc = make()
    for eq in sc.equations:
        left = apply(eq.lhs.comb, eq.lhs.experiment.dist)
        right = apply(eq.rhs.comb, eq.rhs.experiment.dist)
        assert dist_equal(left, right)
    assert len(sc.equations) == len(PAIRS)


def test_classical_statistics_are_coarse():
    E = classical_control_scenario().experiments["P"]
    values = {v for col in E.dist.columns for v in col}
    assert values <= {0, Fraction(1, 2), 1}


def test_generating_model_is_a_witness():
    """The two-bit model, written as weights on response triples, solves the compiled system."""
    sc = classical_control_scenario()
    compiled = compile_equations(sc.equations, sc.assumptions, LambdaConfig("deterministic"))
    model = compiled.models["P"]
    index = {strat[0]: lam for lam, strat in enumerate(model.strategies)}
    values = {n: Fraction(0) for n in compiled.system.unknowns}
    for r1, weights in classical_control_model().items():
        for triple, w in weights.items():
            values[model.unknown(model.W.index((r1,)), index[triple])] += w
    assert all(c.satisfied_by(values) for c in compiled.system.constraints)


def test_swap_channel_pair():
    E, Ep = time_symmetric_pair(swap_channel())
    assert dist_equal(E.dist, Ep.dist)
    assert E.label == "E" and Ep.label == "Ep"


def test_pair_from_entries():
    entries = {((u1, u2), (r1, r2)): Fraction(1, 4) for u1 in range(2) for u2 in range(2)
               for r1 in range(2) for r2 in range(2)}
    E, _ = time_symmetric_pair(entries)
    assert E.dist((0, 0), (1, 1)) == Fraction(1, 4)


def test_asymmetric_table_rejected():
    d = CondDist.deterministic(TS_IN, TS_OUT, lambda s: (s[0], 0))
    with pytest.raises(AsymmetricParams):
        time_symmetric_pair(d)


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_builtins_construct(name):
    sc = BUILTIN[name]()
    assert sc.equations and sc.description
