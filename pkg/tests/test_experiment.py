from fractions import Fraction

import pytest

from opft.combs import apply, combs_equal, compose_combs, mix_combs, set_input_comb, swap_comb
from opft.errors import ParseError, ShapeMismatch
from opft.experiment import (
    CONTROLLED,
    MEASUREMENT,
    OBSERVED,
    Experiment,
    LambdaConfig,
    Side,
    Variable,
    annotate,
    build_comb,
    side,
)
from opft.prob import dist_equal
from opft.scenarios import TS_IN, TS_OUT, noisy_pr_box, swap_channel

PR = noisy_pr_box(1)


def test_annotate_tags_roles():
    E = annotate("E", PR, {"x": MEASUREMENT}, {"x": "A"})
    assert E.var("x") == Variable("x", 2, CONTROLLED, MEASUREMENT, "A")
    assert E.var("b").role == OBSERVED
    assert E.controlled(MEASUREMENT) == ("x",)
    assert E.observed() == ("a", "b")


def test_declarations_must_match_table():
    vs = (
        Variable("x", 2, CONTROLLED), Variable("y", 3, CONTROLLED),
        Variable("a", 2, OBSERVED), Variable("b", 2, OBSERVED),
    )
    with pytest.raises(ShapeMismatch):
        Experiment("E", PR, vs)
    with pytest.raises(ShapeMismatch):
        Variable("x", 2, "hidden")


def test_side_checks_shapes():
    E = annotate("E", PR)
    with pytest.raises(ShapeMismatch):
        Side(E, swap_comb(TS_IN, TS_OUT))


def test_build_comb_matches_constructors():
    S, T = PR.input, PR.output
    spec = {"op": "compose", "steps": [{"op": "set_input", "var": "y", "value": 1}, {"op": "discard", "vars": ["b"]}]}
    f = build_comb(spec, S, T)
    sel = set_input_comb(S, T, "y", 1)
    assert f.R.names == ("x",) and f.U.names == ("a",)
    from opft.combs import discard_output_comb

    assert combs_equal(f, compose_combs(discard_output_comb(sel.R, sel.U, ["b"]), sel))
    m = build_comb(
        {"op": "mix", "sigma": "1/3", "first": {"op": "swap"}, "second": {"op": "identity", "corr": 2}}, S, T
    )
    assert m.origin[1] == Fraction(1, 3)
    p = build_comb({"op": "permutation", "inputs": ["y", "x"], "outputs": ["b", "a"]}, S, T)
    assert combs_equal(p, swap_comb(S, T))


@pytest.mark.parametrize(
    "spec",
    [
        {"op": "rotate"},
        {"op": "swap", "extra": 1},
        {"op": "set_input", "var": "x"},
        {"op": "compose", "steps": []},
        "swap",
    ],
)
def test_build_comb_rejects(spec):
    with pytest.raises(ParseError):
        build_comb(spec, PR.input, PR.output)


def test_side_keeps_spec():
    E = annotate("E", swap_channel())
    s = side(E, {"op": "swap"})
    assert s.spec == {"op": "swap"}
    assert dist_equal(apply(s.comb, E.dist), E.dist)


def test_lambda_config_resolution():
    assert LambdaConfig().resolve(["outcome-independence"]).mode == "deterministic"
    assert LambdaConfig().resolve(["lambda-mediation"]).mode == "deterministic"
    r = LambdaConfig().resolve(["measurement-independence"])
    assert (r.mode, r.size) == ("stochastic", 1)
    assert LambdaConfig("stochastic", 3).resolve([]).describe() == "stochastic:3"
    assert LambdaConfig(k=(1, 0)).resolve([]).k == (1, 0)
    with pytest.raises(ParseError):
        LambdaConfig("stochastic")
    with pytest.raises(ParseError):
        LambdaConfig("quantum")
    with pytest.raises(ParseError):
        LambdaConfig("planted")


def test_mix_spec_is_convex():
    E = annotate("E", noisy_pr_box(Fraction(3, 4)))
    a = build_comb({"op": "set_input", "var": "x", "value": 0}, E.S, E.T)
    b = build_comb({"op": "set_input", "var": "x", "value": 1}, E.S, E.T)
    m = build_comb(
        {"op": "mix", "sigma": "1/4", "first": {"op": "set_input", "var": "x", "value": 0},
         "second": {"op": "set_input", "var": "x", "value": 1}},
        E.S, E.T,
    )
    assert combs_equal(m, mix_combs(Fraction(1, 4), a, b))
