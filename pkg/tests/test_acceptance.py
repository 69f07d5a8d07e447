"""One test per acceptance criterion.

Each test records ``(passed, description)`` in ``RESULTS`` and the terminal
summary hook in ``conftest.py`` prints one line per criterion.
"""

import io as stdio
import itertools
import random
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

from gen import (
    random_comb,
    random_dist,
    random_experiment,
    random_ns_box,
    random_prep_measure,
    random_symmetric_table,
    random_system,
    tamper,
)
from opft import io
from opft.assumptions import (
    LAMBDA_MEDIATION,
    MEASUREMENT_INDEPENDENCE,
    OUTCOME_INDEPENDENCE,
    PARAMETER_INDEPENDENCE,
    FreeModel,
    StrategyModel,
    parameter_independence,
    preparation_noncontextuality,
    time_symmetry,
)
from opft.category import build_subcategory, check_functor_laws
from opft.cli import main
from opft.combs import apply, identity_comb, mix_combs, set_input_comb, swap_comb
from opft.experiment import MEASUREMENT, Equation, LambdaConfig, Side, annotate
from opft.finetune import (
    NO_FINE_TUNING,
    check_bell_local_causality,
    check_no_fine_tuning,
    check_preparation_noncontextuality,
    check_time_symmetry,
    compile_equations,
    no_signaling_equations,
    bell_experiment,
    time_symmetry_equation,
)
from opft.ontology import canonical_lift, ontic_space
from opft.prob import CondDist, FiniteSpace
from opft.scenarios import (
    BUILTIN,
    FUNCTOR_GENERATORS,
    TS_IN,
    TS_OUT,
    chsh,
    classical_control_scenario,
    noisy_pr_box,
    time_symmetric_pair,
    trine_prep_scenario,
)
from opft.solver import solve, verify
from opft.system import ConstraintSystem
from oracles import (
    bell_local_by_facets,
    bell_local_by_lp,
    born_trine,
    pnc_feasible_lp,
    vertex_enumeration_feasible,
)

RESULTS = {}
HALF = Fraction(1, 2)
GOLDEN = Path(__file__).resolve().parent.parent / "scenarios"


@contextmanager
def criterion(number, text):
    RESULTS[number] = (False, text)
    yield
    RESULTS[number] = (True, text)


def timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - start


# ---- 1 ------------------------------------------------------------------


def test_criterion_1_bell_suite():
    local = [Fraction(0), Fraction(1, 4), Fraction(1, 2)]
    nonlocal_ = [Fraction(9, 16), Fraction(5, 8), Fraction(3, 4), Fraction(1)]
    with criterion(1, "Bell suite: exact verdicts at 7 visibilities, each < 1 s, both oracles agree"):
        for v in local + nonlocal_:
            box = noisy_pr_box(v)
            verdict, elapsed = timed(check_bell_local_causality, box)
            expect_local = v in local
            assert elapsed < 1.0, (v, elapsed)
            assert (verdict.label == NO_FINE_TUNING) == expect_local, v
            assert verdict.verify()
            assert chsh(box) == 4 * v and (chsh(box) <= 2) == expect_local
            assert bell_local_by_facets(box) == expect_local
            assert bell_local_by_lp(box) == expect_local


# ---- 2 ------------------------------------------------------------------


def classical_table(E):
    return [[float(E.dist((0,), (r1, r2))) for r2 in range(3)] for r1 in range(6)]


def test_criterion_2_preparation_noncontextuality():
    with criterion(2, "PNC suite: trine FINE-TUNED, classical control NO-FINE-TUNING with checked witness, < 1 s"):
        trine, t1 = timed(check_preparation_noncontextuality, trine_prep_scenario())
        assert trine.fine_tuned and trine.verify() and t1 < 1.0
        assert pnc_feasible_lp(born_trine()) is False
        sc = classical_control_scenario()
        classical, t2 = timed(check_preparation_noncontextuality, sc)
        assert not classical.fine_tuned and t2 < 1.0
        assert classical.witness is not None and verify(classical.system, classical.witness)
        import numpy as np

        assert pnc_feasible_lp(np.array(classical_table(sc.experiments["P"]))) is True


# ---- 3 ------------------------------------------------------------------


def trivial_instance(rng):
    """``(E, E', f0, f1)`` with ``f0(E) == f1(E')`` by construction."""
    kind = rng.choice(["same", "swap", "set"])
    if kind == "swap":
        d = random_dist(rng, TS_IN, TS_OUT)
        E = annotate("E", d)
        Ep = annotate("Ep", apply(swap_comb(TS_IN, TS_OUT), d))
        return E, Ep, identity_comb(E.S, E.T), swap_comb(Ep.S, Ep.T)
    E = random_experiment(rng)
    if kind == "set" and len(E.S) >= 2:
        var = rng.choice(E.S.names)
        other = random_dist(rng, E.S, E.T)
        pos = E.S.names.index(var)
        cols = [E.dist.columns[i] if s[pos] == 0 else other.columns[i] for i, s in enumerate(E.S.assignments)]
        Ep = annotate("Ep", CondDist(E.S, E.T, cols))
        f = set_input_comb(E.S, E.T, var, 0)
        return E, Ep, f, f
    f = random_comb(rng, E.S, E.T)
    return E, annotate("Ep", E.dist), f, f


def test_criterion_3_trivial_extension():
    with criterion(3, "trivial extension: 100 random scenarios with no assumptions are NO-FINE-TUNING"):
        rng = random.Random(3)
        for i in range(100):
            E, Ep, f0, f1 = trivial_instance(rng)
            lam = rng.choice([LambdaConfig()] + [LambdaConfig("stochastic", n) for n in (1, 2, 3)])
            v = check_no_fine_tuning(E, Ep, f0, f1, (), lam)
            assert v.label == NO_FINE_TUNING and v.verify(), i


# ---- 4 ------------------------------------------------------------------


MIX_A = {0: HALF, 1: HALF}
MIX_B = {2: HALF, 3: HALF}


def mix_of_preparations(E, a, b):
    return mix_combs(HALF, set_input_comb(E.S, E.T, "r1", a), set_input_comb(E.S, E.T, "r1", b))


def pnc_via_mixtures(P):
    eq = Equation(Side(P, mix_of_preparations(P, 0, 1)), Side(P, mix_of_preparations(P, 2, 3)))
    compiled = compile_equations([eq], [LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE], LambdaConfig("deterministic"))
    return compiled.system.canonical() == preparation_noncontextuality(P, [(MIX_A, MIX_B)]).canonical()


def pnc_via_identity(P):
    """Two prepared experiments related by identity combs, rows written out here."""
    stages = {"r2": MEASUREMENT, "u": MEASUREMENT}
    A = annotate("A", apply(mix_of_preparations(P, 0, 1), P.dist), stages)
    B = annotate("B", apply(mix_of_preparations(P, 2, 3), P.dist), stages)
    assumptions = [LAMBDA_MEDIATION, MEASUREMENT_INDEPENDENCE]
    eq = Equation(Side(A, identity_comb(A.S, A.T)), Side(B, identity_comb(B.S, B.T)))
    compiled = compile_equations([eq], assumptions, LambdaConfig("deterministic")).system
    ma, mb = StrategyModel(A, assumptions), StrategyModel(B, assumptions)
    hand = ConstraintSystem()
    for m in (ma, mb):
        hand.extend(m.reproduction()).extend(m.structural())
    for s in A.S.assignments:
        for t in A.T.assignments:
            for lam in range(ma.size):
                row = {}
                if ma.response(lam, s) == t:
                    row[ma.unknown(0, lam)] = 1
                if mb.response(lam, s) == t:
                    row[mb.unknown(0, lam)] = row.get(mb.unknown(0, lam), 0) - 1
                hand.add_eq(row, 0)
    return compiled.canonical() == hand.canonical()


def pi_reduction(box, n):
    E = bell_experiment(box)
    stochastic = compile_equations(no_signaling_equations(E), [MEASUREMENT_INDEPENDENCE], LambdaConfig("stochastic", n))
    deterministic = compile_equations(
        no_signaling_equations(E),
        [PARAMETER_INDEPENDENCE, OUTCOME_INDEPENDENCE, MEASUREMENT_INDEPENDENCE],
        LambdaConfig("deterministic"),
    )
    return (
        stochastic.system.canonical() == parameter_independence(E, n).canonical()
        and deterministic.system.canonical() == parameter_independence(E).canonical()
    )


def ts_reduction(d, n, k):
    E, Ep = time_symmetric_pair(d)
    compiled = compile_equations([time_symmetry_equation(E, Ep)], (), LambdaConfig("stochastic", n), k)
    return compiled.system.canonical() == time_symmetry(FreeModel(E, n), FreeModel(Ep, n), k).canonical()


# planted time symmetry: strategies are dicts s -> (u1, u2) over TS_IN


def mirror(f):
    return {s: tuple(reversed(f[tuple(reversed(s))])) for s in TS_IN.assignments}


def random_strategy(rng):
    return {s: (rng.randrange(2), rng.randrange(2)) for s in TS_IN.assignments}


def self_mirror_strategy(rng):
    f = {}
    for s in TS_IN.assignments:
        rs = tuple(reversed(s))
        if rs in f:
            f[s] = tuple(reversed(f[rs]))
        elif s == rs:
            u = rng.randrange(2)
            f[s] = (u, u)
        else:
            f[s] = (rng.randrange(2), rng.randrange(2))
    return f


def as_tables(f):
    outs = [f[s] for s in TS_IN.assignments]
    return (tuple(o[0] for o in outs), tuple(o[1] for o in outs))


def planted_instance(rng):
    n = rng.choice((2, 3, 4))
    g = random_strategy(rng)
    strategies = [g, mirror(g)]
    if n == 3:
        strategies.append(self_mirror_strategy(rng))
    if n == 4:
        h = random_strategy(rng)
        strategies += [h, mirror(h)]
    d = CondDist.from_function(
        TS_IN, TS_OUT, lambda u, s: Fraction(sum(f[s] == u for f in strategies), n)
    )
    E, Ep = time_symmetric_pair(d)
    images = [mirror(f) for f in strategies]
    # exchange outputs of two strategies at one input: statistics stay, structure may not
    for _ in range(rng.randint(0, 2)):
        i, j = rng.sample(range(n), 2)
        s = rng.choice(TS_IN.assignments)
        images[i], images[j] = dict(images[i]), dict(images[j])
        images[i][s], images[j][s] = images[j][s], images[i][s]
    rng.shuffle(images)
    return E, Ep, strategies, images


def planted_brute_force(E, strategies, images):
    """Relabelings ``k`` under which every input's statistics are met by mirror-compatible states."""
    n = len(strategies)
    feasible = []
    for k in itertools.permutations(range(n)):
        ok = True
        for s in TS_IN.assignments:
            rs = tuple(reversed(s))
            compatible = [lam for lam in range(n) if images[k[lam]][rs] == tuple(reversed(strategies[lam][s]))]
            system = ConstraintSystem([f"w{lam}" for lam in compatible])
            for t in TS_OUT.assignments:
                system.add_eq({f"w{lam}": 1 for lam in compatible if strategies[lam][s] == t}, E.dist(t, s))
            if not compatible or not vertex_enumeration_feasible(system):
                ok = False
                break
        if ok:
            feasible.append(k)
    return feasible


def test_criterion_4_reduction_fidelity():
    with criterion(4, "reduction fidelity: PNC/PI/TS compiled systems equal hand-coded ones; planted TS matches brute force"):
        rng = random.Random(4)
        for i in range(50):
            P = random_prep_measure(rng)
            assert pnc_via_mixtures(P), ("pnc", i)
            assert pnc_via_identity(P), ("pnc-identity", i)
        for i in range(50):
            assert pi_reduction(random_ns_box(rng), rng.randint(1, 3)), ("pi", i)
        for i in range(50):
            n = rng.randint(1, 3)
            k = list(range(n))
            rng.shuffle(k)
            assert ts_reduction(random_symmetric_table(rng), n, tuple(k)), ("ts", i)
        counts = {True: 0, False: 0}
        for i in range(50):
            E, Ep, strategies, images = planted_instance(rng)
            lam = LambdaConfig("planted", strategies={"E": [as_tables(f) for f in strategies],
                                                      "Ep": [as_tables(f) for f in images]})
            verdict = check_time_symmetry(E, Ep, lam)
            assert verdict.verify(), ("planted", i)
            oracle = planted_brute_force(E, strategies, images)
            assert verdict.fine_tuned == (not oracle), ("planted", i)
            if not verdict.fine_tuned:
                assert verdict.k in oracle
            else:
                assert len(verdict.attempts) == len(list(itertools.permutations(range(len(strategies)))))
            counts[verdict.fine_tuned] += 1
        assert counts[True] and counts[False], counts


# ---- 5 ------------------------------------------------------------------


def test_criterion_5_functor_laws():
    with criterion(5, "functor laws: canonical lift passes on the generated subcategory; broken lift gives a counterexample"):
        E = bell_experiment(noisy_pr_box(HALF))
        from opft.experiment import build_comb

        gens = [build_comb(g, E.S, E.T) for g in FUNCTOR_GENERATORS]
        cat = build_subcategory(gens, 8)
        assert len(cat) <= 64
        Lam2 = ontic_space(2)
        report = check_functor_laws(lambda f: canonical_lift(f, Lam2, (1, 0)), cat, sigmas=("1/2", "1/3"))
        assert report.ok, report.text()
        assert all(r.checked > 0 for r in report.results)
        Lam3 = ontic_space(3)
        broken = check_functor_laws(lambda f: canonical_lift(f, Lam3, (1, 2, 0)), cat)
        assert not broken.ok
        bad = next(r for r in broken.results if not r.passed)
        names = {f.name for f in cat.morphisms}
        assert bad.counterexample and len(bad.counterexample) >= 2
        assert set(bad.counterexample[:2]) <= names


# ---- 6 ------------------------------------------------------------------


def test_criterion_6_solver_soundness():
    with criterion(6, "solver soundness: 500 random systems match vertex enumeration; verify accepts all, rejects all tampered"):
        rng = random.Random(6)
        for i in range(500):
            system = random_system(rng, 12)
            v = solve(system)
            assert v.feasible == vertex_enumeration_feasible(system), i
            assert verify(system, v), i
            assert not verify(system, tamper(v, rng, system)), i


# ---- 7 ------------------------------------------------------------------


EXPECTED_EXIT = {
    "noisy-pr-1_2": 0,
    "noisy-pr-5_8": 10,
    "trine": 10,
    "classical-control": 0,
    "time-symmetric": 0,
    "signaling-box": 2,
}


def test_criterion_7_cli_contract(tmp_path):
    with criterion(7, "CLI contract: golden files round-trip byte-identically; exit codes 0, 2, 10 as specified"):
        for name, make in BUILTIN.items():
            path = GOLDEN / f"{name}.json"
            text = path.read_text(encoding="ascii")
            assert io.dumps_scenario(io.load_scenario(path)) == text, name
            dest = tmp_path / f"{name}.json"
            assert main(["scenarios", "export", name, str(dest)], stdio.StringIO()) == 0
            assert dest.read_bytes() == path.read_bytes(), name
        seen = set()
        for name, code in EXPECTED_EXIT.items():
            got = main(["check", str(GOLDEN / f"{name}.json")], stdio.StringIO())
            assert got == code, (name, got)
            seen.add(got)
        assert seen == {0, 2, 10}
