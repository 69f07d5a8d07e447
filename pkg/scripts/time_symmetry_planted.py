"""Planted ontic structure under time symmetry.

Builds experiments from a few deterministic response functions closed under
the time reversal, mirrors them, optionally exchanges outputs between
strategies (which keeps the statistics), and reports which relabelings
``k`` make the pair time symmetric at the ontic level.
"""

from __future__ import annotations

import argparse
import random
from dataclasses import dataclass
from fractions import Fraction

from opft.experiment import LambdaConfig
from opft.finetune import check_time_symmetry
from opft.prob import CondDist
from opft.scenarios import TS_IN, TS_OUT, time_symmetric_pair


@dataclass
class PlantedConfig:
    trials: int = 20
    pairs: int = 1
    exchanges: int = 1
    seed: int = 0


def mirror(f: dict) -> dict:
    return {s: tuple(reversed(f[tuple(reversed(s))])) for s in TS_IN.assignments}


def tables(f: dict) -> tuple:
    outs = [f[s] for s in TS_IN.assignments]
    return (tuple(o[0] for o in outs), tuple(o[1] for o in outs))


def trial(rng: random.Random, cfg: PlantedConfig):
    strategies = []
    for _ in range(cfg.pairs):
        g = {s: (rng.randrange(2), rng.randrange(2)) for s in TS_IN.assignments}
        strategies += [g, mirror(g)]
    n = len(strategies)
    d = CondDist.from_function(TS_IN, TS_OUT, lambda u, s: Fraction(sum(f[s] == u for f in strategies), n))
    E, Ep = time_symmetric_pair(d)
    images = [dict(mirror(f)) for f in strategies]
    for _ in range(cfg.exchanges):
        i, j = rng.sample(range(n), 2)
        s = rng.choice(TS_IN.assignments)
        images[i][s], images[j][s] = images[j][s], images[i][s]
    rng.shuffle(images)
    lam = LambdaConfig("planted", strategies={"E": [tables(f) for f in strategies], "Ep": [tables(f) for f in images]})
    return check_time_symmetry(E, Ep, lam)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=PlantedConfig.trials)
    p.add_argument("--pairs", type=int, choices=(1, 2), default=PlantedConfig.pairs)
    p.add_argument("--exchanges", type=int, default=PlantedConfig.exchanges)
    p.add_argument("--seed", type=int, default=PlantedConfig.seed)
    cfg = PlantedConfig(**vars(p.parse_args()))
    rng = random.Random(cfg.seed)
    tuned = 0
    for i in range(cfg.trials):
        v = trial(rng, cfg)
        tuned += v.fine_tuned
        extra = f"k={v.k}" if not v.fine_tuned else f"all {len(v.attempts)} relabelings refuted"
        print(f"trial {i:3d}: {v.label:15} {extra}")
    print(f"{tuned}/{cfg.trials} fine tuned")


if __name__ == "__main__":
    main()
