"""Sweep the noisy PR box visibility and print verdict, CHSH value and timing."""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass
from fractions import Fraction

from opft.finetune import check_bell_local_causality, check_parameter_independence_only
from opft.scenarios import chsh, noisy_pr_box


@dataclass
class SweepConfig:
    steps: int = 16
    pi_only: bool = False


def run(cfg: SweepConfig) -> list:
    rows = []
    for i in range(cfg.steps + 1):
        v = Fraction(i, cfg.steps)
        box = noisy_pr_box(v)
        start = time.perf_counter()
        verdict = (check_parameter_independence_only if cfg.pi_only else check_bell_local_causality)(box)
        elapsed = time.perf_counter() - start
        rows.append((v, chsh(box), verdict.label, verdict.verify(), elapsed))
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--steps", type=int, default=SweepConfig.steps)
    p.add_argument("--pi-only", action="store_true", help="parameter independence without outcome independence")
    args = p.parse_args()
    cfg = SweepConfig(args.steps, args.pi_only)
    print(f"{'v':>6} {'CHSH':>6} {'verdict':>15} verified  seconds")
    for v, s, label, ok, t in run(cfg):
        print(f"{str(v):>6} {str(s):>6} {label:>15} {str(ok):>8}  {t:.3f}")


if __name__ == "__main__":
    main()
