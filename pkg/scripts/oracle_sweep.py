"""Solve random scalar Riemann instances and run them through the classifier.

usage: python scripts/oracle_sweep.py [n_seeds] [first_seed]
"""
import sys

from selfsim.classify import ClassifyConfig, structure_report
from selfsim.dafermos import verify_weak
from selfsim.scalar_oracle import oleinik_solve, random_riemann_instance


def main(n=20, first=0):
    bad = 0
    for seed in range(first, first + n):
        model, uL, uR = random_riemann_instance(seed)
        p = oleinik_solve(model, uL, uR)
        weak = verify_weak(model, p, tol_weak=1e-6)
        rep = structure_report(model, p, ClassifyConfig(tol_weak=1e-6))
        kinds = "".join(w.kind[0] for w in rep.waves or [])
        ok = weak.verdict and rep.waves is not None
        bad += not ok
        print(f"seed {seed:4d}  ({uL:+.3f}, {uR:+.3f})  dev {weak.deviation:.1e}  exit {rep.exit_code}  waves {kinds}")
    print(f"{n - bad}/{n} passed")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(*map(int, sys.argv[1:3])))
