"""Verify and classify the quartic rarefaction u = xi^(1/3) on [-1, 1]."""
import time

from selfsim.classify import format_report, structure_report
from selfsim.dafermos import verify_weak
from selfsim.flux_models import make_flux
from selfsim.profiles import quartic_rarefaction_profile


def main():
    model, p = make_flux("quartic"), quartic_rarefaction_profile()
    t0 = time.perf_counter()
    rep = verify_weak(model, p, xi0=-2.0)
    print(f"weak: {rep.verdict}  deviation {rep.deviation:.2e}  D0 {rep.d0[0]:.12f}  "
          f"({time.perf_counter() - t0:.3f} s)")
    print(format_report(structure_report(model, p)))


if __name__ == "__main__":
    main()
