"""Straightening chart for the second shallow-water family at (h, m) = (1, 0)."""
import sys

import numpy as np

from selfsim.flux_models import make_flux
from selfsim.wavecurves import straightening_chart, write_chart_csv


def main(out=None):
    sw = make_flux("shallow_water", g=1.0)
    ch = straightening_chart(sw, np.array([1.0, 0.0]), 2)
    print(f"flow residual {ch.flow_residual:.2e}  sigma_min {ch.sigma_min:.4f}  "
          f"extents {ch.extents}  shrunk {ch.shrunk}")
    if out:
        write_chart_csv(ch, out)
        print("wrote", out)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
