"""Print the range of f'' for the oscillatory catalog flux on [-1, 1].

A positive minimum means the flux is convex there, so the Riemann problem
(-1, 1) is solved by a single rarefaction and no shocks can accumulate.
"""
import numpy as np

from selfsim.flux_models import make_flux
from selfsim.scalar_oracle import convex_envelope


def main():
    m = make_flux("oscillatory")
    u = np.linspace(-1, 1, 400001)
    u = u[u != 0]
    d1 = m.jacobian(u[:, None])[:, 0, 0]
    d2 = np.diff(d1) / np.diff(u)
    k = int(np.argmin(d2))
    print(f"min f'' = {d2[k]:.6f} at u = {u[k]:.6f}, max f'' = {d2.max():.6f}")
    env = convex_envelope(m, -1.0, 1.0)
    print("envelope pieces:", [p.kind for p in env.pieces])


if __name__ == "__main__":
    main()
