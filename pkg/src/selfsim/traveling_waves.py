"""Equilibria and orbits of the viscous traveling-wave system in a moving frame."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainExit, PreconditionError, SingularViscosityError
from .flux_models import EPS_RH, FluxModel, as_state, solve_moving_frame_level


@dataclass(frozen=True, eq=False)
class TravelingWaveProblem:
    """B(w) w' = f(w) - xi_star w - F_star."""
    model: FluxModel
    xi_star: float
    f_star: np.ndarray
    viscosity: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "f_star", np.atleast_1d(np.asarray(self.f_star, dtype=float)))

    def B(self, w) -> np.ndarray:
        if self.viscosity is None:
            return np.eye(self.model.n)
        return np.atleast_2d(np.asarray(self.viscosity(w), dtype=float))

    def rhs(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return self.model.flux(w) - self.xi_star * w - self.f_star

    @classmethod
    def from_state(cls, model: FluxModel, xi_star: float, u, viscosity=None) -> "TravelingWaveProblem":
        u = as_state(model, u)
        return cls(model, xi_star, model.flux(u) - xi_star * u, viscosity)


def tw_equilibria(prob: TravelingWaveProblem, search_box=None, eps_rh: float = EPS_RH) -> list:
    """States w in the box with f(w) - xi* w = F*."""
    m = prob.model
    lo, hi = (m.domain_lo, m.domain_hi) if search_box is None else search_box
    return solve_moving_frame_level(m, prob.xi_star, prob.f_star, lo, hi, eps_rh)


def _is_equilibrium(prob, u, tol):
    return float(np.linalg.norm(prob.rhs(u))) <= tol


@dataclass(frozen=True)
class ConnectionVerdict:
    connects: bool
    reason: str
    interior_zeros: tuple = ()


def tw_connection_scalar(prob: TravelingWaveProblem, u_minus, u_plus, grid: int = 4001,
                         eps_rh: float = 1e-8) -> ConnectionVerdict:
    """Phase-line test for an orbit from u_minus (zeta -> -inf) to u_plus (zeta -> +inf)."""
    m = prob.model
    if m.n != 1:
        raise PreconditionError("the phase-line criterion applies to scalar problems only")
    um, up = float(np.ravel(u_minus)[0]), float(np.ravel(u_plus)[0])
    if um == up:
        raise PreconditionError("end states coincide")
    tol = eps_rh * (1 + float(np.max(np.abs(prob.f_star))))
    for name, u in (("u_minus", um), ("u_plus", up)):
        if not _is_equilibrium(prob, np.array([u]), tol):
            raise PreconditionError(f"{name} = {u:.6g} is not an equilibrium")
    b = float(prob.B(np.array([0.5 * (um + up)]))[0, 0])
    if b <= 0:
        raise PreconditionError("scalar viscosity must be positive")

    def g(w):
        w = np.asarray(w, dtype=float)
        return prob.rhs(w[..., None])[..., 0]

    # interior of the interval, staying clear of the end states
    lo, hi = min(um, up), max(um, up)
    xs = np.linspace(lo, hi, grid)[1:-1]
    gs = g(xs)
    want = 1.0 if up > um else -1.0
    zeros = []
    sc = np.nonzero(np.sign(gs[:-1]) * np.sign(gs[1:]) < 0)[0]
    for i in sc:
        zeros.append(brentq(lambda x: float(g(x)), xs[i], xs[i + 1], xtol=1e-14))
    span = hi - lo
    wrong = np.nonzero(want * gs <= 0)[0]
    # values at the ends are O(grid step) small; flag only zeros or wrong signs strictly inside
    inner = [float(xs[i]) for i in wrong if min(xs[i] - lo, hi - xs[i]) > 1e-9 * (1 + span)]
    if zeros or inner:
        z = tuple(sorted(set(zeros) | set(inner[:1])))
        return ConnectionVerdict(False, "the right-hand side vanishes or has the wrong sign between the states", z)
    return ConnectionVerdict(True, "the right-hand side keeps the sign that drives u_minus to u_plus")


@dataclass(eq=False)
class Trajectory:
    zeta: np.ndarray
    states: np.ndarray
    approaches: Optional[np.ndarray]
    approach_zeta: Optional[float]


def tw_simulate(prob: TravelingWaveProblem, w0, zeta_span=(0.0, 50.0), equilibria=None,
                eps_eq: float = 1e-6, n_out: int = 501) -> Trajectory:
    """Integrate dw/dzeta = B(w)^{-1} (f(w) - xi* w - F*) and record approach to equilibria."""
    m = prob.model
    w0 = as_state(m, w0)

    def rhs(_, w):
        B = prob.B(w)
        if abs(np.linalg.det(B)) <= 1e-14 * max(1.0, np.linalg.norm(B)) ** m.n:
            raise SingularViscosityError(f"viscosity matrix is singular at {w}")
        return np.linalg.solve(B, prob.rhs(w))

    width = m.domain_hi - m.domain_lo

    def leave(_, w):
        return float(np.min(np.minimum(w - m.domain_lo, m.domain_hi - w) / width))

    leave.terminal = True
    t_eval = np.linspace(*zeta_span, n_out)
    sol = solve_ivp(rhs, zeta_span, w0, method="DOP853", rtol=1e-10, atol=1e-12, t_eval=t_eval, events=[leave])
    if len(sol.t_events[0]):
        raise DomainExit(f"trajectory left the domain box at zeta = {sol.t_events[0][0]:.6g}")
    states = sol.y.T
    if equilibria is None:
        equilibria = tw_equilibria(prob)
    target, at = None, None
    # sustained approach: from some index on, the distance stays below eps_eq
    for e in equilibria:
        d = np.linalg.norm(states - e, axis=1)
        below = d <= eps_eq
        if below[-1]:
            k = len(below) - 1
            while k > 0 and below[k - 1]:
                k -= 1
            target, at = np.asarray(e), float(sol.t[k])
            break
    return Trajectory(zeta=sol.t, states=states, approaches=target, approach_zeta=at)


def write_trajectory_csv(tr: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["zeta"] + [f"w{i}" for i in range(tr.states.shape[1])])
        for z, w in zip(tr.zeta, tr.states):
            wr.writerow([repr(float(z))] + [repr(float(x)) for x in w])
