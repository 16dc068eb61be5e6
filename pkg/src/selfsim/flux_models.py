"""Flux functions, characteristic fields and Rankine-Hugoniot algebra.

States are 1-D arrays of length ``n``; scalar inputs are promoted.  Catalog
models are vectorized over leading axes, plug-ins need not be.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergenceWarning, DomainError, HyperbolicityError

EPS = np.finfo(float).eps
EPS_QUAD = 1e-10
EPS_RH = 1e-10
GL_ORDER = 8


@dataclass(frozen=True, eq=False)
class FluxModel:
    n: int
    f: Callable
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    name: str = "plugin"
    jac: Optional[Callable] = None
    # directional derivative of the Jacobian, (u, r) -> n x n
    djac: Optional[Callable] = None
    vectorized: bool = False
    margin: float = 1e-9
    params: dict = field(default_factory=dict)
    # scalar states where the Jacobian is only piecewise smooth (spline knots);
    # segment quadrature splits there
    kinks: tuple = ()

    def flux(self, U):
        U = np.asarray(U, dtype=float)
        if self.vectorized:
            return np.asarray(self.f(U), dtype=float).reshape(U.shape)
        flat = U.reshape(-1, self.n)
        out = np.array([np.asarray(self.f(u), dtype=float).reshape(self.n) for u in flat])
        return out.reshape(U.shape)

    def jacobian(self, U):
        U = np.asarray(U, dtype=float)
        shape = U.shape[:-1] + (self.n, self.n)
        if self.jac is not None and self.vectorized:
            return np.asarray(self.jac(U), dtype=float).reshape(shape)
        flat = U.reshape(-1, self.n)
        if self.jac is not None:
            out = np.array([np.asarray(self.jac(u), dtype=float).reshape(self.n, self.n)
                            for u in flat])
        else:
            out = np.array([fd_jacobian(self, u) for u in flat])
        return out.reshape(shape)

    def in_domain(self, u, margin=None) -> bool:
        m = self.margin if margin is None else margin
        width = self.domain_hi - self.domain_lo
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.domain_lo - m * width) and np.all(u <= self.domain_hi + m * width))


def as_state(model: FluxModel, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (model.n,):
        raise ValueError(f"expected a state of length {model.n}, got shape {u.shape}")
    return u


def _check_domain(model, u):
    if not model.in_domain(u):
        raise DomainError(f"state {u} outside domain box of {model.name}")


def fd_jacobian(model: FluxModel, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    h = EPS ** (1 / 3) * (1 + np.linalg.norm(u))
    A = np.empty((model.n, model.n))
    for j in range(model.n):
        e = np.zeros(model.n)
        e[j] = h
        fp = np.asarray(model.f(u + e), dtype=float).reshape(model.n)
        fm = np.asarray(model.f(u - e), dtype=float).reshape(model.n)
        A[:, j] = (fp - fm) / (2 * h)
    return A


def eval_flux(model: FluxModel, u) -> np.ndarray:
    u = as_state(model, u)
    _check_domain(model, u)
    return model.flux(u)


def jacobian(model: FluxModel, u) -> np.ndarray:
    return model.jacobian(as_state(model, u))


def directional_jacobian(model: FluxModel, u, r) -> np.ndarray:
    """D A(u)[r], the derivative of the characteristic matrix along r."""
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    if model.djac is not None:
        return np.asarray(model.djac(u, r), dtype=float).reshape(model.n, model.n)
    h = EPS ** (1 / 3) * (1 + np.linalg.norm(u))
    return (model.jacobian(u + h * r) - model.jacobian(u - h * r)) / (2 * h)


# ---------------------------------------------------------------------------
# characteristic fields

@dataclass(frozen=True, eq=False)
class CharField:
    family: int
    speed: float
    right: np.ndarray
    left: np.ndarray
    gn_indicator: float


def _gap_tol(lam):
    return 1e-8 * (1 + abs(lam))


def _orient(r, hint=None):
    if hint is not None:
        return -r if float(np.dot(r, hint)) < 0 else r
    for c in r:
        if abs(c) > 1e-8:
            return -r if c < 0 else r
    return r


def char_polynomial(A: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients (highest degree first).

    Faddeev-LeVerrier recursion, fine for the small systems targeted here.
    """
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * eye
        coeffs.append(-np.trace(A @ M) / k)
    return np.array(coeffs)


def _eig_closed_2x2(A):
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    disc = 0.25 * (a - d) ** 2 + b * c
    if disc < 0:
        raise HyperbolicityError(f"complex characteristic speeds (discriminant {disc:.3g})")
    sq = np.sqrt(disc)
    mid = 0.5 * (a + d)
    return np.array([mid - sq, mid + sq])


def _null_vector_2x2(B):
    rows = [B[0], B[1]]
    p, q = max(rows, key=lambda row: np.hypot(row[0], row[1]))
    if np.hypot(p, q) == 0:
        return np.array([1.0, 0.0])
    v = np.array([-q, p])
    return v / np.linalg.norm(v)


def _polish_root(coeffs, lam):
    dcoeffs = np.polyder(coeffs)
    for _ in range(8):
        d = np.polyval(dcoeffs, lam)
        if d == 0:
            break
        step = np.polyval(coeffs, lam) / d
        lam -= step
        if abs(step) <= 4 * EPS * (1 + abs(lam)):
            break
    return lam


def _inverse_iteration(A, lam):
    n = A.shape[0]
    shift = lam + 1e-10 * (1 + abs(lam))
    B = A - shift * np.eye(n)
    x = np.ones(n) / np.sqrt(n)
    for _ in range(6):
        try:
            y = np.linalg.solve(B, x)
        except np.linalg.LinAlgError:
            y = np.linalg.lstsq(B, x, rcond=None)[0]
        x = y / np.linalg.norm(y)
    return x


def eigenvalues_of(A: np.ndarray) -> np.ndarray:
    """Sorted real eigenvalues of a small matrix; raises on complex pairs."""
    n = A.shape[0]
    if n == 1:
        return np.array([A[0, 0]])
    if n == 2:
        return _eig_closed_2x2(A)
    coeffs = char_polynomial(A)
    roots = np.roots(coeffs)
    scale = 1 + np.max(np.abs(roots))
    if np.any(np.abs(roots.imag) > 1e-7 * scale):
        raise HyperbolicityError("complex characteristic speeds")
    lams = np.sort(np.array([_polish_root(coeffs, r) for r in roots.real]))
    return lams


def char_fields(model: FluxModel, u, hint: Optional[Sequence] = None) -> list[CharField]:
    """Characteristic fields at ``u`` sorted by speed.

    ``hint`` is an optional sequence of previous right eigenvectors (one per
    family, ``None`` entries allowed); each new eigenvector is flipped to have
    a positive dot product with its hint.
    """
    u = as_state(model, u)
    A = model.jacobian(u)
    n = model.n
    lams = eigenvalues_of(A)
    for k in range(n - 1):
        if lams[k + 1] - lams[k] <= _gap_tol(lams[k]):
            raise HyperbolicityError(f"characteristic speeds {lams[k]:.6g}, {lams[k + 1]:.6g} coincide")
    fields = []
    for i, lam in enumerate(lams):
        if n == 1:
            r = np.array([1.0])
            ell = np.array([1.0])
        elif n == 2:
            B = A - lam * np.eye(2)
            r = _null_vector_2x2(B)
            ell = _null_vector_2x2(B.T)
        else:
            r = _inverse_iteration(A, lam)
            ell = _inverse_iteration(A.T, lam)
        h = None if hint is None else hint[i]
        r = _orient(r, h)
        ell = ell / float(ell @ r)
        gn = float(ell @ directional_jacobian(model, u, r) @ r)
        fields.append(CharField(family=i + 1, speed=float(lam), right=r, left=ell, gn_indicator=gn))
    return fields


def eigenvalues_many(model: FluxModel, U) -> np.ndarray:
    """Sorted characteristic speeds for an array of states, shape (..., n)."""
    U = np.asarray(U, dtype=float)
    A = model.jacobian(U)
    if model.n == 1:
        return A[..., 0]
    if model.n == 2:
        a, b, c, d = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
        disc = 0.25 * (a - d) ** 2 + b * c
        if np.any(disc < 0):
            raise HyperbolicityError("complex characteristic speeds")
        sq = np.sqrt(disc)
        mid = 0.5 * (a + d)
        return np.stack([mid - sq, mid + sq], axis=-1)
    flat = A.reshape(-1, model.n, model.n)
    out = np.array([eigenvalues_of(M) for M in flat])
    return out.reshape(U.shape)


# ---------------------------------------------------------------------------
# averaged matrix and jump algebra

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def _kink_params(model, um, up):
    """Segment parameters in (0, 1) where the scalar Jacobian has a kink."""
    if model.n != 1 or not model.kinks:
        return np.array([0.0, 1.0])
    k = np.asarray(model.kinks, dtype=float)
    t = (k - um[0]) / (up[0] - um[0])
    return np.unique(np.concatenate([[0.0, 1.0], t[(t > 0) & (t < 1)]]))


def _gl(fun, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = fun(x)                                   # (P, order, m)
    return np.einsum("k,pkm->pm", _GL_W, vals) * half[:, None]


def integrate_panels(fun, edges, tol: float = 1e-12, max_depth: int = 60,
                     max_panels: int = 1 << 16) -> np.ndarray:
    """Integrals of a vectorized ``fun`` over consecutive panels ``edges``.

    Each panel is bisected adaptively (Gauss-Legendre on the panel against the
    sum over its halves) until the two agree to a share of ``tol`` proportional
    to the sub-panel width.  ``fun`` maps an array of abscissae of shape (P, k)
    to values of shape (P, k, m).
    """
    edges = np.asarray(edges, dtype=float)
    P = len(edges) - 1
    if P <= 0:
        return np.zeros((0, 0))
    total_len = max(edges[-1] - edges[0], 1e-300)
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    owner = np.arange(P)
    coarse = _gl(fun, lo, hi)
    out = np.zeros((P, coarse.shape[1]))
    for depth in range(max_depth + 1):
        if len(lo) == 0:
            break
        mid = 0.5 * (lo + hi)
        left = _gl(fun, lo, mid)
        right = _gl(fun, mid, hi)
        fine = left + right
        err = np.max(np.abs(fine - coarse), axis=1)
        conv = err <= tol * (hi - lo) / total_len + 1e-15 * np.max(np.abs(fine), axis=1)
        # the panel budget guards against integrands that never settle (chatter)
        over = 2 * np.count_nonzero(~conv) > max_panels
        stuck = (depth == max_depth) | over | (mid <= lo) | (mid >= hi)
        # near integrable singularities the width share of tol underflows;
        # only a stuck error that matters against tol itself is worth a warning
        loud = stuck & ~conv & (err > 1e-3 * tol)
        if np.any(loud):
            why = "panel budget" if over else f"depth {depth}"
            warnings.warn(f"adaptive quadrature stopped at {why} with error {err[loud].max():.3g}",
                          ConvergenceWarning, stacklevel=2)
        ok = conv | stuck
        np.add.at(out, owner[ok], fine[ok])
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        owner = np.concatenate([owner[keep], owner[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    return out


def averaged_matrix(model: FluxModel, u_minus, u_plus, eps_quad: float = EPS_QUAD,
                    max_depth: int = 40) -> np.ndarray:
    """Segment average of the characteristic matrix between two states.

    Adaptive Gauss-Legendre bisection in the segment parameter, split at any
    declared kinks of the Jacobian.
    """
    um = as_state(model, u_minus)
    up = as_state(model, u_plus)
    _check_domain(model, um)
    _check_domain(model, up)
    if np.array_equal(um, up):
        return model.jacobian(um)
    n = model.n

    def fun(tau):
        states = (1 - tau)[..., None] * um + tau[..., None] * up
        return model.jacobian(states).reshape(tau.shape + (n * n,))

    # the halving test estimates the coarse error; a 100x margin keeps coincidental
    # agreement on oscillatory integrands below eps_quad
    parts = integrate_panels(fun, _kink_params(model, um, up), 1e-2 * eps_quad, max_depth)
    return parts.sum(axis=0).reshape(n, n)


def m_matrix(model: FluxModel, u_minus, xi: float, u_plus) -> np.ndarray:
    return -xi * np.eye(model.n) + averaged_matrix(model, u_minus, u_plus)


def rh_residual(model: FluxModel, u_minus, s: float, u_plus) -> np.ndarray:
    um = as_state(model, u_minus)
    up = as_state(model, u_plus)
    return -s * (up - um) + eval_flux(model, up) - eval_flux(model, um)


def is_rh_jump(model: FluxModel, u_minus, s, u_plus, eps_rh: float = EPS_RH) -> bool:
    um = as_state(model, u_minus)
    up = as_state(model, u_plus)
    return (not np.array_equal(um, up)) and np.linalg.norm(rh_residual(model, um, s, up)) <= eps_rh


# ---------------------------------------------------------------------------
# level sets of the moving-frame flux

def _dedupe(states, radius):
    kept = []
    for s in states:
        if all(np.linalg.norm(s - k) > radius for k in kept):
            kept.append(s)
    return kept


def solve_moving_frame_level(model: FluxModel, xi: float, F, lo, hi, eps_rh: float = EPS_RH,
                             grid: int = 4001, seeds_per_axis: int = 15,
                             dedup: Optional[float] = None) -> list[np.ndarray]:
    """All states u in the box [lo, hi] with -xi u + f(u) = F."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    F = np.atleast_1d(np.asarray(F, dtype=float))
    scale = 1 + np.max(np.abs(F))
    tol = eps_rh * scale
    radius = dedup if dedup is not None else 1e-6 * (1 + np.max(hi - lo))
    if model.n == 1:
        roots = _scalar_level(model, xi, F[0], lo[0], hi[0], tol, grid)
        return _dedupe([np.array([r]) for r in roots], radius)
    return _dedupe(_newton_level(model, xi, F, lo, hi, tol, seeds_per_axis), radius)


def _scalar_level(model, xi, F, a, b, tol, grid):
    def g(x):
        x = np.asarray(x, dtype=float)
        return model.flux(x[..., None])[..., 0] - xi * x - F

    xs = np.linspace(a, b, grid)
    gs = g(xs)
    roots = []
    for i in range(grid):
        if abs(gs[i]) <= tol:
            roots.append(xs[i])
    sign_change = np.nonzero(gs[:-1] * gs[1:] < 0)[0]
    for i in sign_change:
        r = brentq(lambda x: float(g(x)), xs[i], xs[i + 1], xtol=1e-15, rtol=4 * EPS, maxiter=200)
        roots.append(r)
    # touching roots: interior local minima of |g| without a sign change
    ag = np.abs(gs)
    for i in range(1, grid - 1):
        if ag[i] <= ag[i - 1] and ag[i] <= ag[i + 1] and gs[i - 1] * gs[i + 1] > 0 and ag[i] > tol:
            res = minimize_scalar(lambda x: abs(float(g(x))), bounds=(xs[i - 1], xs[i + 1]),
                                  method="bounded", options={"xatol": 1e-13})
            if abs(float(g(res.x))) <= tol:
                roots.append(float(res.x))
    # a flat (multiple) root passes the tolerance on a run of adjacent nodes:
    # keep the best member of each run
    roots = sorted(roots)
    h = (b - a) / (grid - 1)
    out, run = [], []
    for r in roots:
        if run and r - run[-1] > 1.01 * h:
            out.append(min(run, key=lambda x: abs(float(g(x)))))
            run = []
        run.append(r)
    if run:
        out.append(min(run, key=lambda x: abs(float(g(x)))))
    return out


def _polish(model, xi, F, u, gnorm, lo, hi, steps: int = 3):
    # full Newton steps past the acceptance tolerance, kept only while they help
    for _ in range(steps):
        J = model.jacobian(u) - xi * np.eye(model.n)
        try:
            cand = u + np.linalg.solve(J, -(model.flux(u) - xi * u - F))
        except np.linalg.LinAlgError:
            break
        if not (np.all(cand >= lo) and np.all(cand <= hi)):
            break
        cnorm = np.linalg.norm(model.flux(cand) - xi * cand - F)
        if not cnorm < gnorm:
            break
        u, gnorm = cand, cnorm
    return u


def _newton_level(model, xi, F, lo, hi, tol, per_axis):
    axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
    seeds = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.n)
    found, stalled = [], []
    eye = np.eye(model.n)
    for seed in seeds:
        u = seed.copy()
        ok = False
        for _ in range(60):
            G = model.flux(u) - xi * u - F
            gnorm = np.linalg.norm(G)
            if gnorm <= tol:
                ok = True
                u = _polish(model, xi, F, u, gnorm, lo, hi)
                break
            J = model.jacobian(u) - xi * eye
            try:
                step = np.linalg.solve(J, -G)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J, -G, rcond=None)[0]
            t = 1.0
            while t > 1e-6:
                cand = u + t * step
                if np.all(cand >= lo) and np.all(cand <= hi) and \
                        np.linalg.norm(model.flux(cand) - xi * cand - F) < gnorm:
                    break
                t *= 0.5
            else:
                break
            u = cand
        if ok:
            found.append(u)
        elif np.all(u > lo) and np.all(u < hi) and np.linalg.norm(model.flux(u) - xi * u - F) < 1e-3 * (1 + np.linalg.norm(F)):
            stalled.append(seed)
    if stalled:
        warnings.warn(f"{len(stalled)} Newton seeds did not converge: {np.array(stalled)!r}",
                      ConvergenceWarning, stacklevel=3)
    return found


def hugoniot_states(model: FluxModel, u0, xi_star: float, search_box=None,
                    eps_rh: float = EPS_RH) -> list[np.ndarray]:
    """States u in ``search_box`` with -xi*(u - u0) + f(u) - f(u0) = 0, u0 first."""
    u0 = as_state(model, u0)
    if search_box is None:
        lo, hi = model.domain_lo, model.domain_hi
    else:
        lo, hi = search_box
    F = model.flux(u0) - xi_star * u0
    radius = 1e-6 * (1 + np.max(np.atleast_1d(hi) - np.atleast_1d(lo)))
    states = solve_moving_frame_level(model, xi_star, F, lo, hi, eps_rh=eps_rh, dedup=radius)
    out = [u0] + [s for s in states if np.linalg.norm(s - u0) > radius]
    return out


# ---------------------------------------------------------------------------
# catalog

def _box(lo, hi):
    return np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float))


def burgers(box=(-5.0, 5.0)) -> FluxModel:
    lo, hi = _box(*box)
    return FluxModel(
        n=1, name="burgers", vectorized=True, domain_lo=lo, domain_hi=hi,
        f=lambda u: 0.5 * u ** 2,
        jac=lambda u: u[..., None],
        djac=lambda u, r: np.array([[float(r[0])]]),
    )


def quartic(box=(-3.0, 3.0)) -> FluxModel:
    lo, hi = _box(*box)
    return FluxModel(
        n=1, name="quartic", vectorized=True, domain_lo=lo, domain_hi=hi,
        f=lambda u: 0.25 * u ** 4,
        jac=lambda u: (u ** 3)[..., None],
        djac=lambda u, r: np.array([[3.0 * u[0] ** 2 * r[0]]]),
    )


def _osc_f(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(u == 0, 0.0, u ** 5 * np.sin(1 / np.where(u == 0, 1.0, u)))
    return u ** 2 + tail


def _osc_df(u):
    u = np.asarray(u, dtype=float)
    safe = np.where(u == 0, 1.0, u)
    s, c = np.sin(1 / safe), np.cos(1 / safe)
    return np.where(u == 0, 0.0, 2 * u + 5 * u ** 4 * s - u ** 3 * c)


def _osc_d2f(u):
    u = np.asarray(u, dtype=float)
    safe = np.where(u == 0, 1.0, u)
    s, c = np.sin(1 / safe), np.cos(1 / safe)
    return np.where(u == 0, 2.0, 2 + 20 * u ** 3 * s - 8 * u ** 2 * c - u * s)


def oscillatory(box=(-1.5, 1.5)) -> FluxModel:
    """f(u) = u^2 + u^5 sin(1/u), extended by its limits at u = 0."""
    lo, hi = _box(*box)
    return FluxModel(
        n=1, name="oscillatory", vectorized=True, domain_lo=lo, domain_hi=hi,
        f=_osc_f,
        jac=lambda u: _osc_df(u)[..., None],
        djac=lambda u, r: np.array([[float(_osc_d2f(u[0])) * r[0]]]),
        params={"d2f": _osc_d2f},
        kinks=(0.0,),       # smooth away from 0 only
    )


def shallow_water(g: float = 1.0, box=((0.1, -2.0), (4.0, 2.0))) -> FluxModel:
    """States (h, m): f = (m, m^2/h + g h^2/2)."""
    lo, hi = _box(*box)

    def f(U):
        h, m = U[..., 0], U[..., 1]
        return np.stack([m, m ** 2 / h + 0.5 * g * h ** 2], axis=-1)

    def jac(U):
        h, m = U[..., 0], U[..., 1]
        row0 = np.stack([np.zeros_like(h), np.ones_like(h)], axis=-1)
        row1 = np.stack([-(m / h) ** 2 + g * h, 2 * m / h], axis=-1)
        return np.stack([row0, row1], axis=-2)

    def djac(U, r):
        h, m = U
        dh, dm = r
        d10 = 2 * m ** 2 / h ** 3 * dh - 2 * m / h ** 2 * dm + g * dh
        d11 = -2 * m / h ** 2 * dh + 2 / h * dm
        return np.array([[0.0, 0.0], [d10, d11]])

    return FluxModel(n=2, name="shallow_water", vectorized=True, domain_lo=lo, domain_hi=hi,
                     f=f, jac=jac, djac=djac, params={"g": g})


_REGISTRY: dict[str, Callable[..., FluxModel]] = {
    "burgers": burgers,
    "quartic": quartic,
    "oscillatory": oscillatory,
    "shallow_water": shallow_water,
}


def register_flux(name: str, f: Callable, domain_box, df: Optional[Callable] = None,
                  n: int = 1, vectorized: bool = False) -> None:
    """Register a plug-in flux under ``name`` (overwrites silently)."""
    lo, hi = _box(*domain_box)

    def factory(**params):
        return FluxModel(n=n, f=f, jac=df, domain_lo=lo, domain_hi=hi, name=name,
                         vectorized=vectorized, params=dict(params))

    _REGISTRY[name] = factory


def register_factory(name: str, factory: Callable[..., FluxModel]) -> None:
    """Register a parametrized constructor under ``name``."""
    _REGISTRY[name] = factory


def make_flux(name: str, **params) -> FluxModel:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown flux model {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(**params)


def known_fluxes() -> list[str]:
    return sorted(_REGISTRY)
