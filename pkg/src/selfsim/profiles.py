"""Reduced state functions and their essential-image calculus.

A :class:`Profile` is a representative of an L-infinity class: an ordered
list of segments between breakpoints plus an optional overlay of isolated
point values.  All essential-image estimates are sampling based and never
look at the overlay, so they are invariant under modification on finite sets.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyIntervalError, NotContinuousError

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# segment kinds

@dataclass(frozen=True, eq=False)
class Constant:
    state: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state", np.atleast_1d(np.asarray(self.state, dtype=float)))


@dataclass(frozen=True, eq=False)
class Mapped:
    """Continuous map on the closed segment; ``func`` is vectorized in xi."""
    func: Callable
    spec: Optional[dict] = None


@dataclass(frozen=True, eq=False)
class Sampled:
    """Step data: ``values[j]`` holds on ``[xi[j], xi[j+1])``."""
    xi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(xi) != len(vals) or np.any(np.diff(xi) <= 0):
            raise ValueError("sampled segment needs strictly increasing xi matching values")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class Chatter:
    """Oscillates between ``a`` and ``b`` on the sign of sin(1/(xi - center))."""
    center: float
    a: np.ndarray
    b: np.ndarray
    generator: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))

    def evaluate(self, x):
        if self.generator is not None:
            return np.asarray(self.generator(x), dtype=float).reshape(x.shape + (len(self.a),))
        d = x - self.center
        with np.errstate(divide="ignore", invalid="ignore"):
            pick = np.sin(1.0 / np.where(d == 0, 1.0, d)) > 0
        return np.where(pick[..., None], self.a, self.b)


def _eval_segment(seg, x, lo, hi, n):
    if isinstance(seg, Constant):
        return np.broadcast_to(seg.state, x.shape + (n,)).copy()
    if isinstance(seg, Mapped):
        xc = np.clip(x, lo, hi)
        return np.asarray(seg.func(xc), dtype=float).reshape(x.shape + (n,))
    if isinstance(seg, Sampled):
        idx = np.clip(np.searchsorted(seg.xi, x, side="right") - 1, 0, len(seg.xi) - 1)
        return seg.values[idx]
    if isinstance(seg, Chatter):
        return seg.evaluate(x)
    raise TypeError(f"unknown segment kind {type(seg).__name__}")


# ---------------------------------------------------------------------------
# profile

@dataclass(frozen=True, eq=False)
class Profile:
    breakpoints: tuple
    segments: tuple
    n: int
    overlay: tuple = ()
    ess_bound: float = 0.0

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if len(self.segments) != len(bps) + 1:
            raise ValueError("need exactly one more segment than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not isinstance(self.segments[0], Constant) or not isinstance(self.segments[-1], Constant):
            raise ValueError("outermost segments must be constant")
        object.__setattr__(self, "breakpoints", bps)
        ov = tuple((float(x), np.atleast_1d(np.asarray(s, dtype=float))) for x, s in self.overlay)
        object.__setattr__(self, "overlay", ov)
        if self.ess_bound <= 0:
            object.__setattr__(self, "ess_bound", self._estimate_bound())

    def bounds(self, j):
        lo = -np.inf if j == 0 else self.breakpoints[j - 1]
        hi = np.inf if j == len(self.breakpoints) else self.breakpoints[j]
        return lo, hi

    def _estimate_bound(self):
        best = 0.0
        for j, seg in enumerate(self.segments):
            lo, hi = self.bounds(j)
            if isinstance(seg, Constant):
                vals = seg.state[None, :]
            elif isinstance(seg, Mapped):
                vals = _eval_segment(seg, np.linspace(lo, hi, 2049), lo, hi, self.n)
            elif isinstance(seg, Sampled):
                vals = seg.values
            else:
                vals = np.stack([seg.a, seg.b])
            best = max(best, float(np.max(np.linalg.norm(vals, axis=-1))))
        return best if best > 0 else 1.0

    def values(self, xi, overlay: bool = True) -> np.ndarray:
        """Vectorized representative; shape ``xi.shape + (n,)``."""
        x = np.asarray(xi, dtype=float)
        out = np.empty(x.shape + (self.n,))
        idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right")
        for j, seg in enumerate(self.segments):
            mask = idx == j
            if np.any(mask):
                lo, hi = self.bounds(j)
                out[mask] = _eval_segment(seg, x[mask], lo, hi, self.n)
        if overlay:
            for pt, st in self.overlay:
                out[x == pt] = st
        return out

    def one_sided(self, xi: float, side: str) -> Optional[np.ndarray]:
        """Segment limit at ``xi`` from the given side (None if it does not exist)."""
        bps = np.asarray(self.breakpoints)
        if side == "left":
            j = int(np.searchsorted(bps, xi, side="left"))
        else:
            j = int(np.searchsorted(bps, xi, side="right"))
        seg = self.segments[j]
        lo, hi = self.bounds(j)
        if isinstance(seg, Chatter):
            return None
        if isinstance(seg, Sampled) and side == "left":
            x = np.nextafter(xi, -np.inf)
            return _eval_segment(seg, np.array([x]), lo, hi, self.n)[0]
        return _eval_segment(seg, np.array([xi]), lo, hi, self.n)[0]

    def panel_points(self) -> np.ndarray:
        """Breakpoints plus internal step edges (quadrature must split here)."""
        pts = list(self.breakpoints)
        for j, seg in enumerate(self.segments):
            if isinstance(seg, Sampled):
                lo, hi = self.bounds(j)
                pts.extend(x for x in seg.xi if lo < x < hi)
        return np.unique(np.asarray(pts, dtype=float))

    def with_overlay(self, punctures: Sequence) -> "Profile":
        return replace(self, overlay=tuple(self.overlay) + tuple(punctures))


def eval_profile(p: Profile, xi: float) -> np.ndarray:
    return p.values(np.array([float(xi)]))[0]


def piecewise(pieces: Sequence, n: Optional[int] = None, overlay=()) -> Profile:
    """Build a profile from ``[seg0, b0, seg1, b1, ..., segK]``."""
    segs = list(pieces[0::2])
    bps = list(pieces[1::2])
    if n is None:
        first = segs[0]
        n = len(first.state)
    return Profile(breakpoints=tuple(bps), segments=tuple(segs), n=n, overlay=overlay)


def constant_profile(c) -> Profile:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return Profile(breakpoints=(), segments=(Constant(c),), n=len(c))


def step_profile(u_left, u_right, at: float = 0.0) -> Profile:
    return piecewise([Constant(u_left), at, Constant(u_right)])


def power_map(exponent: float, center: float = 0.0, coeff=1.0, offset=0.0, n: int = 1) -> Mapped:
    coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (n,)).copy()
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (n,)).copy()

    def func(x):
        d = np.asarray(x, dtype=float) - center
        s = np.sign(d) * np.abs(d) ** exponent
        return offset + s[..., None] * coeff

    spec = {"map": "power", "exponent": exponent, "center": center,
            "coeff": coeff.tolist(), "offset": offset.tolist()}
    return Mapped(func=func, spec=spec)


def affine_map(slope, offset=0.0, n: int = 1) -> Mapped:
    slope = np.broadcast_to(np.asarray(slope, dtype=float), (n,)).copy()
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (n,)).copy()

    def func(x):
        return offset + np.asarray(x, dtype=float)[..., None] * slope

    return Mapped(func=func, spec={"map": "affine", "slope": slope.tolist(), "offset": offset.tolist()})


def quartic_rarefaction_profile() -> Profile:
    """Riemann solution of u_t + (u^4/4)_x = 0 with data -1, 1."""
    return piecewise([Constant(-1.0), -1.0, power_map(1 / 3), 1.0, Constant(1.0)])


# ---------------------------------------------------------------------------
# essential images

@dataclass(frozen=True)
class EssImQuery:
    r0: float = 0.5
    rho: float = 0.5
    K: int = 12
    n_samples: int = 4096
    value_resolution: Optional[float] = None
    measure_floor: Optional[float] = None
    k_stab: int = 3
    k_max: int = 64
    seed: int = 0
    value_tol: Optional[float] = None

    def __post_init__(self):
        if not (self.r0 > 0 and 0 < self.rho < 1 and self.K >= 0):
            raise ValueError("radius schedule needs r0 > 0, 0 < rho < 1, K >= 0")
        if self.value_resolution is not None and self.value_resolution <= 0:
            raise ValueError("value_resolution must be positive")
        if self.mu_min * self.n_samples < 2 - 1e-12:
            raise ValueError("measure_floor * n_samples must be at least 2")

    @property
    def mu_min(self) -> float:
        return self.measure_floor if self.measure_floor is not None else 8.0 / self.n_samples

    def delta(self, p: Profile) -> float:
        return self.value_resolution if self.value_resolution is not None else 1e-3 * p.ess_bound

    def vtol(self, p: Profile) -> float:
        return self.value_tol if self.value_tol is not None else 1e-10 * (1 + p.ess_bound)

    def for_scan(self, dxi: float, n_samples: int = 256) -> "EssImQuery":
        """Lighter query for grid scans: radii start at half the grid step."""
        return replace(self, r0=0.5 * dxi, K=max(self.k_stab - 1, 0), n_samples=n_samples,
                       measure_floor=None if self.measure_floor is None else max(self.measure_floor, 2.0 / n_samples))


@dataclass(frozen=True, eq=False)
class Cluster:
    rep: np.ndarray
    radius: float
    fraction: float


@dataclass(frozen=True, eq=False)
class AccumSet:
    clusters: tuple
    side: str
    final_radius: float = float("nan")

    @property
    def reps(self) -> np.ndarray:
        return np.array([c.rep for c in self.clusters])

    def __len__(self):
        return len(self.clusters)

    @property
    def is_singleton(self) -> bool:
        return len(self.clusters) == 1

    def diameter(self) -> float:
        R = self.reps
        if len(R) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(R[:, None, :] - R[None, :, :], axis=-1)))

    def same_as(self, other: "AccumSet") -> bool:
        return len(self) == len(other) and np.array_equal(self.reps, other.reps) and \
            all(a.fraction == b.fraction and a.radius == b.radius
                for a, b in zip(self.clusters, other.clusters))


def hausdorff(A, B) -> float:
    RA = A.reps if isinstance(A, AccumSet) else np.atleast_2d(A)
    RB = B.reps if isinstance(B, AccumSet) else np.atleast_2d(B)
    if len(RA) == 0 or len(RB) == 0:
        return 0.0 if len(RA) == len(RB) else np.inf
    d = np.linalg.norm(RA[:, None, :] - RB[None, :, :], axis=-1)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


_SIDE_CODE = {"left": 0, "right": 1, "both": 2, "interval": 3}


def _seed_for(seed: int, k: int, side: str) -> int:
    digest = hashlib.sha256(struct.pack("<qqq", seed, k, _SIDE_CODE[side])).digest()
    return int.from_bytes(digest[:8], "little")


def _strata(a, b, N, seed, k, side):
    rng = np.random.default_rng(_seed_for(seed, k, side))
    u = rng.random(N)
    u[u == 0] = 0.5
    t = (np.arange(N) + u) / N
    return a[:, None] + (b - a)[:, None] * t[None, :]


def _avoid_breakpoints(p: Profile, x):
    pts = p.panel_points()
    if len(pts):
        hit = np.isin(x, pts)
        if np.any(hit):
            x = x.copy()
            x[hit] = np.nextafter(x[hit], np.inf)
    return x


def _closure_values(p: Profile, a, b):
    """Closure values of mapped segments over each interval, shape (M, 2*S, n), NaN if absent."""
    cols = []
    for j, seg in enumerate(p.segments):
        if not isinstance(seg, Mapped):
            continue
        lo, hi = p.bounds(j)
        overlap = (a < hi) & (b > lo)
        for end in (np.maximum(a, lo), np.minimum(b, hi)):
            vals = np.full(a.shape + (p.n,), np.nan)
            if np.any(overlap):
                vals[overlap] = _eval_segment(seg, end[overlap], lo, hi, p.n)
            cols.append(vals)
    if not cols:
        return np.full(a.shape + (0, p.n), np.nan)
    return np.stack(cols, axis=1)


def _lexmin(vals):
    """Lexicographic minimum along axis -2 of (..., N, n), NaNs ignored."""
    cand = np.ones(vals.shape[:-1], dtype=bool) & ~np.isnan(vals[..., 0])
    for c in range(vals.shape[-1]):
        col = np.where(cand, vals[..., c], np.inf)
        m = col.min(axis=-1, keepdims=True)
        cand &= col == m
    idx = np.argmax(cand, axis=-1)
    return np.take_along_axis(vals, idx[..., None, None], axis=-2)[..., 0, :]


def _intervals(xi, r, side):
    if side == "left":
        return xi - r, xi
    if side == "right":
        return xi, xi + r
    return xi - r, xi + r


def _batch_boxes(p, xi, r, side, N, seed, k):
    a, b = _intervals(xi, r, side)
    x = _avoid_breakpoints(p, _strata(a, b, N, seed, k, side))
    vals = p.values(x)
    clos = _closure_values(p, a, b)
    allv = np.concatenate([vals, clos], axis=1)
    lo = np.nanmin(allv, axis=1)
    hi = np.nanmax(allv, axis=1)
    return allv, lo, hi


def _radius_floor(xi):
    return 1e4 * EPS * (1 + np.abs(xi))


def _cluster(values, weights, delta, mu_min, keep_all=False):
    """Single-linkage components at ``delta``, measure filter, greedy leaders."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return []
    order = np.lexsort(values.T[::-1])
    values = values[order]
    weights = np.asarray(weights, dtype=float)[order]
    n = values.shape[1]
    if n == 1:
        gaps = np.diff(values[:, 0]) > delta
        labels = np.concatenate([[0], np.cumsum(gaps)])
    else:
        tree = cKDTree(values)
        pairs = tree.query_pairs(delta, output_type="ndarray")
        from scipy.sparse import coo_matrix
        g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else
                       (np.zeros(0), (np.zeros(0, int), np.zeros(0, int))), shape=(len(values),) * 2)
        _, labels = connected_components(g, directed=False)
    clusters = []
    for lab in np.unique(labels):
        members = labels == lab
        if not keep_all and weights[members].sum() < mu_min - 1e-12:
            continue
        vals = values[members]
        w = weights[members]
        unassigned = np.ones(len(vals), dtype=bool)
        # vals are in lexicographic order, so the first unassigned is the leader
        while np.any(unassigned):
            i = int(np.argmax(unassigned))
            d = np.linalg.norm(vals - vals[i], axis=1)
            take = unassigned & (d <= delta)
            clusters.append(Cluster(rep=vals[i].copy(), radius=float(d[take].max()),
                                    fraction=float(w[take].sum())))
            unassigned &= ~take
    clusters.sort(key=lambda c: tuple(c.rep))
    return clusters


def _refined_samples(p: Profile, a: float, b: float, N: int, seed: int, k: int, side: str,
                     delta: float, max_rounds: int = 48):
    """Stratified samples of (a, b) plus weightless refinements that trace mapped segments."""
    x = _avoid_breakpoints(p, _strata(np.array([a]), np.array([b]), N, seed, k, side)[0])
    w = np.full(N, 1.0 / N)
    bps = np.asarray(p.breakpoints)
    extra_x = []
    for j, seg in enumerate(p.segments):
        if isinstance(seg, Mapped):
            lo, hi = p.bounds(j)
            if a < hi and b > lo:
                extra_x.extend([max(a, lo), min(b, hi)])
    xs = np.concatenate([x, np.asarray(extra_x, dtype=float)])
    ws = np.concatenate([w, np.zeros(len(extra_x))])
    seg_idx = np.searchsorted(bps, xs, side="right")
    # closure points sit on breakpoints; attribute them to the mapped segment
    for i in range(N, len(xs)):
        if xs[i] in p.breakpoints:
            j_right = seg_idx[i]
            if not isinstance(p.segments[j_right], Mapped):
                seg_idx[i] = j_right - 1
    vals = np.empty((len(xs), p.n))
    for j in np.unique(seg_idx):
        m = seg_idx == j
        lo, hi = p.bounds(j)
        if isinstance(p.segments[j], Mapped):
            vals[m] = _eval_segment(p.segments[j], xs[m], lo, hi, p.n)
        else:
            vals[m] = p.values(xs[m])
    mapped_seg = np.array([isinstance(p.segments[j], Mapped) for j in seg_idx])
    for _ in range(max_rounds):
        order = np.argsort(xs, kind="stable")
        xs, ws, vals, seg_idx, mapped_seg = xs[order], ws[order], vals[order], seg_idx[order], mapped_seg[order]
        jump = np.linalg.norm(np.diff(vals, axis=0), axis=1) > delta
        same = (seg_idx[:-1] == seg_idx[1:]) & mapped_seg[:-1]
        gap_ok = np.diff(xs) > 4 * EPS * (1 + np.abs(xs[:-1]))
        bad = np.nonzero(jump & same & gap_ok)[0]
        if len(bad) == 0:
            break
        mids = 0.5 * (xs[bad] + xs[bad + 1])
        midseg = seg_idx[bad]
        mvals = np.empty((len(mids), p.n))
        for j in np.unique(midseg):
            m = midseg == j
            lo, hi = p.bounds(j)
            mvals[m] = _eval_segment(p.segments[j], mids[m], lo, hi, p.n)
        xs = np.concatenate([xs, mids])
        ws = np.concatenate([ws, np.zeros(len(mids))])
        vals = np.concatenate([vals, mvals])
        seg_idx = np.concatenate([seg_idx, midseg])
        mapped_seg = np.concatenate([mapped_seg, np.ones(len(mids), dtype=bool)])
    return vals, ws


def essim_interval(p: Profile, interval, q: EssImQuery = EssImQuery(), k: int = 0,
                   side: str = "interval") -> AccumSet:
    """Cluster cover of the essential image of ``p`` restricted to ``(a, b)``."""
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise EmptyIntervalError(f"interval ({a}, {b}) is empty")
    delta = q.delta(p)
    vals, ws = _refined_samples(p, a, b, q.n_samples, q.seed, k, side, delta)
    clusters = _cluster(vals, ws, delta, q.mu_min)
    return AccumSet(clusters=tuple(clusters), side=side, final_radius=b - a)


def _one_side_full(p: Profile, xi: float, side: str, q: EssImQuery) -> AccumSet:
    delta = q.delta(p)
    floor = _radius_floor(xi)
    history = []
    result = None
    for k in range(q.k_max + 1):
        r = q.r0 * q.rho ** k
        if r < floor:
            break
        a, b = _intervals(xi, r, side)
        vals, ws = _refined_samples(p, a, b, q.n_samples, q.seed, k, side, delta)
        clusters = _cluster(vals, ws, delta, q.mu_min)
        result = AccumSet(clusters=tuple(clusters), side=side, final_radius=r)
        history.append(result)
        if k >= q.K and _is_stable(history, q.k_stab, delta):
            break
    return result


def _is_stable(history, k_stab, delta):
    if len(history) < k_stab:
        return False
    last = history[-k_stab:]
    if all(len(s) == 1 for s in last):
        return True
    if any(len(s) == 1 for s in last):
        return False
    close = all(hausdorff(s, t) <= delta for s, t in zip(last, last[1:]))
    return close and last[-1].diameter() >= 0.95 * last[0].diameter()


def one_sided_batch(p: Profile, xis, side: str, q: EssImQuery) -> list:
    """Accumulation sets on one side for many speeds at once.

    Singleton limits are resolved with a vectorized bounding-box test; the
    remaining nodes fall back to full clustering.
    """
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    M = len(xis)
    delta = q.delta(p)
    results: list = [None] * M
    run = np.zeros(M, dtype=int)            # consecutive singleton radii
    shrink_hist = [[] for _ in range(M)]
    active = np.arange(M)
    floor = _radius_floor(xis)
    k = 0
    while len(active) and k <= q.k_max:
        r = q.r0 * q.rho ** k
        too_small = r < floor[active]
        for i in active[too_small]:
            results[i] = _one_side_full(p, xis[i], side, q)
        active = active[~too_small]
        if not len(active):
            break
        allv, lo, hi = _batch_boxes(p, xis[active], r, side, q.n_samples, q.seed, k)
        diam = np.linalg.norm(hi - lo, axis=-1)
        single = diam <= delta
        run[active] = np.where(single, run[active] + 1, 0)
        done = np.zeros(len(active), dtype=bool)
        resolved = single & (run[active] >= q.k_stab) & (k >= q.K)
        if np.any(resolved):
            reps = _lexmin(allv[resolved])
            rad = np.nanmax(np.linalg.norm(allv[resolved] - reps[:, None, :], axis=-1), axis=1)
            for j, i in enumerate(active[resolved]):
                results[i] = AccumSet(clusters=(Cluster(rep=reps[j], radius=float(rad[j]), fraction=1.0),),
                                      side=side, final_radius=r)
            done |= resolved
        for j, i in enumerate(active):
            if single[j]:
                continue
            shrink_hist[i].append(diam[j])
            h = shrink_hist[i]
            stalled = k >= q.K and len(h) >= q.k_stab and h[-1] >= 0.95 * h[-q.k_stab]
            if stalled:
                results[i] = _one_side_full(p, xis[i], side, q)
                done[j] = True
        active = active[~done]
        k += 1
    for i in active:
        results[i] = _one_side_full(p, xis[i], side, q)
    return results


def merge_accum(A: AccumSet, B: AccumSet, delta: float, side: str = "two-sided") -> AccumSet:
    vals = np.concatenate([A.reps, B.reps]) if len(A) and len(B) else (A.reps if len(A) else B.reps)
    w = np.array([c.fraction / 2 for c in A.clusters] + [c.fraction / 2 for c in B.clusters])
    radii = np.array([c.radius for c in A.clusters] + [c.radius for c in B.clusters])
    merged = _cluster(vals, w, delta, 0.0, keep_all=True)
    out = []
    for c in merged:
        d = np.linalg.norm(vals - c.rep, axis=1)
        take = d <= delta
        out.append(Cluster(rep=c.rep, radius=float(np.max(d[take] + radii[take])), fraction=c.fraction))
    return AccumSet(clusters=tuple(out), side=side,
                    final_radius=max(A.final_radius, B.final_radius))


def accum_sets(p: Profile, xi: float, q: EssImQuery = EssImQuery()):
    """(left, right, union) accumulation sets at ``xi``."""
    left = one_sided_batch(p, [xi], "left", q)[0]
    right = one_sided_batch(p, [xi], "right", q)[0]
    return left, right, merge_accum(left, right, q.delta(p))


def accum_two_sided(p: Profile, xi: float, q: EssImQuery = EssImQuery()) -> AccumSet:
    """Accumulation set computed directly from symmetric intervals."""
    return one_sided_batch(p, [xi], "both", q)[0]


# ---------------------------------------------------------------------------
# point classification

@dataclass(frozen=True, eq=False)
class PointClass:
    kind: str                   # "continuity" | "jump" | "general"
    xi: float
    left: AccumSet
    right: AccumSet
    value: Optional[np.ndarray] = None

    @property
    def is_continuity(self):
        return self.kind == "continuity"


def limit_values(p: Profile, xis, q: EssImQuery, r0: Optional[float] = None, rho: float = 0.1,
                 n_samples: int = 64, side: str = "both"):
    """Limits at points with singleton accumulation sets, refined until the value box is below ``vtol``.

    ``side`` selects two-sided ("both") or one-sided ("left" / "right") neighbourhoods.
    """
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    tol = q.vtol(p)
    out = np.full((len(xis), p.n), np.nan)
    active = np.arange(len(xis))
    r = q.r0 if r0 is None else r0
    floor = _radius_floor(xis)
    k = 0
    while len(active):
        _, lo, hi = _batch_boxes(p, xis[active], r, side, n_samples, q.seed, 1000 + k)
        center = 0.5 * (lo + hi)
        out[active] = center
        small = np.linalg.norm(hi - lo, axis=-1) <= tol
        at_floor = r * rho < floor[active]
        active = active[~(small | at_floor)]
        r *= rho
        k += 1
    return out


def classify_nodes(p: Profile, xis, q: EssImQuery, with_values: bool = True) -> list:
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    delta = q.delta(p)
    lefts = one_sided_batch(p, xis, "left", q)
    rights = one_sided_batch(p, xis, "right", q)
    kinds = []
    for L, R in zip(lefts, rights):
        if L.is_singleton and R.is_singleton:
            d = np.linalg.norm(L.reps[0] - R.reps[0])
            kinds.append("continuity" if d <= delta else "jump")
        else:
            kinds.append("general")
    values = np.full((len(xis), p.n), np.nan)
    cont = np.array([k == "continuity" for k in kinds])
    if with_values and np.any(cont):
        values[cont] = limit_values(p, xis[cont], q, r0=q.r0 * q.rho ** q.K)
    return [PointClass(kind=k, xi=float(x), left=L, right=R, value=values[i] if k == "continuity" else None)
            for i, (k, x, L, R) in enumerate(zip(kinds, xis, lefts, rights))]


def classify_point(p: Profile, xi: float, q: EssImQuery = EssImQuery()) -> PointClass:
    return classify_nodes(p, [xi], q)[0]


def grid_nodes(a: float, b: float, dxi: float, closed: bool = False) -> np.ndarray:
    """Grid anchored at integer multiples of ``dxi`` inside (a, b)."""
    k0 = int(np.ceil(a / dxi - 1e-9))
    k1 = int(np.floor(b / dxi + 1e-9))
    ks = np.arange(k0, k1 + 1)
    nodes = np.round(ks * dxi, 12)
    if not closed:
        nodes = nodes[(nodes > a + 1e-12) & (nodes < b - 1e-12)]
    return nodes


@dataclass(frozen=True, eq=False)
class ContinuousRep:
    xi: np.ndarray
    values: np.ndarray
    modulus: float


def continuous_representative(p: Profile, interval, q: EssImQuery = EssImQuery(),
                              dxi: float = 1e-2, scan_step: Optional[float] = None) -> ContinuousRep:
    """Values at grid nodes of ``interval``; the scan radius follows ``scan_step`` (default ``dxi``)."""
    a, b = interval
    nodes = grid_nodes(a, b, dxi)
    step = dxi if scan_step is None else scan_step
    cls = classify_nodes(p, nodes, q.for_scan(step) if q.r0 > step else q)
    for c in cls:
        if not c.is_continuity:
            raise NotContinuousError(f"not an essential continuity point: xi = {c.xi:.6g} ({c.kind})", xi=c.xi)
    vals = np.array([c.value for c in cls])
    mod = float(np.max(np.linalg.norm(np.diff(vals, axis=0), axis=1))) if len(vals) > 1 else 0.0
    return ContinuousRep(xi=nodes, values=vals, modulus=mod)
