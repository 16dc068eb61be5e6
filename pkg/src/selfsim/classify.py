"""Speed-axis partition into constant, resonant and discontinuous parts, and the structure report."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dafermos import DafermosReport, accumulation_flux_check, verify_weak
from .errors import NotSingletonError, SelfSimError
from .flux_models import EPS_RH, FluxModel, eigenvalues_many, m_matrix, rh_residual
from .profiles import (AccumSet, EssImQuery, Profile, accum_sets, classify_nodes, essim_interval,
                       grid_nodes, limit_values, merge_accum, one_sided_batch)
from .wavecurves import verify_rarefaction_segment

EXIT_OK, EXIT_ACCUMULATING, EXIT_NOT_WEAK = 0, 2, 3


@dataclass(frozen=True)
class ClassifyConfig:
    dxi: float = 1e-3
    res_band: Optional[float] = None        # default dxi / 2
    merge_radius: Optional[float] = None    # default 2 dxi
    s_prime_radius: float = 0.1
    s_prime_min_points: int = 3
    s_prime_max_ratio: float = 0.75
    lambda_override: Optional[float] = None
    eps_rh: float = EPS_RH
    eps_det: float = 1e-10
    bisect_width: float = 1e-11
    dafermos_dxi: float = 1e-2
    tol_weak: Optional[float] = None

    def __post_init__(self):
        if self.dxi <= 0 or self.s_prime_radius <= 0:
            raise ValueError("dxi and radii must be positive")
        if self.res_band is not None and self.res_band <= 0:
            raise ValueError("res_band must be positive")
        if self.merge_radius is not None and self.merge_radius <= 0:
            raise ValueError("merge_radius must be positive")

    @property
    def band(self) -> float:
        return 0.5 * self.dxi if self.res_band is None else self.res_band

    @property
    def merge(self) -> float:
        return 2 * self.dxi if self.merge_radius is None else self.merge_radius


# ---------------------------------------------------------------------------
# bounds

def constancy_bounds(model: FluxModel, p: Profile, q: EssImQuery = EssImQuery()):
    """(xi_L, xi_R, Lambda) from the spectral range over the essential image of the whole profile."""
    bps = p.breakpoints or (0.0,)
    a, b = min(bps) - 1.0, max(bps) + 1.0
    reps = essim_interval(p, (a, b), q).reps
    lam = eigenvalues_many(model, reps)
    spread = float(lam.max() - lam.min())
    margin = 0.1 + 0.05 * spread
    xi_l = float(min(lam[:, 0].min() - margin, a))
    xi_r = float(max(lam[:, -1].max() + margin, b))
    gap = math.inf if model.n == 1 else float(np.min(np.diff(lam, axis=1)))
    return xi_l, xi_r, gap


# ---------------------------------------------------------------------------
# base partition

@dataclass(eq=False)
class BaseLabels:
    nodes: np.ndarray
    labels: np.ndarray          # "C" | "W" | "S" per node
    values: np.ndarray          # continuous representative (nan at S nodes)
    resonance: np.ndarray       # min_i |xi - lambda_i(v)| (nan at S nodes)
    s_points: list              # coalesced discontinuity speeds
    bounds: tuple               # (xi_L, xi_R, Lambda)
    # located speeds that could not be pinned to a breakpoint: speed -> bracket
    brackets: dict = field(default_factory=dict)


def _resonance_distance(model, xs, V):
    lam = eigenvalues_many(model, V)
    return np.min(np.abs(lam - xs[:, None]), axis=1)


def _locate_jumps(p: Profile, a, b, va, vb, delta, q: EssImQuery, w_min: float):
    """Bisect adjacent continuity nodes whose values differ by more than ``delta``."""
    found = []
    a, b, va, vb = a.copy(), b.copy(), va.copy(), vb.copy()
    width = float(b[0] - a[0]) if len(a) else 0.0
    while len(a):
        gap = np.linalg.norm(vb - va, axis=1)
        keep = gap > delta
        if width <= w_min:
            found += [(x, y, True) for x, y in zip(a[keep], b[keep])]
            break
        a, b, va, vb = a[keep], b[keep], va[keep], vb[keep]
        if not len(a):
            break
        mid = 0.5 * (a + b)
        cls = classify_nodes(p, mid, q.for_scan(width, n_samples=64))
        disc = np.array([not c.is_continuity for c in cls])
        found += [(x, y, False) for x, y in zip(a[disc], b[disc])]
        vm = np.array([c.value if c.is_continuity else np.full(p.n, np.nan) for c in cls])
        cont = ~disc
        a, b, va, vb, vm, mid = a[cont], b[cont], va[cont], vb[cont], vm[cont], mid[cont]
        left_big = np.linalg.norm(vm - va, axis=1) >= np.linalg.norm(vb - vm, axis=1)
        b = np.where(left_big, mid, b)
        vb = np.where(left_big[:, None], vm, vb)
        a = np.where(left_big, a, mid)
        va = np.where(left_big[:, None], va, vm)
        width *= 0.5
    return sorted(found)


def _snap(brackets, breakpoints):
    """Speeds for located brackets; a declared breakpoint inside a bracket wins.

    Brackets that bisection shrank to full resolution are kept for speeds that
    did not snap, so the one-sided sets can be read at the bracket ends.
    """
    bps = np.asarray(breakpoints, dtype=float)
    out = {}
    for a, b, final in brackets:
        w = b - a
        hit = bps[(bps >= a - w) & (bps <= b + w)] if len(bps) else bps
        x = float(hit[np.argmin(np.abs(hit - 0.5 * (a + b)))]) if len(hit) else float(0.5 * (a + b))
        out[x] = (float(a), float(b)) if final and not len(hit) else None
    return out


def _coalesce(points, radius, anchors=()):
    """Merge runs of nearby points; a run collapses onto an anchor inside it when there is one."""
    pts = sorted(points)
    anchors = np.asarray(sorted(anchors), dtype=float)

    def centre(run):
        hit = anchors[(anchors >= run[0] - radius) & (anchors <= run[-1] + radius)] if len(anchors) else anchors
        if len(hit):
            mid = 0.5 * (run[0] + run[-1])
            return float(hit[np.argmin(np.abs(hit - mid))])
        return 0.5 * (run[0] + run[-1])

    out, run = [], []
    for x in pts:
        if run and x - run[-1] > radius:
            out.append(centre(run))
            run = []
        run.append(x)
    if run:
        out.append(centre(run))
    return out


def partition_axis(model: FluxModel, p: Profile, cfg: ClassifyConfig = ClassifyConfig(),
                   q: EssImQuery = EssImQuery(), bounds=None) -> BaseLabels:
    """Label every grid node in [xi_L - 1, xi_R + 1] as C, W or S."""
    if bounds is None:
        bounds = constancy_bounds(model, p, q)
    xi_l, xi_r, lam_gap = bounds
    nodes = grid_nodes(xi_l - 1, xi_r + 1, cfg.dxi, closed=True)
    cls = classify_nodes(p, nodes, q.for_scan(cfg.dxi))
    cont = np.array([c.is_continuity for c in cls])
    values = np.full((len(nodes), p.n), np.nan)
    values[cont] = np.array([c.value for c in cls if c.is_continuity])
    res = np.full(len(nodes), np.nan)
    if np.any(cont):
        res[cont] = _resonance_distance(model, nodes[cont], values[cont])
    labels = np.where(cont, np.where(res > cfg.band, "C", "W"), "S")
    # discontinuities hidden between two continuity nodes
    pair = cont[:-1] & cont[1:]
    gap = np.zeros(len(nodes) - 1)
    gap[pair] = np.linalg.norm(values[1:][pair] - values[:-1][pair], axis=1)
    idx = np.nonzero(pair & (gap > q.delta(p)))[0]
    hidden = _locate_jumps(p, nodes[idx], nodes[idx + 1], values[idx], values[idx + 1], q.delta(p), q,
                           cfg.bisect_width) if len(idx) else []
    located = _snap(hidden, p.breakpoints)
    anchors = list(p.breakpoints) + list(located)
    s_points = _coalesce(list(nodes[~cont]) + list(located), cfg.merge, anchors)
    brackets = {s: located[s] for s in s_points if located.get(s) is not None}
    return BaseLabels(nodes=nodes, labels=labels, values=values, resonance=res, s_points=s_points,
                      bounds=bounds, brackets=brackets)


# ---------------------------------------------------------------------------
# refinement

@dataclass
class Component:
    label: str                  # "C" | "R" | "W"
    a: float                    # bounding speeds (neighbouring non-member items, or range ends)
    b: float
    first: float                # first / last member node
    last: float
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None
    mean_state: Optional[np.ndarray] = None
    spread: float = 0.0


@dataclass(eq=False)
class JumpDiagnostics:
    xi: float
    left: AccumSet
    right: AccumSet
    pairs: list                 # (u_minus, u_plus, |rh residual|, |det M|)
    kind: str                   # "jump" | "general"
    max_rh: float
    max_det: float
    flux_check: Optional[float] = None
    flux_tol: Optional[float] = None
    anomalies: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.anomalies


@dataclass(frozen=True)
class Wave:
    kind: str                   # "constant" | "rarefaction" | "jump"
    left_state: np.ndarray
    right_state: np.ndarray
    interval: tuple
    family: Optional[int] = None
    speed: Optional[float] = None

    def describe(self) -> str:
        fmt = lambda u: "(" + ", ".join(f"{x:.6g}" for x in np.atleast_1d(u)) + ")"
        if self.kind == "constant":
            return f"constant {fmt(self.left_state)} on ({self.interval[0]:.6g}, {self.interval[1]:.6g})"
        if self.kind == "rarefaction":
            return (f"{self.family}-rarefaction on ({self.interval[0]:.6g}, {self.interval[1]:.6g}) "
                    f"from {fmt(self.left_state)} to {fmt(self.right_state)}")
        return f"jump {fmt(self.left_state)} -> {fmt(self.right_state)} at speed {self.speed:.10g}"


@dataclass(eq=False)
class PartitionReport:
    bounds: tuple
    gap_constant: float
    base: BaseLabels
    components: list
    iso_s: list
    s_points: list
    e_points: list              # (xi, case) with case 1 or 2
    r_intervals: list
    s_prime: list
    closure_ok: bool
    anomalies: list = field(default_factory=list)
    jumps: list = field(default_factory=list)
    rarefactions: list = field(default_factory=list)
    constancy: list = field(default_factory=list)
    gap_checks: list = field(default_factory=list)
    waves: Optional[list] = None
    weak: Optional[DafermosReport] = None
    exit_code: int = EXIT_OK

    @property
    def verified(self) -> bool:
        return self.weak is not None and self.weak.verdict


def _items(base: BaseLabels, cfg: ClassifyConfig):
    """Ordered (xi, label, value) items: grid nodes outside discontinuities plus S points."""
    nodes, labels = base.nodes, base.labels
    keep = labels != "S"
    items = [(float(x), str(l), v) for x, l, v in zip(nodes[keep], labels[keep], base.values[keep])]
    items += [(float(x), "S", None) for x in base.s_points]
    items.sort(key=lambda t: (t[0], {"S": 1}.get(t[1], 0)))
    return items


def _s_prime(speeds, cfg: ClassifyConfig):
    """Chains of >= s_prime_min_points discontinuities whose gaps shrink geometrically."""
    out = []
    xs = np.sort(np.asarray(speeds, dtype=float))
    for direction in (1, -1):
        ys = xs if direction == 1 else -xs[::-1]
        g = np.diff(ys)
        i = 0
        while i < len(g) - 1:
            j = i
            while j + 1 < len(g) and 0 < g[j + 1] <= cfg.s_prime_max_ratio * g[j]:
                j += 1
            npts = j - i + 2
            if npts >= cfg.s_prime_min_points:
                r = g[j] / g[j - 1]
                limit = ys[j + 1] + g[j] * r / (1 - r)
                # only the tail of the chain inside the radius counts
                chain = ys[i:j + 2]
                if np.count_nonzero(limit - chain <= cfg.s_prime_radius) >= cfg.s_prime_min_points:
                    out.append(float(direction * limit))
            i = j + 1
    return sorted(out)


def refine_partition(base: BaseLabels, model: FluxModel, p: Profile, cfg: ClassifyConfig = ClassifyConfig(),
                     q: EssImQuery = EssImQuery()) -> PartitionReport:
    items = _items(base, cfg)
    lo_end, hi_end = float(base.nodes[0]), float(base.nodes[-1])
    comps = []
    k = 0
    while k < len(items):
        lab = items[k][1]
        if lab == "S":
            k += 1
            continue
        j = k
        while j + 1 < len(items) and items[j + 1][1] == lab:
            j += 1
        a = items[k - 1][0] if k > 0 else lo_end
        b = items[j + 1][0] if j + 1 < len(items) else hi_end
        vals = np.array([it[2] for it in items[k:j + 1]])
        comp = Component(label=lab, a=a, b=b, first=items[k][0], last=items[j][0],
                         left_neighbor=items[k - 1][1] if k > 0 else None,
                         right_neighbor=items[j + 1][1] if j + 1 < len(items) else None)
        if lab == "C":
            comp.mean_state = vals.mean(axis=0)
            comp.spread = float(np.max(np.linalg.norm(vals - comp.mean_state, axis=1)))
        comps.append(comp)
        k = j + 1

    e_points, r_intervals, anomalies = [], [], []
    for c in comps:
        if c.label != "W":
            continue
        if c.last - c.first > 2 * cfg.dxi:
            c.label = "R"
            r_intervals.append((c.first, c.last))
            if c.left_neighbor == "C":
                e_points.append((c.first, 1))
            if c.right_neighbor == "C":
                e_points.append((c.last, 1))
        elif c.left_neighbor == "C" and c.right_neighbor == "C":
            e_points.append((0.5 * (c.first + c.last), 2))
        else:
            anomalies.append(f"short resonant run near {c.first:.6g} is not flanked by constants; "
                             "cannot tell a division point from a narrow rarefaction")
    # C components touching R on one side and C-bounded on the other are already tagged above
    s_pts = list(base.s_points)
    iso = [s for i, s in enumerate(s_pts)
           if all(abs(s - t) > cfg.merge for jj, t in enumerate(s_pts) if jj != i)]
    sprime = _s_prime(s_pts, cfg)
    closure_ok = True
    for sp in sprime:
        near = [c for c in comps if c.label == "C" and c.first - 0.5 * cfg.dxi < sp < c.last + 0.5 * cfg.dxi]
        if near:
            closure_ok = False
            anomalies.append(f"limit of discontinuities near {sp:.6g} lies inside a constant component")
    return PartitionReport(bounds=base.bounds[:2], gap_constant=cfg.lambda_override or base.bounds[2], base=base,
                           components=comps, iso_s=iso, s_points=s_pts, e_points=sorted(e_points),
                           r_intervals=r_intervals, s_prime=sprime, closure_ok=closure_ok, anomalies=anomalies)


# ---------------------------------------------------------------------------
# endpoint states and jumps

def _side_limit(p: Profile, xi: float, side: str, q: EssImQuery) -> np.ndarray:
    return limit_values(p, [xi], q, r0=q.r0 * q.rho ** q.k_stab, side=side)[0]


def endpoint_states(p: Profile, interval, q: EssImQuery = EssImQuery()):
    """(v_a, v_b): right limit at a and left limit at b; both sides must be singletons.

    Infinite ends take the outermost constant state.
    """
    a, b = float(interval[0]), float(interval[1])
    out = []
    for x, side, outer in ((a, "right", p.segments[0]), (b, "left", p.segments[-1])):
        if np.isinf(x):
            out.append(outer.state.copy())
            continue
        qa = q.for_scan(min(q.r0, b - a), n_samples=q.n_samples)
        s = one_sided_batch(p, [x], side, qa)[0]
        if not s.is_singleton:
            raise NotSingletonError(f"{side} accumulation set at {x:.6g} has {len(s)} elements")
        out.append(_side_limit(p, x, side, q))
    return tuple(out)


def jump_analysis(model: FluxModel, p: Profile, xi_star: float, report: Optional[DafermosReport] = None,
                  q: EssImQuery = EssImQuery(), cfg: ClassifyConfig = ClassifyConfig(),
                  bracket=None) -> JumpDiagnostics:
    """Accumulation sets and jump algebra at a discontinuity speed.

    With ``bracket = (a, b)`` (a speed located only to within [a, b]) the left
    set is taken at a and the right set at b.
    """
    xa, xb = (xi_star, xi_star) if bracket is None else bracket
    if bracket is None:
        left, right, union = accum_sets(p, xi_star, q)
    else:
        left = accum_sets(p, xa, q)[0]
        right = accum_sets(p, xb, q)[1]
        union = merge_accum(left, right, q.delta(p))
    kind = "jump" if left.is_singleton and right.is_singleton else "general"
    if kind == "jump":
        lefts = [_side_limit(p, xa, "left", q)]
        rights = [_side_limit(p, xb, "right", q)]
    else:
        lefts, rights = list(left.reps), list(right.reps)
    delta = q.delta(p)
    scale_f = 1 + float(np.max(np.abs(model.flux(union.reps))))
    pairs = []
    for um in lefts:
        for up in rights:
            if np.linalg.norm(up - um) <= delta:
                continue
            rh = float(np.linalg.norm(rh_residual(model, um, xi_star, up)))
            M = m_matrix(model, um, xi_star, up)
            det = float(abs(np.linalg.det(M)))
            pairs.append((um, up, rh, det))
    max_rh = max((t[2] for t in pairs), default=0.0)
    max_det = max((t[3] for t in pairs), default=0.0)
    diag = JumpDiagnostics(xi=float(xi_star), left=left, right=right, pairs=pairs, kind=kind,
                           max_rh=max_rh, max_det=max_det)
    tol_rh = cfg.eps_rh * scale_f if kind == "jump" else \
        (report.tol_weak if report else 0) + delta * (abs(xi_star) + scale_f)
    if not pairs:
        diag.anomalies.append("no pair of distinct accumulation states")
    if max_rh > tol_rh:
        diag.anomalies.append(f"Rankine-Hugoniot residual {max_rh:.3g} exceeds {tol_rh:.3g}")
    if kind == "jump" and pairs:
        # M (u+ - u-) equals the RH residual, so |det M| <= |M|^(n-1) rh / |u+ - u-|
        um, up = pairs[0][0], pairs[0][1]
        norm_m = max(1.0, float(np.linalg.norm(m_matrix(model, um, xi_star, up), 2)))
        implied = norm_m ** (model.n - 1) * max_rh / float(np.linalg.norm(up - um))
        if max_det > cfg.eps_det * norm_m ** model.n + implied:
            diag.anomalies.append(f"det M = {max_det:.3g} is not small")
    if report is not None and report.verdict:
        res, tol = accumulation_flux_check(model, p, xi_star, report, q)
        diag.flux_check = max(float(np.linalg.norm(r)) for _, r in res)
        diag.flux_tol = tol
        if diag.flux_check > tol:
            diag.anomalies.append(f"accumulation states miss the moving frame flux by {diag.flux_check:.3g}")
    return diag


# ---------------------------------------------------------------------------
# full report

def structure_report(model: FluxModel, p: Profile, cfg: ClassifyConfig = ClassifyConfig(),
                     q: EssImQuery = EssImQuery()) -> PartitionReport:
    bounds = constancy_bounds(model, p, q)
    xi_l, xi_r, _ = bounds
    weak = verify_weak(model, p, cfg.tol_weak,
                       grid=grid_nodes(xi_l - 1, xi_r + 1, cfg.dafermos_dxi, closed=True))
    base = partition_axis(model, p, cfg, q, bounds)
    rep = refine_partition(base, model, p, cfg, q)
    rep.weak = weak
    if not weak.verdict:
        rep.anomalies.append(f"not a weak solution: Dafermos deviation {weak.deviation:.3g} "
                             f"exceeds {weak.tol_weak:.3g}; report is diagnostic only")
    for s in rep.s_points:
        jd = jump_analysis(model, p, s, weak if weak.verdict else None, q, cfg, base.brackets.get(s))
        rep.jumps.append(jd)
        if s in rep.iso_s and jd.kind != "jump":
            rep.anomalies.append(f"isolated discontinuity at {s:.6g} is not a jump")
        rep.anomalies += [f"discontinuity at {s:.6g}: {a}" for a in jd.anomalies]
    for c in rep.components:
        if c.label == "R":
            try:
                span = c.last - c.first
                chk = verify_rarefaction_segment(model, p, (c.first, c.last), q, dxi=max(cfg.dxi, span / 200),
                                                 eps_res=max(1e-6, cfg.band), scan_step=cfg.dxi)
                rep.rarefactions.append(chk)
            except SelfSimError as exc:
                rep.rarefactions.append(None)
                rep.anomalies.append(f"resonant interval ({c.first:.6g}, {c.last:.6g}): {exc}")
        elif c.label == "C":
            ok = c.spread <= q.delta(p)
            rep.constancy.append((c.a, c.b, c.spread, ok))
            if not ok:
                rep.anomalies.append(f"constant component ({c.a:.6g}, {c.b:.6g}) varies by {c.spread:.3g}")
            if c.left_neighbor in ("W", "R") and c.right_neighbor in ("W", "R"):
                lam = rep.gap_constant
                length = c.b - c.a
                ok_gap = length >= lam - 2 * cfg.dxi
                rep.gap_checks.append((c.a, c.b, length, lam, ok_gap))
                if not ok_gap:
                    rep.anomalies.append(f"constant component ({c.a:.6g}, {c.b:.6g}) shorter than the gap bound")
    if not rep.s_prime:
        rep.waves = _wave_list(model, p, rep, q)
    rep.exit_code = EXIT_NOT_WEAK if not weak.verdict else (EXIT_ACCUMULATING if rep.s_prime else EXIT_OK)
    return rep


def _wave_list(model, p, rep: PartitionReport, q):
    waves = []
    entries = []
    r_iter = iter(rep.rarefactions)
    for c in rep.components:
        if c.label == "C":
            entries.append((c.first, "C", c))
        elif c.label == "R":
            entries.append((c.first, "R", (c, next(r_iter))))
    for jd in rep.jumps:
        entries.append((jd.xi, "S", jd))
    entries.sort(key=lambda t: t[0])
    for _, kind, obj in entries:
        if kind == "C":
            waves.append(Wave("constant", obj.mean_state, obj.mean_state, (obj.a, obj.b)))
        elif kind == "R":
            comp, chk = obj
            try:
                va, vb = endpoint_states(p, (comp.first, comp.last), q)
            except NotSingletonError:
                va = vb = np.full(p.n, np.nan)
            waves.append(Wave("rarefaction", va, vb, (comp.first, comp.last),
                              family=None if chk is None else chk.family))
        else:
            if obj.kind == "jump" and obj.pairs:
                um, up = obj.pairs[0][0], obj.pairs[0][1]
            else:
                um = up = np.full(p.n, np.nan)
            waves.append(Wave("jump", um, up, (obj.xi, obj.xi), speed=obj.xi))
    return waves


# ---------------------------------------------------------------------------
# output

def format_report(rep: PartitionReport) -> str:
    lines = []
    w = rep.weak
    if w is not None:
        lines.append(f"weak solution: {'yes' if w.verdict else 'no'} "
                     f"(Dafermos deviation {w.deviation:.3e}, tolerance {w.tol_weak:.3e}, "
                     f"D0 = {np.array2string(w.d0, precision=10)})")
    lines.append(f"bounds: xi_L = {rep.bounds[0]:.6g}, xi_R = {rep.bounds[1]:.6g}, gap constant = {rep.gap_constant:.6g}")
    lines.append(f"discontinuities: {', '.join(f'{s:.10g}' for s in rep.s_points) or 'none'}")
    lines.append(f"isolated discontinuities: {', '.join(f'{s:.10g}' for s in rep.iso_s) or 'none'}")
    lines.append("rarefaction intervals: " + (", ".join(f"({a:.6g}, {b:.6g})" for a, b in rep.r_intervals) or "none"))
    lines.append("division points: " + (", ".join(f"{x:.6g} (case {c})" for x, c in rep.e_points) or "none"))
    lines.append("accumulating discontinuities near: " + (", ".join(f"{x:.6g}" for x in rep.s_prime) or "none"))
    for jd in rep.jumps:
        lines.append(f"  discontinuity {jd.xi:.10g}: {jd.kind}, |left| = {len(jd.left)}, |right| = {len(jd.right)}, "
                     f"max R-H residual {jd.max_rh:.3e}, max |det M| {jd.max_det:.3e}")
    for chk in rep.rarefactions:
        if chk is not None:
            lines.append(f"  rarefaction family {chk.family} on ({chk.interval[0]:.6g}, {chk.interval[1]:.6g}): "
                         f"resonance {chk.resonance_residual:.3e}, along {chk.along_distance:.3e}, "
                         f"total variation {chk.total_variation:.6g}")
    for a, b, length, lam, ok in rep.gap_checks:
        lines.append(f"  gap check ({a:.6g}, {b:.6g}): length {length:.6g} vs {lam:.6g}: {'ok' if ok else 'FAIL'}")
    if rep.waves is not None:
        lines.append("waves:")
        lines += [f"  [{i}] {wv.describe()}" for i, wv in enumerate(rep.waves)]
    else:
        lines.append("waves: not finite at this resolution; no wave list emitted")
    if rep.anomalies:
        lines.append("anomalies:")
        lines += [f"  - {a}" for a in rep.anomalies]
    lines.append(f"exit code: {rep.exit_code}")
    return "\n".join(lines) + "\n"


def write_intervals_csv(rep: PartitionReport, path) -> None:
    n = rep.base.values.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["label", "a", "b"] + [f"left_{i}" for i in range(n)] + [f"right_{i}" for i in range(n)]
                    + ["diagnostic"])
        rows = []
        for c in rep.components:
            st = c.mean_state if c.mean_state is not None else np.full(n, np.nan)
            rows.append((c.a, [c.label, repr(c.a), repr(c.b)] + [repr(float(x)) for x in st] * 2
                         + [f"spread={c.spread:.3e}"]))
        for jd in rep.jumps:
            um = jd.pairs[0][0] if jd.pairs else np.full(n, np.nan)
            up = jd.pairs[0][1] if jd.pairs else np.full(n, np.nan)
            rows.append((jd.xi, ["S", repr(jd.xi), repr(jd.xi)] + [repr(float(x)) for x in um]
                         + [repr(float(x)) for x in up] + [f"{jd.kind};rh={jd.max_rh:.3e};det={jd.max_det:.3e}"]))
        for x, case in rep.e_points:
            rows.append((x, ["E", repr(x), repr(x)] + ["nan"] * (2 * n) + [f"case={case}"]))
        # order by (a, b) so a point row precedes the component starting there
        for r in sorted(rows, key=lambda t: (t[0], float(t[1][2]))):
            wr.writerow(r[1])
