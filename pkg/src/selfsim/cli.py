"""Batch front end: problem-spec parsing, pipelines and report files.

A problem file is a YAML (or JSON) mapping::

    flux: {name: burgers, params: {}}      # or just ``flux: burgers``
    profile:
      breakpoints: [0.0]
      segments:
        - {kind: constant, state: [1.0]}
        - {kind: constant, state: [-1.0]}
      overlay: [{xi: 0.0, state: [7.0]}]  # optional
    # or instead of ``profile``:  solve_scalar: [-1.0, 1.0]
    seed: 0
    config:
      essim: {n_samples: 4096}             # EssImQuery fields
      classify: {dxi: 0.001}               # ClassifyConfig fields
      tol_weak: 1.0e-6
      resolution: 4001                     # envelope grid for solve_scalar
    outputs: {dir: out}

Mapped segments name a library closure: ``power`` (exponent, center, coeff,
offset), ``affine`` (slope, offset) or ``rarefaction`` (u_star, family,
xi_interval, optional hint).  The ``rarefaction`` and ``chart`` subcommands
read their own sections (see :data:`TASK_KEYS`).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .classify import ClassifyConfig, format_report, structure_report, write_intervals_csv
from .dafermos import verify_weak, write_dafermos_csv
from .errors import SchemaError, SelfSimError
from .flux_models import FluxModel, known_fluxes, make_flux
from .profiles import Chatter, Constant, EssImQuery, Mapped, Profile, Sampled, affine_map, power_map
from .scalar_oracle import convex_envelope, oleinik_solve
from .wavecurves import (build_rarefaction_profile, build_rarefaction_wave, straightening_chart,
                         verify_rarefaction_segment, write_chart_csv, write_wave_csv,
                         embed_between_constants)

log = logging.getLogger("selfsim")

EXIT_OK, EXIT_ACCUMULATING, EXIT_NOT_WEAK = 0, 2, 3
EXIT_FAILURE, EXIT_SCHEMA = 1, 64

TOP_KEYS = {"flux", "profile", "solve_scalar", "seed", "config", "outputs", "rarefaction", "chart"}
CONFIG_KEYS = {"essim", "classify", "tol_weak", "resolution", "dafermos_dxi"}
OUTPUT_KEYS = {"dir", "report", "intervals", "dafermos", "waves"}
TASK_KEYS = {
    "rarefaction": {"u_star", "family", "xi_interval", "hint", "eps_res", "eps_along"},
    "chart": {"u_star", "family", "extents", "steps"},
}
SEGMENT_KEYS = {
    "constant": {"state"},
    "sampled": {"xi", "values"},
    "chatter": {"center", "a", "b"},
    "mapped": {"map"},
}
MAP_KEYS = {
    "power": {"exponent", "center", "coeff", "offset"},
    "affine": {"slope", "offset"},
    "rarefaction": {"u_star", "family", "xi_interval", "hint"},
}
DEFAULT_OUTPUTS = {"dir": "out", "report": "report.txt", "intervals": "intervals.csv",
                   "dafermos": "dafermos.csv", "waves": True}


@dataclass
class ProblemSpec:
    flux_name: str
    flux_params: dict = field(default_factory=dict)
    profile: Optional[dict] = None          # normalized profile document
    solve_scalar: Optional[tuple] = None
    seed: int = 0
    essim: dict = field(default_factory=dict)
    classify: dict = field(default_factory=dict)
    tol_weak: Optional[float] = None
    resolution: int = 4001
    dafermos_dxi: float = 1e-2
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    tasks: dict = field(default_factory=dict)

    def model(self) -> FluxModel:
        return make_flux(self.flux_name, **self.flux_params)

    def query(self) -> EssImQuery:
        return EssImQuery(**{"seed": self.seed, **self.essim})

    def classify_config(self) -> ClassifyConfig:
        kw = dict(self.classify)
        kw.setdefault("dafermos_dxi", self.dafermos_dxi)
        if self.tol_weak is not None:
            kw.setdefault("tol_weak", self.tol_weak)
        return ClassifyConfig(**kw)


# ---------------------------------------------------------------------------
# schema helpers

def _mapping(obj, path):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected a mapping, got {type(obj).__name__}", path)
    return obj


def _reject_unknown(obj: dict, allowed, path):
    for k in obj:
        if k not in allowed:
            raise SchemaError(f"unknown key {k!r} (allowed: {', '.join(sorted(allowed))})",
                              f"{path}.{k}" if path else str(k))


def _number(x, path) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"expected a number, got {x!r}", path)
    return float(x)


def _vector(x, path) -> list:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return [float(x)]
    if not isinstance(x, (list, tuple)) or not x:
        raise SchemaError(f"expected a number or a non-empty list, got {x!r}", path)
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(x)]


def _require(obj, key, path):
    if key not in obj:
        raise SchemaError("missing required key", f"{path}.{key}")
    return obj[key]


def _dataclass_overrides(obj, cls, path) -> dict:
    obj = _mapping(obj, path)
    names = {f.name for f in fields(cls)}
    _reject_unknown(obj, names, path)
    try:
        cls(**obj)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), path) from None
    return dict(obj)


def _parse_segment(seg, path) -> dict:
    seg = _mapping(seg, path)
    kind = _require(seg, "kind", path)
    if kind not in SEGMENT_KEYS:
        raise SchemaError(f"unknown segment kind {kind!r}", f"{path}.kind")
    if kind == "mapped":
        name = _require(seg, "map", path)
        if name not in MAP_KEYS:
            raise SchemaError(f"unknown map {name!r} (library: {', '.join(sorted(MAP_KEYS))})", f"{path}.map")
        _reject_unknown(seg, {"kind", "map"} | MAP_KEYS[name], path)
        out = {"kind": kind, "map": name}
        for k in MAP_KEYS[name]:
            if k in seg:
                v = seg[k]
                if k == "family":
                    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                        raise SchemaError("family must be a positive integer", f"{path}.{k}")
                    out[k] = v
                elif k in ("exponent", "center"):
                    out[k] = _number(v, f"{path}.{k}")
                elif k == "xi_interval":
                    iv = _vector(v, f"{path}.{k}")
                    if len(iv) != 2 or not iv[0] < iv[1]:
                        raise SchemaError("need [a, b] with a < b", f"{path}.{k}")
                    out[k] = iv
                else:
                    out[k] = _vector(v, f"{path}.{k}")
        need = {"power": ("exponent",), "affine": ("slope",),
                "rarefaction": ("u_star", "family", "xi_interval")}[name]
        for k in need:
            _require(seg, k, path)
        return out
    _reject_unknown(seg, {"kind"} | SEGMENT_KEYS[kind], path)
    out = {"kind": kind}
    if kind == "constant":
        out["state"] = _vector(_require(seg, "state", path), f"{path}.state")
    elif kind == "sampled":
        out["xi"] = _vector(_require(seg, "xi", path), f"{path}.xi")
        vals = _require(seg, "values", path)
        if not isinstance(vals, list) or len(vals) != len(out["xi"]):
            raise SchemaError("values must be a list as long as xi", f"{path}.values")
        out["values"] = [_vector(v, f"{path}.values[{i}]") for i, v in enumerate(vals)]
    else:
        out["center"] = _number(_require(seg, "center", path), f"{path}.center")
        out["a"] = _vector(_require(seg, "a", path), f"{path}.a")
        out["b"] = _vector(_require(seg, "b", path), f"{path}.b")
    return out


def _parse_profile(doc, path="profile") -> dict:
    doc = _mapping(doc, path)
    _reject_unknown(doc, {"breakpoints", "segments", "overlay"}, path)
    bps = _vector(doc["breakpoints"], f"{path}.breakpoints") if doc.get("breakpoints") else []
    segs = _require(doc, "segments", path)
    if not isinstance(segs, list) or not segs:
        raise SchemaError("segments must be a non-empty list", f"{path}.segments")
    if len(segs) != len(bps) + 1:
        raise SchemaError(f"{len(segs)} segments need {len(segs) - 1} breakpoints, got {len(bps)}",
                          f"{path}.breakpoints")
    if any(b <= a for a, b in zip(bps, bps[1:])):
        raise SchemaError("breakpoints must be strictly increasing", f"{path}.breakpoints")
    out_segs = [_parse_segment(s, f"{path}.segments[{i}]") for i, s in enumerate(segs)]
    for i in (0, len(out_segs) - 1):
        if out_segs[i]["kind"] != "constant":
            raise SchemaError("outermost segments must be constant", f"{path}.segments[{i}]")
    overlay = []
    for i, item in enumerate(doc.get("overlay", []) or []):
        ip = f"{path}.overlay[{i}]"
        item = _mapping(item, ip)
        _reject_unknown(item, {"xi", "state"}, ip)
        overlay.append({"xi": _number(_require(item, "xi", ip), f"{ip}.xi"),
                        "state": _vector(_require(item, "state", ip), f"{ip}.state")})
    return {"breakpoints": bps, "segments": out_segs, "overlay": overlay}


def parse_problem_spec(document) -> ProblemSpec:
    """Validate a spec document (text, path or already-loaded mapping) and fill defaults."""
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document
                                      and os.path.exists(document)):
        document = Path(document).read_text()
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise SchemaError(f"not a well-formed document: {exc}") from None
    doc = _mapping(document, "")
    _reject_unknown(doc, TOP_KEYS, "")

    flux = _require(doc, "flux", "")
    if isinstance(flux, str):
        name, params = flux, {}
    else:
        flux = _mapping(flux, "flux")
        _reject_unknown(flux, {"name", "params"}, "flux")
        name = _require(flux, "name", "flux")
        params = dict(_mapping(flux.get("params") or {}, "flux.params"))
    if name not in known_fluxes():
        raise SchemaError(f"unknown flux model {name!r}; known: {', '.join(known_fluxes())}", "flux.name")
    try:
        model = make_flux(name, **params)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), "flux.params") from None

    has_profile, has_oracle = "profile" in doc, "solve_scalar" in doc
    tasks = {}
    for task, allowed in TASK_KEYS.items():
        if task in doc:
            t = _mapping(doc[task], task)
            _reject_unknown(t, allowed, task)
            tasks[task] = t
    if has_profile and has_oracle:
        raise SchemaError("give either a profile or a solve_scalar directive, not both", "")
    if not (has_profile or has_oracle or tasks):
        raise SchemaError("need a profile, a solve_scalar directive or a task section", "")

    spec = ProblemSpec(flux_name=name, flux_params=params, tasks=tasks)
    if has_profile:
        spec.profile = _parse_profile(doc["profile"])
        for i, seg in enumerate(spec.profile["segments"]):
            st = seg.get("state") or seg.get("a")
            if st is not None and len(st) != model.n:
                raise SchemaError(f"state has {len(st)} components, flux has {model.n}",
                                  f"profile.segments[{i}]")
    if has_oracle:
        if model.n != 1:
            raise SchemaError("solve_scalar needs a scalar flux", "solve_scalar")
        pair = _vector(doc["solve_scalar"], "solve_scalar")
        if len(pair) != 2:
            raise SchemaError("expected [u_left, u_right]", "solve_scalar")
        spec.solve_scalar = tuple(pair)
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            raise SchemaError("seed must be an integer", "seed")
        spec.seed = doc["seed"]
    cfg = _mapping(doc.get("config") or {}, "config")
    _reject_unknown(cfg, CONFIG_KEYS, "config")
    if "essim" in cfg:
        spec.essim = _dataclass_overrides(cfg["essim"], EssImQuery, "config.essim")
    if "classify" in cfg:
        spec.classify = _dataclass_overrides(cfg["classify"], ClassifyConfig, "config.classify")
    if "tol_weak" in cfg:
        spec.tol_weak = _number(cfg["tol_weak"], "config.tol_weak")
    if "dafermos_dxi" in cfg:
        spec.dafermos_dxi = _number(cfg["dafermos_dxi"], "config.dafermos_dxi")
    if "resolution" in cfg:
        r = cfg["resolution"]
        if not isinstance(r, int) or isinstance(r, bool) or r < 3:
            raise SchemaError("resolution must be an integer >= 3", "config.resolution")
        spec.resolution = r
    outs = _mapping(doc.get("outputs") or {}, "outputs")
    _reject_unknown(outs, OUTPUT_KEYS, "outputs")
    spec.outputs = {**DEFAULT_OUTPUTS, **outs}
    return spec


# ---------------------------------------------------------------------------
# profile documents

def _build_mapped(model: FluxModel, seg: dict, lo: float, hi: float) -> Mapped:
    n = model.n
    if seg["map"] == "power":
        return power_map(seg["exponent"], seg.get("center", 0.0), seg.get("coeff", 1.0), seg.get("offset", 0.0), n)
    if seg["map"] == "affine":
        return affine_map(seg["slope"], seg.get("offset", 0.0), n)
    hint = seg.get("hint")
    return build_rarefaction_profile(model, np.array(seg["u_star"]), seg["family"], tuple(seg["xi_interval"]),
                                     hint=None if hint is None else [np.array(hint)])


def build_profile(model: FluxModel, doc: dict) -> Profile:
    bps = list(doc["breakpoints"])
    segs = []
    for j, seg in enumerate(doc["segments"]):
        lo = -np.inf if j == 0 else bps[j - 1]
        hi = np.inf if j == len(bps) else bps[j]
        kind = seg["kind"]
        if kind == "constant":
            segs.append(Constant(np.array(seg["state"])))
        elif kind == "sampled":
            segs.append(Sampled(np.array(seg["xi"]), np.array(seg["values"])))
        elif kind == "chatter":
            segs.append(Chatter(seg["center"], np.array(seg["a"]), np.array(seg["b"])))
        else:
            segs.append(_build_mapped(model, seg, lo, hi))
    overlay = tuple((o["xi"], np.array(o["state"])) for o in doc.get("overlay", []))
    return Profile(breakpoints=tuple(bps), segments=tuple(segs), n=model.n, overlay=overlay)


def _floats(a) -> list:
    return [float(x) for x in np.ravel(a)]


def profile_to_document(p: Profile) -> dict:
    """Inverse of :func:`build_profile` for profiles made from library pieces."""
    segs = []
    for j, seg in enumerate(p.segments):
        if isinstance(seg, Constant):
            segs.append({"kind": "constant", "state": _floats(seg.state)})
        elif isinstance(seg, Sampled):
            segs.append({"kind": "sampled", "xi": _floats(seg.xi), "values": [_floats(v) for v in seg.values]})
        elif isinstance(seg, Chatter):
            if seg.generator is not None:
                raise ValueError(f"segment {j}: chatter with a custom generator has no document form")
            segs.append({"kind": "chatter", "center": float(seg.center), "a": _floats(seg.a), "b": _floats(seg.b)})
        else:
            if not seg.spec:
                raise ValueError(f"segment {j}: mapped segment without a library spec")
            d = {"kind": "mapped"}
            for k, v in seg.spec.items():
                d[k] = v if isinstance(v, (str, int)) else (_floats(v) if np.ndim(v) else float(v))
            segs.append(d)
    return {"breakpoints": [float(b) for b in p.breakpoints], "segments": segs,
            "overlay": [{"xi": float(x), "state": _floats(s)} for x, s in p.overlay]}


def problem_document(spec: ProblemSpec, profile_doc: Optional[dict] = None) -> dict:
    doc = {"flux": {"name": spec.flux_name, "params": dict(spec.flux_params)}, "seed": spec.seed}
    if profile_doc is not None:
        doc["profile"] = profile_doc
    elif spec.profile is not None:
        doc["profile"] = spec.profile
    else:
        doc["solve_scalar"] = list(spec.solve_scalar)
    cfg = {}
    if spec.essim:
        cfg["essim"] = dict(spec.essim)
    if spec.classify:
        cfg["classify"] = dict(spec.classify)
    if spec.tol_weak is not None:
        cfg["tol_weak"] = spec.tol_weak
    if cfg:
        doc["config"] = cfg
    return doc


def resolve_profile(spec: ProblemSpec, model: Optional[FluxModel] = None) -> Profile:
    model = model or spec.model()
    if spec.profile is not None:
        return build_profile(model, spec.profile)
    if spec.solve_scalar is None:
        raise SchemaError("no profile or solve_scalar directive to analyze", "")
    return oleinik_solve(model, spec.solve_scalar[0], spec.solve_scalar[1], spec.resolution)


# ---------------------------------------------------------------------------
# pipelines

@dataclass
class PipelineResult:
    exit_code: int
    out_dir: Path
    files: list
    report: object = None
    text: str = ""


def _out_dir(spec: ProblemSpec) -> Path:
    d = Path(spec.outputs["dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_wave_files(model, p: Profile, waves, d: Path) -> list:
    files = []
    for k, w in enumerate(waves):
        path = d / f"wave_{k:02d}_{w.kind}.csv"
        if w.kind == "rarefaction":
            seg = None
            a, b = w.interval
            # reuse the profile's own segment when the interval matches a mapped piece
            for j, s in enumerate(p.segments):
                lo, hi = p.bounds(j)
                if isinstance(s, Mapped) and abs(lo - a) < 1e-2 and abs(hi - b) < 1e-2:
                    seg = s
            xs = np.linspace(a, b, 401)
            V = seg.func(xs) if seg is not None else p.values(xs, overlay=False)
            rows = zip(xs, np.asarray(V).reshape(len(xs), -1))
        elif w.kind == "jump":
            rows = [(w.speed, w.left_state), (w.speed, w.right_state)]
        else:
            rows = [(w.interval[0], w.left_state), (w.interval[1], w.right_state)]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(["xi"] + [f"v{i}" for i in range(model.n)]) + "\n")
            for x, v in rows:
                fh.write(",".join([repr(float(x))] + [repr(float(c)) for c in np.ravel(v)]) + "\n")
        files.append(path)
    return files


def run_pipeline(spec: ProblemSpec, write: bool = True) -> PipelineResult:
    """verify_weak, then structure_report; writes the report, interval, D/F and wave files."""
    model = spec.model()
    p = resolve_profile(spec, model)
    q = spec.query()
    cfg = spec.classify_config()
    rep = structure_report(model, p, cfg, q)
    text = format_report(rep)
    files = []
    d = Path(spec.outputs["dir"])
    if write:
        d = _out_dir(spec)
        o = spec.outputs
        (d / o["report"]).write_text(text + "\n")
        write_intervals_csv(rep, d / o["intervals"])
        write_dafermos_csv(rep.weak, d / o["dafermos"])
        files += [d / o["report"], d / o["intervals"], d / o["dafermos"]]
        if o["waves"] and rep.waves:
            files += _write_wave_files(model, p, rep.waves, d)
    return PipelineResult(rep.exit_code, d, files, rep, text)


def run_verify(spec: ProblemSpec, write: bool = True) -> PipelineResult:
    model = spec.model()
    p = resolve_profile(spec, model)
    weak = verify_weak(model, p, spec.tol_weak, dxi=spec.dafermos_dxi)
    text = (f"weak solution: {'yes' if weak.verdict else 'no'}\n"
            f"Dafermos deviation: {weak.deviation:.6e}\ntolerance: {weak.tol_weak:.6e}\n"
            f"D0: {' '.join(repr(float(x)) for x in weak.d0)}\nxi0: {weak.xi0!r}\n")
    files = []
    d = Path(spec.outputs["dir"])
    if write:
        d = _out_dir(spec)
        (d / spec.outputs["report"]).write_text(text)
        write_dafermos_csv(weak, d / spec.outputs["dafermos"])
        files += [d / spec.outputs["report"], d / spec.outputs["dafermos"]]
    return PipelineResult(EXIT_OK if weak.verdict else EXIT_NOT_WEAK, d, files, weak, text)


def run_solve_scalar(spec: ProblemSpec, write: bool = True) -> PipelineResult:
    """Envelope solution, emitted as a profile spec, then the full pipeline on it."""
    if spec.solve_scalar is None:
        raise SchemaError("solve-scalar needs a solve_scalar directive", "solve_scalar")
    model = spec.model()
    uL, uR = spec.solve_scalar
    env = convex_envelope(model, uL, uR, spec.resolution)
    p = oleinik_solve(model, uL, uR, spec.resolution)
    doc = problem_document(spec, profile_to_document(p))
    res = run_pipeline(spec, write)
    if write:
        d = res.out_dir
        (d / "solution.yaml").write_text(yaml.safe_dump(doc, sort_keys=True))
        with open(d / "envelope.csv", "w", newline="") as fh:
            fh.write("kind,u_start,u_end,speed_start,speed_end\n")
            for pc in env.pieces:
                fh.write(f"{pc.kind},{float(pc.u_start)!r},{float(pc.u_end)!r},"
                         f"{float(pc.speed_start)!r},{float(pc.speed_end)!r}\n")
        res.files += [d / "solution.yaml", d / "envelope.csv"]
    return res


def run_rarefaction(spec: ProblemSpec, write: bool = True) -> PipelineResult:
    t = spec.tasks.get("rarefaction")
    if t is None:
        raise SchemaError("missing rarefaction section", "rarefaction")
    model = spec.model()
    u_star = np.array(_vector(_require(t, "u_star", "rarefaction"), "rarefaction.u_star"))
    family = _require(t, "family", "rarefaction")
    iv = _vector(_require(t, "xi_interval", "rarefaction"), "rarefaction.xi_interval")
    if len(iv) != 2 or not iv[0] < iv[1]:
        raise SchemaError("need [a, b] with a < b", "rarefaction.xi_interval")
    hint = t.get("hint")
    hint = None if hint is None else [np.array(_vector(hint, "rarefaction.hint"))]
    wave = build_rarefaction_wave(model, u_star, family, tuple(iv), hint=hint)
    seg = build_rarefaction_profile(model, u_star, family, tuple(iv), hint=hint)
    p = embed_between_constants(model, seg, tuple(iv))
    chk = verify_rarefaction_segment(model, p, tuple(iv), spec.query(),
                                     eps_res=float(t.get("eps_res", 1e-6)), eps_along=float(t.get("eps_along", 1e-6)))
    weak = verify_weak(model, p, spec.tol_weak, dxi=spec.dafermos_dxi)
    text = (f"family: {chk.family}\ninterval: {iv[0]!r} {iv[1]!r}\n"
            f"resonance residual: {chk.resonance_residual:.6e}\nlies-along distance: {chk.along_distance:.6e}\n"
            f"total variation: {chk.total_variation:.10g}\nembedded Dafermos deviation: {weak.deviation:.6e}\n"
            f"passed: {'yes' if chk.passed and weak.verdict else 'no'}\n")
    files = []
    d = Path(spec.outputs["dir"])
    if write:
        d = _out_dir(spec)
        (d / spec.outputs["report"]).write_text(text)
        write_wave_csv(wave, d / "rarefaction.csv")
        files += [d / spec.outputs["report"], d / "rarefaction.csv"]
    code = EXIT_OK if chk.passed and weak.verdict else EXIT_FAILURE
    return PipelineResult(code, d, files, chk, text)


def run_chart(spec: ProblemSpec, write: bool = True) -> PipelineResult:
    t = spec.tasks.get("chart")
    if t is None:
        raise SchemaError("missing chart section", "chart")
    model = spec.model()
    u_star = np.array(_vector(_require(t, "u_star", "chart"), "chart.u_star"))
    family = _require(t, "family", "chart")
    kw = {}
    if "extents" in t:
        kw["extents"] = tuple(_vector(t["extents"], "chart.extents"))
    if "steps" in t:
        kw["steps"] = tuple(_vector(t["steps"], "chart.steps"))
    ch = straightening_chart(model, u_star, family, **kw)
    text = (f"family: {family}\nflow residual: {ch.flow_residual:.6e}\nsigma_min: {ch.sigma_min:.6e}\n"
            f"min separation: {ch.min_separation:.6e}\nextents: {ch.extents}\nshrunk: {'yes' if ch.shrunk else 'no'}\n")
    files = []
    d = Path(spec.outputs["dir"])
    if write:
        d = _out_dir(spec)
        (d / spec.outputs["report"]).write_text(text)
        write_chart_csv(ch, d / "chart.csv")
        files += [d / spec.outputs["report"], d / "chart.csv"]
    return PipelineResult(EXIT_OK, d, files, ch, text)


COMMANDS = {
    "analyze": run_pipeline,
    "verify": run_verify,
    "solve-scalar": run_solve_scalar,
    "rarefaction": run_rarefaction,
    "chart": run_chart,
}


# ---------------------------------------------------------------------------
# argument handling

def _flag_document(args) -> dict:
    """Partial spec document from command-line flags."""
    doc: dict = {}
    if args.flux:
        doc["flux"] = {"name": args.flux, "params": {}}
        for item in args.flux_param or []:
            k, _, v = item.partition("=")
            doc["flux"]["params"][k] = yaml.safe_load(v)
    if args.solve_scalar:
        doc["solve_scalar"] = list(args.solve_scalar)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = {}
    if args.dxi is not None:
        cfg["classify"] = {"dxi": args.dxi}
    if args.tol_weak is not None:
        cfg["tol_weak"] = args.tol_weak
    if cfg:
        doc["config"] = cfg
    if args.out:
        doc["outputs"] = {"dir": args.out}
    return doc


def _merge(spec_doc: dict, flag_doc: dict, path: str = "") -> dict:
    """The problem file wins; conflicting flags are reported and dropped."""
    out = dict(spec_doc)
    for k, v in flag_doc.items():
        where = f"{path}.{k}" if path else k
        if k not in out:
            out[k] = v
        elif isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, where)
        elif out[k] != v:
            warnings.warn(f"flag value for {where} ignored: the problem file sets {out[k]!r}", stacklevel=2)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selfsim", description="Verify and classify self-similar profiles.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--spec", help="problem file (YAML or JSON)")
        sp.add_argument("--threads", type=int, default=None, help="cap on worker threads")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--flux", help="flux model name")
        sp.add_argument("--flux-param", action="append", metavar="KEY=VALUE")
        sp.add_argument("--solve-scalar", nargs=2, type=float, metavar=("U_LEFT", "U_RIGHT"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dxi", type=float)
        sp.add_argument("--tol-weak", type=float)
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def _cap_threads(n: Optional[int]) -> None:
    if n is None:
        return
    if n < 1:
        raise SchemaError("--threads must be at least 1", "threads")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _cap_threads(args.threads)
        spec_doc = {}
        if args.spec:
            try:
                text = Path(args.spec).read_text()
            except OSError as exc:
                raise SchemaError(f"cannot read problem file: {exc}") from None
            try:
                spec_doc = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                raise SchemaError(f"not a well-formed document: {exc}") from None
            spec_doc = _mapping(spec_doc, "")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            doc = _merge(spec_doc, _flag_document(args))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        spec = parse_problem_spec(doc)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        res = COMMANDS[args.command](spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SelfSimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(res.text.rstrip())
    for f in res.files:
        log.info("wrote %s", f)
    return res.exit_code

