"""Batch front-end: config files in, JSON / CSV / plot-data reports out.

A job config is a flat ``key = value`` file with ``[sections]``::

    [job]
    kind = verify          ; spectrum | verify | bifurcation | identities
    k = 2
    seed = 0

    [surface]
    name = bumpy_sphere
    seeds = 0-49           ; expands to one surface per seed
    amplitude = 0.2
    normalize_area = true

    [mesh]
    levels = 2, 3, 4

    [operator]
    random = 20            ; or: alpha = 0, 0.5, 1 / beta = 0 / pairs = 0 0; 1 -2
    random_seed = 0

    [output]
    dir = out
    format = json, csv

Several ``[surface NAME]`` sections may be given. Every report carries the
resolved config, and a JSON report can be passed back as ``--config`` to
re-run the job.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import inspect
import io
import json
import math
import os
import re
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import theorems as th
from .catalog import CATALOG, CatalogEntry, catalog
from .eigensolve import LevelSpectra, extrapolate
from .errors import ConfigError, CurvspecError, JobFailed

KINDS = ("spectrum", "verify", "bifurcation", "identities")
FORMATS = ("json", "csv", "plotdata")
METHODS = ("auto", "fem", "closed_form", "numeric")
CSV_HEADER = ("surface", "level", "alpha", "beta", "index", "eigenvalue", "residual")

# identity tolerances
GAUSS_TOL = 1e-8
GAUSS_BONNET_RTOL = 1e-6
WILLMORE_TOL = 1e-6

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SurfaceSpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)
    c: Optional[float] = None
    normalize_area: bool = False

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={_label_value(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"

    def build(self) -> CatalogEntry:
        factory = CATALOG.get(self.name)
        params = dict(self.params)
        if factory is not None and self.c is not None \
                and "c" in inspect.signature(factory).parameters:
            params["c"] = int(self.c) if float(self.c).is_integer() else self.c
        try:
            entry = catalog(self.name, **params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {self.name}: {exc}",
                              field=f"surface {self.name}") from None
        if self.c is not None and entry.ambient.c != self.c:
            raise ConfigError(f"{self.name} lives in curvature {entry.ambient.c}, "
                              f"not {self.c}", field="c")
        if self.normalize_area:
            entry = th.normalize_area(entry)
        return entry


def _label_value(v):
    if isinstance(v, (list, tuple)):
        return "[" + ";".join(_label_value(x) for x in v) + "]"
    return repr(v)


@dataclass
class JobConfig:
    """Resolved description of one batch job."""

    kind: str
    surfaces: List[SurfaceSpec]
    levels: Optional[List[int]] = None  # None: per-surface defaults
    params: List[Tuple[float, float]] = field(default_factory=lambda: [(0.0, 0.0)])
    k: int = 5
    which: List[str] = field(default_factory=lambda: ["lambda1", "lambda2"])
    method: str = "auto"
    grid: int = 256
    window: Tuple[float, float] = (0.0, 1.5)
    tol: Optional[float] = None
    points: int = 100
    seed: int = 0
    out: str = "."
    formats: List[str] = field(default_factory=lambda: ["json"])
    name: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def stem(self) -> str:
        return self.name or self.kind

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown job kind {self.kind!r}", field="kind")
        if not self.surfaces:
            raise ConfigError("no surface given", field="surface")
        if self.levels is not None:
            if not self.levels:
                raise ConfigError("levels must be nonempty", field="levels")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise ConfigError("levels must be strictly ascending", field="levels")
            if any(lv < 0 for lv in self.levels):
                raise ConfigError("levels must be >= 0", field="levels")
        if self.kind in ("verify", "bifurcation") and self.k < 2:
            raise ConfigError("k must be >= 2 for verify and bifurcation jobs", field="k")
        if self.k < 1:
            raise ConfigError("k must be >= 1", field="k")
        if self.kind == "verify":
            for a, b in self.params:
                if 4 * a + b < 0:
                    raise ConfigError(f"(alpha, beta) = ({a:g}, {b:g}) has 4 alpha + beta < 0",
                                      field="alpha")
            for w in self.which:
                if w not in ("lambda1", "lambda2"):
                    raise ConfigError(f"unknown predicate {w!r}", field="which")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}", field="format")
        if not self.window[1] > self.window[0] >= 0:
            raise ConfigError("window must satisfy 0 <= lo < hi", field="window")
        if self.grid < 2:
            raise ConfigError("grid must have at least 2 points", field="grid")

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["params"] = [list(p) for p in self.params]
        d["window"] = list(self.window)
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> "JobConfig":
        d = dict(d)
        d["surfaces"] = [SurfaceSpec(**s) for s in d["surfaces"]]
        d["params"] = [tuple(p) for p in d["params"]]
        d["window"] = tuple(d["window"])
        return cls(**d)


_SECTION_KEYS = {
    "job": {"kind", "k", "seed", "method", "which", "grid", "window", "tol", "points",
            "name", "threads"},
    "mesh": {"levels"},
    "operator": {"alpha", "beta", "pairs", "random", "random_seed", "alpha_range",
                 "s_max"},
    "output": {"dir", "format", "name"},
}
_SURFACE_RESERVED = {"name", "c", "normalize_area", "seeds"}


def _line_numbers(text: str) -> Dict[Tuple[str, str], int]:
    """Map ``(section, key)`` to the line it was defined on."""
    where, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            where[(section, "")] = i
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = i
    return where


def _int_list(text: str) -> List[int]:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        m = re.fullmatch(r"(-?\d+)-(-?\d+)", part)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            out.extend(range(a, b + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> List[float]:
    text = text.strip()
    m = re.fullmatch(r"linspace\(([^,]+),([^,]+),([^,]+)\)", text.replace(" ", ""))
    if m:
        return [float(x) for x in np.linspace(float(m.group(1)), float(m.group(2)),
                                              int(m.group(3)))]
    return [float(x) for x in text.split(",") if x.strip()]


def _scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _param_value(text: str):
    """Scalars, ``a, b`` lists or ``a b; c d`` matrices (stored as lists)."""
    if ";" in text:
        return [[float(x) for x in row.replace(",", " ").split()]
                for row in text.split(";") if row.strip()]
    if "," in text:
        return [_scalar(x) for x in text.split(",")]
    return _scalar(text)


def _bool(text: str) -> bool:
    v = _scalar(text)
    if not isinstance(v, bool):
        raise ValueError(f"expected a boolean, got {text!r}")
    return v


def parse_config(text: str, kind: Optional[str] = None, seed: Optional[int] = None,
                 source: str = "<config>") -> JobConfig:
    """Parse config text into a validated :class:`JobConfig`.

    ``kind`` and ``seed`` come from the command line and take precedence.
    Errors are raised as :class:`ConfigError` naming the line and field.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                   interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse: {exc.errors[0][1].strip() if exc.errors else exc}",
                          line=line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0],
                          line=getattr(exc, "lineno", None)) from None
    lines = _line_numbers(text)

    def get(section, key, conv, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value {raw!r}: {exc}", line=lines.get((section, key)),
                              field=f"{section}.{key}") from None

    surface_sections = [s for s in cp.sections() if s == "surface" or s.startswith("surface ")]
    for s in cp.sections():
        if s in surface_sections:
            continue
        if s not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{s}]", line=lines.get((s, "")))
        for key in cp.options(s):
            if key not in _SECTION_KEYS[s]:
                raise ConfigError(f"unknown key in [{s}]", line=lines.get((s, key)),
                                  field=f"{s}.{key}")

    file_kind = get("job", "kind", str.strip)
    if kind is not None and file_kind is not None and file_kind != kind:
        raise ConfigError(f"config is a {file_kind!r} job but {kind!r} was requested",
                          line=lines.get(("job", "kind")), field="job.kind")
    kind = kind or file_kind
    if kind is None:
        raise ConfigError("job kind not given", field="job.kind")
    if seed is None:
        seed = get("job", "seed", int, 0)

    surfaces = []
    for s in surface_sections:
        suffix = s[len("surface"):].strip()
        name = cp.get(s, "name", fallback=suffix or None)
        if not name:
            raise ConfigError("surface section needs a name", line=lines.get((s, "")),
                              field=f"{s}.name")
        if name not in CATALOG:
            raise ConfigError(f"unknown catalog surface {name!r}; known: "
                              f"{', '.join(sorted(CATALOG))}",
                              line=lines.get((s, "name"), lines.get((s, ""))),
                              field=f"{s}.name")
        c = get(s, "c", float)
        norm = get(s, "normalize_area", _bool, False)
        params = {}
        for key in cp.options(s):
            if key in _SURFACE_RESERVED:
                continue
            params[key] = get(s, key, _param_value)
        if "basis" in params and isinstance(params["basis"], list):
            params["basis"] = [list(map(float, row)) for row in params["basis"]]
        seeds = get(s, "seeds", _int_list)
        if name == "bumpy_sphere" and seeds is None and "seed" not in params:
            seeds = [seed]
        if seeds is not None:
            if name != "bumpy_sphere":
                raise ConfigError("seeds only apply to bumpy_sphere",
                                  line=lines.get((s, "seeds")), field=f"{s}.seeds")
            surfaces += [SurfaceSpec(name, {**params, "seed": sd}, c, norm) for sd in seeds]
        else:
            surfaces.append(SurfaceSpec(name, params, c, norm))

    levels = get("mesh", "levels", _int_list)
    params = _operator_params(cp, get, kind)
    default_k = 5 if kind == "spectrum" else 2
    which = get("job", "which", lambda t: [w.strip() for w in t.split(",") if w.strip()])
    window = get("job", "window", _float_list, [0.0, 1.5])
    if len(window) != 2:
        raise ConfigError("window needs two numbers", line=lines.get(("job", "window")),
                          field="job.window")
    formats = get("output", "format",
                  lambda t: [f.strip() for f in t.split(",") if f.strip()], ["json"])
    try:
        cfg = JobConfig(
            kind=kind, surfaces=surfaces, levels=levels, params=params,
            k=get("job", "k", int, default_k),
            which=which or ["lambda1", "lambda2"],
            method=get("job", "method", str.strip, "auto"),
            grid=get("job", "grid", int, 256), window=(window[0], window[1]),
            tol=get("job", "tol", float), points=get("job", "points", int, 100),
            seed=seed, out=get("output", "dir", str.strip, "."), formats=formats,
            name=get("output", "name", str.strip, get("job", "name", str.strip)))
    except ConfigError as exc:
        key = (exc.field or "").split(".")[-1]
        section = next((sec for sec, keys in _SECTION_KEYS.items() if key in keys), None)
        line = lines.get((section, key)) if section else None
        if line is None and key == "alpha":
            line = next((lines.get(("operator", k)) for k in ("alpha", "pairs", "random")
                         if ("operator", k) in lines), None)
        raise ConfigError(str(exc).split(": ", 1)[-1], line=line, field=exc.field) from None
    return cfg


def _operator_params(cp, get, kind) -> List[Tuple[float, float]]:
    if not cp.has_section("operator"):
        return [(0.0, 0.0)]
    pairs = get("operator", "pairs", lambda t: [
        tuple(float(x) for x in row.replace(",", " ").split()) for row in t.split(";")
        if row.strip()])
    out = []
    if pairs is not None:
        for p in pairs:
            if len(p) != 2:
                raise ConfigError("pairs must be 'alpha beta; alpha beta; ...'",
                                  field="operator.pairs")
        out += pairs
    n_random = get("operator", "random", int)
    if n_random:
        out += th.random_admissible_params(
            n_random, get("operator", "random_seed", int, 0),
            tuple(get("operator", "alpha_range", _float_list, [-0.5, 1.5])),
            get("operator", "s_max", float, 4.0))
    alphas = get("operator", "alpha", _float_list)
    betas = get("operator", "beta", _float_list)
    if alphas is not None or betas is not None:
        out += [(a, b) for a in (alphas or [0.0]) for b in (betas or [0.0])]
    return [(float(a), float(b)) for a, b in out] or [(0.0, 0.0)]


def load_config(path: str, kind: Optional[str] = None, seed: Optional[int] = None) -> JobConfig:
    """Read a config file, or the job echo of an existing JSON report."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            job = json.loads(text)["job"]
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path} is not a report: {exc}") from None
        if kind is not None and job.get("kind") != kind:
            raise ConfigError(f"report holds a {job.get('kind')!r} job, not {kind!r}",
                              field="job.kind")
        if seed is not None:
            job["seed"] = seed
        return JobConfig.from_dict(job)
    return parse_config(text, kind, seed, source=path)


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    """Job echo plus per-surface results; ``timing`` is kept out of the document."""

    job: JobConfig
    surfaces: List[Dict]
    summary: Dict
    timing: Dict = field(default_factory=dict, compare=False)

    @property
    def exit_code(self) -> int:
        return EXIT_VIOLATION if self.summary.get(th.VIOLATION, 0) else EXIT_OK

    def to_dict(self) -> Dict:
        return {"job": self.job.to_dict(), "surfaces": self.surfaces,
                "summary": self.summary}

    @classmethod
    def from_dict(cls, d: Dict) -> "Report":
        return cls(JobConfig.from_dict(d["job"]), d["surfaces"], d["summary"])

    def inequalities(self) -> List[Dict]:
        return [r for s in self.surfaces for r in s.get("inequalities", [])]


def _clean(x):
    """JSON-safe plain Python values; NaN and inf become ``None``."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _ineq(r: th.InequalityReport) -> Dict:
    return _clean(asdict(r))


def _levels_for(cfg: JobConfig, entry: CatalogEntry) -> List[int]:
    return list(cfg.levels) if cfg.levels is not None else list(th.default_levels(entry))


def _spectrum_task(cfg, spec, entry, cache, alpha, beta):
    """Per-level spectra and extrapolation for one ``(alpha, beta)``."""
    k = cfg.k
    spectra = cache.spectra(alpha, beta, k)
    levels = []
    for lv, mg, sp in zip(cache.levels, cache.geometries, spectra):
        levels.append({"level": lv, "h": mg.mesh_size, "n_vertices": mg.mesh.n_vertices,
                       "method": sp.method, "eigenvalues": sp.eigenvalues,
                       "residuals": sp.residuals})
    ext = []
    if len(spectra) >= 3:
        for e in extrapolate(entry, alpha, beta, k, cache=cache, spectra=spectra):
            ext.append({"index": e.index, "group": e.group, "value": e.value,
                        "uncertainty": e.uncertainty, "order": e.order, "flags": e.flags})
    return {"alpha": alpha, "beta": beta, "source": "fem", "levels": levels,
            "extrapolated": ext}


def _closed_form_task(entry, alpha, beta):
    lam1, lam2 = th.closed_form_spectrum(entry, alpha, beta)
    return {"alpha": alpha, "beta": beta, "source": "closed_form", "levels": [],
            "extrapolated": [{"index": 1, "group": [1], "value": lam1, "uncertainty": 0.0,
                              "order": None, "flags": ["closed_form"]},
                             {"index": 2, "group": [2], "value": lam2, "uncertainty": 0.0,
                              "order": None, "flags": ["closed_form"]}]}


def _estimates(run: Dict) -> Dict[str, Tuple[float, float]]:
    ex = {e["index"]: e for e in run["extrapolated"]}
    if 1 not in ex or 2 not in ex:
        raise ConfigError("verification needs at least three mesh levels", field="levels")
    return {f"lambda{i}": (ex[i]["value"], ex[i]["uncertainty"]) for i in (1, 2)}


def _identity_block(cfg: JobConfig, entry: CatalogEntry) -> Tuple[Dict, List[Dict]]:
    r = th.identity_checks(entry, n_points=cfg.points, seed=cfg.seed)
    checks = [th.judge("gauss_equation", r.gauss_residual_max, GAUSS_TOL,
                       surface=entry.name, tolerance=GAUSS_TOL)]
    if r.gauss_bonnet_relerr is not None:
        checks.append(th.judge("gauss_bonnet", r.gauss_bonnet_relerr, GAUSS_BONNET_RTOL,
                               surface=entry.name, integral=r.gauss_bonnet,
                               expected=r.gauss_bonnet_expected,
                               tolerance=GAUSS_BONNET_RTOL))
    if r.willmore is not None:
        checks.append(th.judge("willmore_chen", th.FOUR_PI - WILLMORE_TOL, r.willmore,
                               surface=entry.name, tolerance=WILLMORE_TOL,
                               equality=abs(r.willmore_excess) <= WILLMORE_TOL))
    block = _clean(asdict(r))
    block["tolerances"] = {"gauss_equation": GAUSS_TOL, "gauss_bonnet": GAUSS_BONNET_RTOL,
                           "willmore_chen": WILLMORE_TOL}
    return block, [_ineq(c) for c in checks]


def _bifurcation_block(cfg: JobConfig, entry: CatalogEntry) -> Tuple[Dict, List[Dict]]:
    method = {"fem": "numeric"}.get(cfg.method, cfg.method)
    levels = cfg.levels if method != "closed_form" else None
    res = th.bifurcation_alpha(entry, method=method, levels=levels, grid=cfg.grid,
                               window=cfg.window, tol=cfg.tol)
    tol = cfg.tol if cfg.tol is not None else (1e-14 if res.method == "closed_form" else 1e-6)
    block = _clean(asdict(res))
    block["tolerance"] = tol
    checks = []
    if entry.known.orientable and res.status != "not_eventually_negative":
        bound = th.corollary_bounds(entry.known.genus)
        checks.append(_ineq(th.judge("bifurcation_corollary", res.alphaX, bound + 1e-6,
                                     tol, surface=entry.name, genus=entry.known.genus)))
    return block, checks


def _surface_context(spec: SurfaceSpec, alpha=None, beta=None) -> str:
    ctx = f"surface {spec.label}"
    if alpha is not None:
        ctx += f", alpha={alpha!r}, beta={beta!r}"
    return ctx


def _guard(context, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (CurvspecError, ValueError, np.linalg.LinAlgError) as exc:
        raise JobFailed(context, exc) from exc


def run(cfg: JobConfig, threads: int = 1) -> Report:
    """Execute a job: geometry, meshes, operators, spectra and theorem checks.

    Surfaces and ``(alpha, beta)`` points are independent and run on up to
    ``threads`` workers; results are assembled in config order so the report
    does not depend on the thread count.
    """
    t0 = time.perf_counter()
    entries = [_guard(_surface_context(s), s.build) for s in cfg.surfaces]
    timing: Dict[str, float] = {}
    pool = ThreadPoolExecutor(max(1, threads)) if threads > 1 else None

    def pmap(fn, items):
        return list(pool.map(fn, items)) if pool else [fn(x) for x in items]

    def per_surface(i):
        spec, entry = cfg.surfaces[i], entries[i]
        ts = time.perf_counter()
        block = {"surface": spec.label, "name": entry.name, "params": _clean(entry.params),
                 "ambient_c": entry.ambient.c, "genus": entry.known.genus,
                 "orientable": entry.known.orientable}
        ctx = _surface_context(spec)
        if cfg.kind == "identities":
            block["identities"], block["inequalities"] = _guard(ctx, _identity_block, cfg, entry)
        else:
            block["area"] = _guard(ctx, th.surface_area, entry)
            block["bifurcation"], block["inequalities"] = _guard(
                ctx, _bifurcation_block, cfg, entry)
        timing[spec.label] = time.perf_counter() - ts
        return _clean(block)

    try:
        if cfg.kind in ("spectrum", "verify"):
            # parallelism lives inside the (alpha, beta) sweep of each surface
            blocks = [per_surface_sweep(cfg, i, entries, pmap, timing)
                      for i in range(len(entries))]
        else:
            blocks = pmap(per_surface, range(len(entries)))
    finally:
        if pool:
            pool.shutdown()
    summary = {th.HOLDS: 0, th.HOLDS_WITHIN: 0, th.VIOLATION: 0}
    for b in blocks:
        for r in b.get("inequalities", []):
            summary[r["verdict"]] += 1
    timing["total"] = time.perf_counter() - t0
    return Report(cfg, blocks, summary, timing)


def _spectral_block(cfg, spec, entry, ctx, pmap=None):
    pmap = pmap or (lambda fn, xs: [fn(x) for x in xs])
    closed = False
    if cfg.kind == "verify" or not entry.known.orientable:
        method = "fem" if cfg.method == "numeric" else cfg.method
        closed = _guard(ctx, th._use_closed_form, entry, method)
    block = {"area": _guard(ctx, th.surface_area, entry)}
    if closed:
        runs = [_closed_form_task(entry, a, b) for a, b in cfg.params]
    else:
        levels = _levels_for(cfg, entry)
        if cfg.kind == "verify" and len(levels) < 3:
            raise ConfigError("verification needs at least three mesh levels",
                              field="mesh.levels")
        cache = _guard(ctx, LevelSpectra, entry, levels)
        block["levels"] = levels
        runs = pmap(lambda ab: _guard(_surface_context(spec, *ab), _spectrum_task,
                                      cfg, spec, entry, cache, ab[0], ab[1]), cfg.params)
    block["runs"] = runs
    if cfg.kind == "verify":
        ineqs = []
        for r in runs:
            reps = _guard(_surface_context(spec, r["alpha"], r["beta"]), th.judge_estimates,
                          entry, block["area"], r["alpha"], r["beta"], _estimates(r),
                          cfg.which, r["source"])
            ineqs += [_ineq(x) for x in reps]
            if entry.name == "veronese":
                ineqs += [_ineq(x) for x in th.veronese_check(r["alpha"], r["beta"], entry)]
        block["inequalities"] = ineqs
    return block


def per_surface_sweep(cfg, i, entries, pmap, timing):
    spec, entry = cfg.surfaces[i], entries[i]
    ts = time.perf_counter()
    block = {"surface": spec.label, "name": entry.name, "params": _clean(entry.params),
             "ambient_c": entry.ambient.c, "genus": entry.known.genus,
             "orientable": entry.known.orientable}
    block.update(_spectral_block(cfg, spec, entry, _surface_context(spec), pmap))
    timing[spec.label] = time.perf_counter() - ts
    return _clean(block)


# ---------------------------------------------------------------------------
# emission


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n"


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in report.surfaces:
        for r in s.get("runs", []):
            for lv in r["levels"]:
                for i, (lam, res) in enumerate(zip(lv["eigenvalues"], lv["residuals"]), 1):
                    w.writerow([s["surface"], lv["level"], repr(r["alpha"]), repr(r["beta"]),
                                i, repr(lam), repr(res)])
    return buf.getvalue()


def render_plotdata(report: Report) -> str:
    """Whitespace-separated ``alpha f(alpha)`` blocks, one per surface.

    Blocks are separated by two blank lines (the gnuplot ``index`` layout).
    Bifurcation jobs give ``f = lambda_2 area - 4 pi (2 - 2 alpha)``; spectral
    jobs give the extrapolated ``lambda_2`` for each ``beta`` in turn.
    """
    out = []
    kind = report.job.kind
    for s in report.surfaces:
        lines = [f"# surface {s['surface']}"]
        if kind == "bifurcation":
            b = s["bifurcation"]
            lines.append(f"# alphaX {b['alphaX']!r} status {b['status']}")
            lines.append("# alpha f(alpha)")
            lines += [f"{a!r} {f!r}" for a, f in b["samples"]]
        elif kind in ("spectrum", "verify"):
            lines.append("# alpha lambda_2 uncertainty beta")
            for r in sorted(s.get("runs", []), key=lambda r: (r["beta"], r["alpha"])):
                ex = {e["index"]: e for e in r["extrapolated"]}
                if 2 in ex:
                    lines.append(f"{r['alpha']!r} {ex[2]['value']!r} "
                                 f"{ex[2]['uncertainty']!r} {r['beta']!r}")
        else:
            lines.append("# no alpha-dependent data for identity jobs")
        out.append("\n".join(lines) + "\n")
    return "\n\n".join(out)


RENDERERS = {"json": render_json, "csv": render_csv, "plotdata": render_plotdata}
EXTENSIONS = {"json": "json", "csv": "csv", "plotdata": "dat"}


def atomic_write(path: str, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(report: Report, formats: Sequence[str] = None, out: str = None,
         stem: str = None) -> List[str]:
    """Write the report in each format; returns the paths written.

    Timing goes to a separate ``<stem>.timing.json`` so that reports of
    identical jobs are byte-identical.
    """
    formats = list(formats or report.job.formats)
    out = out if out is not None else report.job.out
    stem = stem or report.job.stem
    paths = []
    for fmt in formats:
        if fmt not in RENDERERS:
            raise ConfigError(f"unknown format {fmt!r}", field="format")
        path = os.path.join(out, f"{stem}.{EXTENSIONS[fmt]}")
        atomic_write(path, RENDERERS[fmt](report))
        paths.append(path)
    if report.timing:
        path = os.path.join(out, f"{stem}.timing.json")
        atomic_write(path, json.dumps(report.timing, indent=1, sort_keys=True) + "\n")
        paths.append(path)
    return paths


def read_report(path: str) -> Report:
    with open(path, encoding="utf-8") as fh:
        return Report.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# command line


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("CURVSPEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CURVSPEC_THREADS={env!r} is not an integer") from None
    return 1


KIND_HELP = {
    "spectrum": "lowest eigenvalues per level, with extrapolation",
    "verify": "judge the eigenvalue bounds on each surface",
    "bifurcation": "locate the bifurcation value alpha_X",
    "identities": "Gauss equation, Gauss-Bonnet and Willmore-Chen checks",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvspec", description=(
        "Spectra of -Laplacian - (alpha |h|^2 + beta |H|^2) on immersed surfaces "
        "and checks of the isoperimetric eigenvalue bounds."))
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--format", action="append", choices=FORMATS,
                        help="output format (repeatable)")

    for kind in KINDS:
        sp = sub.add_parser(kind, help=KIND_HELP[kind])
        sp.add_argument("--config", metavar="PATH",
                        help="job config file, or a JSON report to re-run")
        sp.add_argument("--surface", action="append", metavar="NAME",
                        help="catalog surface (when no config is given; repeatable)")
        sp.add_argument("--levels", help="mesh levels, e.g. 3,4,5")
        sp.add_argument("--alpha", help="alpha values, e.g. 0,0.5 or linspace(0,1,5)")
        sp.add_argument("--beta", help="beta values")
        sp.add_argument("--k", type=int, help="number of eigenvalues")
        sp.add_argument("--threads", type=int, metavar="N",
                        help="worker threads (default: $CURVSPEC_THREADS or 1)")
        sp.add_argument("--seed", type=int, metavar="N", help="bumpy-sphere seed")
        common(sp)
    sp = sub.add_parser("report", help="re-render an existing JSON report")
    sp.add_argument("report", metavar="REPORT.json")
    common(sp)
    return p


def _config_from_args(args) -> JobConfig:
    if args.config:
        cfg = load_config(args.config, args.command, args.seed)
    else:
        if not args.surface:
            raise ConfigError("give --config or at least one --surface")
        text = f"[job]\nkind = {args.command}\n"
        for i, name in enumerate(args.surface):
            text += f"[surface {i}]\nname = {name}\n"
        cfg = parse_config(text, args.command, args.seed, source="<command line>")
    d = cfg.to_dict()
    try:
        if args.levels:
            d["levels"] = _int_list(args.levels)
        if args.alpha or args.beta:
            alphas = _float_list(args.alpha) if args.alpha else [0.0]
            betas = _float_list(args.beta) if args.beta else [0.0]
            d["params"] = [[a, b] for a in alphas for b in betas]
    except ValueError as exc:
        raise ConfigError(str(exc), field="command line") from None
    if args.k is not None:
        d["k"] = args.k
    if args.out is not None:
        d["out"] = args.out
    if args.format:
        d["formats"] = args.format
    return JobConfig.from_dict(d)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            report = read_report(args.report)
            stem = os.path.splitext(os.path.basename(args.report))[0]
            out = args.out if args.out is not None else os.path.dirname(args.report) or "."
            for path in emit(report, args.format or ["json"], out, stem):
                print(path)
            return report.exit_code
        cfg = _config_from_args(args)
        report = run(cfg, _threads(args.threads))
        for path in emit(report):
            print(path)
        s = report.summary
        print(f"{s[th.HOLDS]} hold, {s[th.HOLDS_WITHIN]} hold within uncertainty, "
              f"{s[th.VIOLATION]} violations", file=sys.stderr)
        return report.exit_code
    except (CurvspecError, OSError, KeyError) as exc:
        print(f"curvspec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
