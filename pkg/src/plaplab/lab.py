"""Experiment driver: configuration, sweeps, refinement verdicts and reports.

Configuration files are flat ``key = value`` lines with dotted sections::

    # radial benchmark sampled exactly
    benchmark.kind = radial          # radial | manufactured | file
    benchmark.p = 1.5
    benchmark.source = exact         # exact | solve
    domain.lo = -1
    domain.hi = 1
    domain.window = disk:0.9         # none | disk:R | annulus:R0:R | box:LO:HI
    sweep.h = 1/32, 1/64, 1/128
    functional.t1.kind = third_order
    functional.t1.alpha = 0.5, 2.5   # a list makes an axis for this block
    sweep.gamma = 1                  # default list for blocks that leave it unset

Values are numbers, fractions ``a/b``, booleans, words, or comma lists of
those.  ``#`` starts a comment.  Unknown sections are rejected.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exponents as ex
from . import functionals as fn
from . import oracles
from .fields import CellMask, DomainError, GridDomain, ScalarField, box_window, disk_window, load_field
from .solver import ProblemSpec, SolverError, continuation_solve

log = logging.getLogger(__name__)

OUTPUT_ENV = "PLAPLAB_OUT"
VERDICTS = ("bounded", "divergent", "inconclusive")
BOUNDED_RATIO = 1.25
DIVERGENT_FACTOR = 2.0
ZERO_FLOOR = 1e-12
MIN_GRIDS = 3

AXES = ("p", "epsilon", "alpha", "beta", "gamma", "q", "r", "k", "alpha_tilde", "h")
CSV_COLUMNS = (
    "kind", "p", "epsilon", "alpha", "beta", "gamma", "q", "r", "k", "alpha_tilde", "h",
    "value", "masked_fraction",
    "variant", "ratio", "verdict", "admissible", "prediction", "converged",
)  # fmt: skip

# parameters each kind reads, beyond p, epsilon and h
KIND_AXES = {
    "hessian_energy": ("beta",),
    "inverse_weight_f": ("q",),
    "gradient_inverse": ("r",),
    "third_order": ("alpha", "gamma"),
    "stress_seminorm": ("alpha_tilde",),
    "power_field_seminorm": ("k", "r_exp", "order"),
}
ROW_FIELD = {"r_exp": "r"}
SECTIONS = ("benchmark", "domain", "sweep", "functional", "solver", "task", "output", "annotation", "seed")


class ConfigError(ValueError):
    pass


# --- config parsing -----------------------------------------------------------


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
        pass
    if "/" in t:
        try:
            return float(Fraction(t.replace(" ", "")))
        except (ValueError, ZeroDivisionError):
            pass
    return t


def parse_value(text: str):
    parts = [s for s in (x.strip() for x in text.split(",")) if s]
    if len(parts) > 1 or text.strip().endswith(","):
        return [_scalar(s) for s in parts]
    return _scalar(text) if parts else ""


def parse_config(text: str) -> dict:
    """Flat ``{dotted.key: value}`` mapping; list values stay lists."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key.split(".", 1)[0] not in SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section in {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


def _as_list(v) -> list:
    if v is None:
        return []
    return list(v) if isinstance(v, list) else [v]


@dataclass
class ExperimentConfig:
    benchmark: dict = field(default_factory=lambda: {"kind": "radial", "p": 2.0, "n": 2, "scale": 1.0, "source": "exact"})
    lo: float = -1.0
    hi: float = 1.0
    window: str = "none"
    axes: dict = field(default_factory=dict)
    functionals: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    solve_task: bool = False
    output_dir: str = "plaplab_out"
    formats: tuple = ("csv", "json")
    annotation: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_mapping(cls, flat: dict) -> ExperimentConfig:
        cfg = cls()
        bench = dict(cfg.benchmark)
        funcs: dict[str, dict] = {}
        for key, val in flat.items():
            parts = key.split(".")
            sec = parts[0]
            if sec == "seed" and len(parts) == 1:
                cfg.seed = int(val)
            elif sec == "benchmark" and len(parts) == 2:
                bench[parts[1]] = val
            elif sec == "domain" and len(parts) == 2 and parts[1] in ("lo", "hi", "window"):
                setattr(cfg, parts[1], val if parts[1] == "window" else float(val))
            elif sec == "sweep" and len(parts) == 2:
                if parts[1] not in AXES + ("r_exp", "order"):
                    raise ConfigError(f"unknown sweep axis {parts[1]!r}")
                cfg.axes[parts[1]] = _as_list(val)
            elif sec == "functional" and len(parts) == 3:
                funcs.setdefault(parts[1], {})[parts[2]] = val
            elif sec == "solver" and len(parts) == 2:
                cfg.solver[parts[1]] = val
            elif sec == "task" and key == "task.solve":
                cfg.solve_task = bool(val)
            elif sec == "output" and len(parts) == 2 and parts[1] in ("dir", "format"):
                if parts[1] == "dir":
                    cfg.output_dir = str(val)
                else:
                    cfg.formats = _formats(str(val))
            elif sec == "annotation" and len(parts) == 2:
                cfg.annotation[parts[1]] = val
            else:
                raise ConfigError(f"unrecognized key {key!r}")
        cfg.benchmark = bench
        for name, block in funcs.items():
            if "kind" not in block:
                raise ConfigError(f"functional.{name} has no kind")
            if block["kind"] not in KIND_AXES:
                raise ConfigError(f"functional.{name}: unsupported kind {block['kind']!r}")
            if block.get("mask_policy", "exclude_Zu") not in fn.MASK_POLICIES:
                raise ConfigError(f"functional.{name}: unknown mask_policy {block['mask_policy']!r}")
        cfg.functionals = funcs
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_mapping(parse_config(text))

    def validate(self):
        if not self.functionals and not self.solve_task:
            raise ConfigError("config defines neither functionals nor a solve task")
        if self.benchmark.get("kind") not in ("radial", "manufactured", "file"):
            raise ConfigError(f"unknown benchmark kind {self.benchmark.get('kind')!r}")
        if self.benchmark.get("source", "exact") not in ("exact", "solve"):
            raise ConfigError("benchmark.source must be exact or solve")
        hs = self.h_values()
        if len(hs) > 1:
            ratios = [a / b for a, b in zip(hs, hs[1:])]
            if any(abs(r - round(r)) > 1e-9 or round(r) < 2 or (round(r) & (round(r) - 1)) for r in ratios):
                raise ConfigError(f"h values must be successive power-of-two refinements, got {hs}")
        if not self.hi > self.lo:
            raise ConfigError("domain.hi must exceed domain.lo")
        for h in hs:
            cells = (self.hi - self.lo) / h
            if abs(cells - round(cells)) > 1e-9 * cells:
                raise ConfigError(f"h = {h} does not divide the domain side")
        _parse_window(self.window)

    def h_values(self) -> list[float]:
        hs = self.axes.get("h") or [1.0 / 32]
        return sorted((float(h) for h in hs), reverse=True)


def _formats(text: str) -> tuple:
    if text == "both":
        return ("csv", "json")
    if text in ("csv", "json"):
        return (text,)
    raise ConfigError(f"format must be csv, json or both, got {text!r}")


def _parse_window(spec: str):
    spec = str(spec).strip()
    if spec in ("", "none"):
        return ("none",)
    name, *args = spec.split(":")
    try:
        vals = [float(Fraction(a)) for a in args]
    except ValueError as e:
        raise ConfigError(f"bad window {spec!r}") from e
    if name == "disk" and len(vals) == 1:
        return ("disk", 0.0, vals[0])
    if name == "annulus" and len(vals) == 2:
        return ("disk", vals[0], vals[1])
    if name == "box" and len(vals) == 2:
        return ("box", vals[0], vals[1])
    raise ConfigError(f"bad window {spec!r}")


def _window_mask(domain: GridDomain, spec: str) -> CellMask | None:
    w = _parse_window(spec)
    if w[0] == "none":
        return None
    if w[0] == "disk":
        return disk_window(domain, w[2], r_min=w[1])
    return box_window(domain, w[1], w[2])


# --- sweep rows and verdicts --------------------------------------------------


@dataclass
class Row:
    kind: str
    axes: dict
    value: float | None
    masked_fraction: float | None
    variant: str = ""
    ratio: float | None = None
    verdict: str = "inconclusive"
    admissible: str = "n/a"
    prediction: str = ""
    converged: bool | None = None
    extra: dict = field(default_factory=dict)

    def group_key(self) -> tuple:
        return (self.kind, self.variant) + tuple(_sort_num(self.axes.get(a)) for a in AXES if a != "h")

    def sort_key(self) -> tuple:
        return self.group_key() + (-_sort_num(self.axes.get("h")),)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for a in AXES:
            d[a] = self.axes.get(a)
        d.update(
            value=self.value,
            masked_fraction=self.masked_fraction,
            variant=self.variant,
            ratio=self.ratio,
            verdict=self.verdict,
            admissible=self.admissible,
            prediction=self.prediction,
            converged=self.converged,
        )
        return d


def _sort_num(v) -> float:
    return -math.inf if v is None else float(v)


def classify(values) -> tuple[str, list[float | None]]:
    """Refinement verdict for values ordered from coarse to fine.

    ``bounded`` when max/min <= 1.25 (or every value is numerically zero),
    ``divergent`` when each halving multiplies the value by at least 2,
    otherwise ``inconclusive``.  Fewer than ``MIN_GRIDS`` values are always
    inconclusive.  Returns the verdict and the per-step ratios.
    """
    vals = [abs(v) if v is not None else None for v in values]
    ratios: list[float | None] = [None]
    for a, b in zip(vals, vals[1:]):
        ratios.append(b / a if a not in (None, 0.0) and b is not None else None)
    if len(vals) < MIN_GRIDS or any(v is None for v in vals):
        return "inconclusive", ratios
    if max(vals) <= ZERO_FLOOR:
        return "bounded", ratios
    if min(vals) > 0 and max(vals) / min(vals) <= BOUNDED_RATIO:
        return "bounded", ratios
    if all(r is not None and r >= DIVERGENT_FACTOR for r in ratios[1:]):
        return "divergent", ratios
    return "inconclusive", ratios


def annotate_verdicts(rows: list[Row]) -> None:
    groups: dict[tuple, list[Row]] = {}
    for row in rows:
        groups.setdefault(row.group_key(), []).append(row)
    for members in groups.values():
        members.sort(key=lambda r: -_sort_num(r.axes.get("h")))
        verdict, ratios = classify([r.value for r in members])
        for row, ratio in zip(members, ratios):
            row.verdict = verdict
            row.ratio = ratio


def admissibility(kind: str, axes: dict, n: int, annotation: dict) -> str:
    """``admissible`` / ``inadmissible`` per the closed-form windows, or ``n/a``."""
    p = axes.get("p")
    q = float(annotation.get("q", 8.0))
    cz = float(annotation.get("cz", 1.0))
    signed = bool(annotation.get("f_has_sign", True))
    nn = max(int(n), 2)
    try:
        if kind == "third_order":
            params = ex.ExponentParams(p, q, axes["gamma"], nn, cz, signed)
            ok = ex.third_order_admissible(params, axes["alpha"])
        elif kind == "stress_seminorm":
            _, window = ex.stress_window(axes["alpha_tilde"], nn, cz)
            ok = window.contains(p)
        elif kind == "power_field_seminorm":
            params = ex.ExponentParams(p, q, 1.0, nn, cz, signed)
            rep = ex.exponent_report(params, q0=4.0)
            ok = not rep.notes and rep.k_threshold.admits(axes["k"])
        elif kind == "hessian_energy":
            ok = 0 <= axes["beta"] < 1
        elif kind == "inverse_weight_f":
            ok = axes["q"] >= 1 and (p <= 2 or axes["q"] < (p - 1.0) / (p - 2.0))
        elif kind == "gradient_inverse":
            ok = axes["r"] < 1
        else:
            return "n/a"
    except (DomainError, KeyError, TypeError):
        return "n/a"
    return "admissible" if ok else "inadmissible"


# --- field sources ------------------------------------------------------------


def _domain(cfg: ExperimentConfig, h: float, n: int) -> GridDomain:
    return GridDomain.cube(n, cfg.lo, cfg.hi, h)


class FieldSource:
    """Produces ``(u, f, converged, extra)`` for a given (p, epsilon, h)."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        b = cfg.benchmark
        self.kind = b.get("kind", "radial")
        self.n = int(b.get("n", 2))
        self.scale = float(b.get("scale", 1.0))
        self.source = b.get("source", "exact")
        self.default_p = float(b.get("p", 2.0))
        self._file = None
        if self.kind == "file":
            try:
                dom, arr, _ = load_field(b["path"])
            except (KeyError, OSError) as e:
                raise ConfigError(f"benchmark.path unusable: {e}") from e
            self._file = (dom, arr)
            self.n = dom.n

    def exact(self, p: float):
        if self.kind == "radial":
            return oracles.radial_solution(p, self.n, self.scale)
        return None

    def domain(self, h: float) -> GridDomain:
        if self._file is not None:
            return self._file[0]
        return _domain(self.cfg, h, self.n)

    def sample(self, p: float, eps: float, h: float):
        dom = self.domain(h)
        if self.kind == "file":
            u = ScalarField(dom, self._file[1])
            return u, ScalarField(dom, 0.0), None, {}
        if self.kind == "manufactured":
            u, f = oracles.manufactured_poisson(dom)
        else:
            u, f = oracles.sample_radial(self.exact(p), dom)
        if self.source == "exact":
            return u, f, None, {}
        return self._solve(p, eps, dom, u, f)

    def _solve(self, p, eps, dom, u_exact, f):
        if eps <= 0:
            raise ConfigError("solved benchmarks need epsilon > 0")
        s = self.cfg.solver
        g = u_exact.flat()[dom.boundary_indices()]
        spec = ProblemSpec(p, eps, f, g, dom)
        schedule = [float(e) for e in _as_list(s.get("schedule"))] or [eps]
        schedule = [e for e in schedule if e > eps] + [eps]
        sols, rep = continuation_solve(
            spec,
            schedule,
            tol=float(s.get("tol", 1e-8)),
            max_iter=int(s.get("max_iter", 200)),
            damping=float(s.get("damping", 0.7)),
        )
        u = sols[-1]
        err = float(np.max(np.abs(u.values - u_exact.values)))
        return u, f, rep.converged, {"iterations": rep.iterations, "linf_error": err, "report": rep.to_dict()}


# --- run ----------------------------------------------------------------------


@dataclass
class SweepReport:
    rows: list[Row]
    config: ExperimentConfig

    def verdicts(self) -> dict:
        return {r.group_key(): r.verdict for r in self.rows}


def _block_axes(cfg: ExperimentConfig, block: dict, source: FieldSource) -> dict[str, list]:
    kind = block["kind"]
    names = ("p", "epsilon") + KIND_AXES[kind]
    out = {}
    for a in names:
        if a in block:
            out[a] = _as_list(block[a])
        elif a in cfg.axes:
            out[a] = list(cfg.axes[a])
        elif a == "p":
            out[a] = [source.default_p]
        elif a == "epsilon":
            out[a] = [0.0]
        elif a == "order":
            out[a] = [2]
        else:
            raise ConfigError(f"{kind} needs a value for {a!r}")
    return out


def _tasks(cfg: ExperimentConfig, source: FieldSource):
    """Work units grouped by the field they need: ``{(p, eps, h): [(kind, axes, policy), ...]}``."""
    groups: dict[tuple, list] = {}
    hs = cfg.h_values()
    for name in sorted(cfg.functionals):
        block = cfg.functionals[name]
        axes = _block_axes(cfg, block, source)
        keys = list(axes)
        for combo in itertools.product(*(axes[k] for k in keys)):
            params = {k: (float(v) if k != "order" else int(v)) for k, v in zip(keys, combo)}
            for h in hs:
                key = (params["p"], params["epsilon"], h)
                groups.setdefault(key, []).append((block["kind"], params, block.get("mask_policy", "exclude_Zu")))
    if cfg.solve_task:
        p = float(_as_list(cfg.axes.get("p"))[0]) if cfg.axes.get("p") else source.default_p
        eps = float(_as_list(cfg.axes.get("epsilon"))[0]) if cfg.axes.get("epsilon") else 1e-4
        for h in hs:
            groups.setdefault((p, eps, h), []).append(("solve", {"p": p, "epsilon": eps}, None))
    return groups


def _row_axes(params: dict, h: float) -> dict:
    axes = {"h": h}
    for k, v in params.items():
        if k == "order":
            continue
        axes[ROW_FIELD.get(k, k)] = v
    return axes


def _prediction(kind: str, params: dict, source: FieldSource, window) -> str:
    sol = source.exact(params["p"]) if source.source == "exact" else None
    if sol is None or kind not in oracles.KINDS:
        return ""
    w = _parse_window(window)
    if w[0] != "disk" or w[1] > 0:
        return ""
    P = dict(params)
    if kind == "inverse_weight_f":
        P["q"] = params["q"]
    sigma = oracles.radial_exponent(kind, P, sol)
    return "finite" if sigma > -sol.n else "divergent"


def _run_group(cfg: ExperimentConfig, source: FieldSource, key: tuple, items: list) -> list[Row]:
    p, eps, h = key
    rows = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", fn.AdmissibilityWarning)
            u, f, converged, extra = source.sample(p, eps, h)
    except SolverError as e:
        log.error("solve failed at p=%g eps=%g h=%g: %s", p, eps, h, e)
        return [Row(kind, _row_axes(par, h), None, None, converged=False, extra={"error": str(e)}) for kind, par, _ in items]
    window = _window_mask(u.domain, cfg.window)
    for kind, params, policy in items:
        axes = _row_axes(params, h)
        if kind == "solve":
            rows.append(Row("solve", axes, extra.get("linf_error"), 0.0, converged=converged, extra=extra))
            continue
        spec = fn.FunctionalSpec(kind, params, policy)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", fn.AdmissibilityWarning)
            try:
                res = fn.evaluate(spec, u, f, window)
            except DomainError as e:
                log.warning("%s at %s failed: %s", kind, axes, e)
                rows.append(Row(kind, axes, None, None, converged=converged, extra={"error": str(e)}))
                continue
        adm = admissibility(kind, axes, source.n, cfg.annotation)
        pred = _prediction(kind, params, source, cfg.window)
        if isinstance(res, fn.StressSeminorm):
            for variant in ("direct", "chain_rule", "expansion"):
                v = getattr(res, variant)
                vpred = pred if variant != "expansion" else _prediction(kind, dict(params, variant="expansion"), source, cfg.window)
                rows.append(Row(kind, axes, v.value, v.masked_fraction, variant, admissible=adm, prediction=vpred, converged=converged))
        else:
            variant = f"order{params['order']}" if kind == "power_field_seminorm" else ""
            rows.append(Row(kind, axes, res.value, res.masked_fraction, variant, admissible=adm, prediction=pred, converged=converged))
    return rows


def run(cfg: ExperimentConfig, threads: int | None = None) -> SweepReport:
    """Evaluate every configured functional on every axis combination and refinement."""
    source = FieldSource(cfg)
    groups = _tasks(cfg, source)
    nthreads = max(1, int(threads if threads is not None else cfg.threads))
    keys = sorted(groups)
    if nthreads == 1:
        chunks = [_run_group(cfg, source, k, groups[k]) for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            chunks = list(pool.map(lambda k: _run_group(cfg, source, k, groups[k]), keys))
    rows = [r for chunk in chunks for r in chunk]
    annotate_verdicts(rows)
    rows.sort(key=Row.sort_key)
    return SweepReport(rows, cfg)


def incoherent_rows(report: SweepReport, radial_threshold=None, band: float = 0.2) -> list[Row]:
    """Rows marked admissible whose verdict is not ``bounded``.

    Rows within ``band`` of the alpha threshold (third-order kind) are
    skipped.  The closed-form windows are sufficient conditions only, so
    inadmissible rows are not expected to diverge.
    """
    bad = []
    for row in report.rows:
        if row.admissible != "admissible" or row.value is None:
            continue
        if row.kind == "third_order" and radial_threshold is not None:
            if abs(row.axes["alpha"] - radial_threshold(row.axes)) <= band:
                continue
        if row.verdict != "bounded":
            bad.append(row)
    return bad


# --- reports ------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = r.to_dict()
        w.writerow([_cell(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(report: SweepReport) -> str:
    payload = {
        "seed": report.config.seed,
        "rows": [dict(r.to_dict(), **({"extra": _jsonable(r.extra)} if r.extra else {})) for r in report.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _param_text(row: Row) -> str:
    skip = ("p", "epsilon", "h")
    return " ".join(f"{a}={row.axes[a]:g}" for a in AXES if a not in skip and row.axes.get(a) is not None)


def summary_table(rows: list[Row]) -> str:
    head = f"{'kind':<22}{'variant':<12}{'p':>6}{'eps':>9}  {'params':<22}{'h':>11}{'value':>14}{'ratio':>8}  verdict"
    lines = [head, "-" * len(head)]
    for r in rows:
        val = "-" if r.value is None else f"{r.value:.6g}"
        ratio = "" if r.ratio is None else f"{r.ratio:.3f}"
        lines.append(
            f"{r.kind:<22}{r.variant:<12}{r.axes.get('p', 0):>6.3g}{r.axes.get('epsilon', 0):>9.2g}  "
            f"{_param_text(r):<22}{r.axes['h']:>11.5g}{val:>14}{ratio:>8}  {r.verdict}"
        )
    return "\n".join(lines) + "\n"


def output_dir(cfg: ExperimentConfig, override=None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


def report(sweep: SweepReport, out: Path, formats=("csv", "json"), stem: str = "sweep") -> list[Path]:
    """Write CSV/JSON mirrors and a plain-text summary; returns the paths written."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / f"{stem}.csv"
        path.write_text(rows_to_csv(sweep.rows))
        written.append(path)
    if "json" in formats:
        path = out / f"{stem}.json"
        path.write_text(rows_to_json(sweep))
        written.append(path)
    path = out / f"{stem}_summary.txt"
    path.write_text(summary_table(sweep.rows))
    written.append(path)
    return written


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
