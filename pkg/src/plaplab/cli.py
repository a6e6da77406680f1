from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import exponents as ex
from . import lab, oracles
from .fields import DomainError, GridDomain, save_field
from .solver import SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

log = logging.getLogger("plaplab")


def _common(sp: argparse.ArgumentParser, config_required=False):
    sp.add_argument("--config", required=config_required, help="experiment config file")
    sp.add_argument("--out", help="output directory (default from config or $PLAPLAB_OUT)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "json", "both"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plaplab", description="p-Laplacian regularity laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("admissible", help="exponent admissibility report")
    _common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--cz", type=float, default=None, help="Calderon-Zygmund constant (default: known value or 1)")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--alpha-tilde", type=float, default=None)
    sp.add_argument("--q0", type=float, default=None)
    sp.add_argument("--no-sign", action="store_true", help="source term without a fixed sign")

    for name, text in (
        ("solve", "solve the configured benchmark and report errors"),
        ("functionals", "evaluate configured functionals without refinement verdicts"),
        ("sweep", "full sweep with refinement verdicts"),
    ):
        _common(sub.add_parser(name, help=text), config_required=True)

    sp = sub.add_parser("cz", help="Calderon-Zygmund constant lookup or estimate")
    _common(sp)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--mode", choices=("known", "estimate"), default="estimate")
    sp.add_argument("--grid", type=int, default=128)
    sp.add_argument("--family-size", type=int, default=64)

    sp = sub.add_parser("oracle", help="exact radial functional value")
    _common(sp)
    sp.add_argument("--kind", required=True, choices=oracles.KINDS)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--r0", type=float, default=0.0)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    sp.add_argument("--cells", type=int, default=64, help="grid for the sampled fields written with --out")
    sp.add_argument("--field-format", choices=("csv", "bin"), default="csv")
    return ap


def _load(args) -> lab.ExperimentConfig:
    cfg = lab.ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format:
        cfg.formats = lab._formats(args.format)
    cfg.threads = args.threads
    return cfg


def _emit(args, name: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)


def cmd_admissible(args) -> int:
    cz = args.cz
    if cz is None:
        cz = oracles.cz_constant(args.n, args.q, mode="known").value if args.q == 2 else 1.0
    params = ex.ExponentParams(args.p, args.q, args.gamma, args.n, cz, not args.no_sign)
    rep = ex.exponent_report(params, q0=args.q0, alpha=args.alpha)
    payload = {"params": {"p": args.p, "q": args.q, "gamma": args.gamma, "n": args.n, "cz": cz,
                          "f_has_sign": not args.no_sign}, "report": rep.to_dict()}  # fmt: skip
    if args.alpha is not None:
        payload["third_order_admissible"] = ex.third_order_admissible(params, args.alpha, args.q0)
    payload["w2q_window"] = ex.p_window(args.q, cz, "w2q").to_dict()
    payload["w2q_admits_p"] = ex.w2q_admits(args.p, args.q, cz)
    if args.alpha_tilde is not None:
        q, window = ex.stress_window(args.alpha_tilde, args.n, cz)
        payload["stress"] = {"q": q, "window": window.to_dict(), "admits_p": window.contains(args.p)}
    _emit(args, "admissible", payload)
    return EXIT_OK


def _run_config(args, stem: str, solve_only=False, verdicts=True) -> int:
    cfg = _load(args)
    if solve_only:
        cfg.functionals = {}
        cfg.solve_task = True
        if cfg.benchmark.get("source") == "exact":
            cfg.benchmark["source"] = "solve"
    sweep = lab.run(cfg)
    if not verdicts:
        for row in sweep.rows:
            row.verdict, row.ratio = "inconclusive", None
    out = lab.output_dir(cfg, args.out)
    for path in lab.report(sweep, out, cfg.formats, stem=stem):
        log.info("wrote %s", path)
    sys.stdout.write(lab.summary_table(sweep.rows))
    failed = [r for r in sweep.rows if r.converged is False]
    if solve_only and failed:
        log.error("%d solve(s) did not converge", len(failed))
        return EXIT_SOLVER
    return EXIT_OK


def cmd_cz(args) -> int:
    seed = 7 if args.seed is None else args.seed
    kw = {} if args.mode == "known" else {"grid": args.grid, "family_size": args.family_size, "seed": seed}
    val = oracles.cz_constant(args.n, args.q, mode=args.mode, **kw)
    _emit(args, "cz", val.to_dict())
    return EXIT_OK


def cmd_oracle(args) -> int:
    params = {}
    for item in args.param:
        if "=" not in item:
            raise lab.ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = lab.parse_value(v)
    sol = oracles.radial_solution(args.p, args.n, args.scale)
    val = oracles.radial_functional_exact(args.kind, params, sol, annulus=(args.r0, args.R))
    sigma = oracles.radial_exponent(args.kind, params, sol)
    payload = {
        "kind": args.kind,
        "p": args.p,
        "n": args.n,
        "annulus": [args.r0, args.R],
        "params": params,
        "sigma": sigma,
        "value": None if val is oracles.DIVERGENT else val,
        "divergent": val is oracles.DIVERGENT,
    }
    _emit(args, "oracle", payload)
    if args.out:
        dom = GridDomain.box([-args.R] * args.n, [args.R] * args.n, args.cells)
        u, f = oracles.sample_radial(sol, dom)
        for name, field in (("u", u), ("f", f)):
            save_field(Path(args.out) / f"oracle_{name}", dom, field.values, name, fmt=args.field_format)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {
        "admissible": cmd_admissible,
        "solve": lambda a: _run_config(a, "solve", solve_only=True),
        "functionals": lambda a: _run_config(a, "functionals", verdicts=False),
        "sweep": lambda a: _run_config(a, "sweep"),
        "cz": cmd_cz,
        "oracle": cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except (lab.ConfigError, DomainError, oracles.UnknownConstantError) as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except SolverError as e:
        log.error("solver failure: %s", e)
        return EXIT_SOLVER
    except OSError as e:
        log.error("I/O error: %s", e)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
