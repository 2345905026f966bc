"""Command-line front end.

Every subcommand prints a JSON summary on stdout and writes its data files
atomically into ``--output``.  Exit status is 0 on success, 2 when the input
is invalid and 3 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import criticality, envelopes, multibody
from .errors import NumericalError
from .potentials import Grid, ManyBodyConfig, RadialProblem, many_body_potential, problem_from_dict
from .radial import ground_state

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def write_atomic(path: Path, text: str) -> None:
    """Write UTF-8 text with LF endings via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(value: str) -> dict:
    """Inline JSON or a path to a JSON file."""
    text = value if value.lstrip().startswith("{") else Path(value).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from None


def _float_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    for t in items:
        if not math.isfinite(float(t)):
            raise ValueError(f"non-finite value {t!r}")
    return items


def _emit(obj: dict, output: Path | None, name: str) -> None:
    text = json.dumps(obj, sort_keys=True) + "\n"
    if output is not None:
        write_atomic(output / name, text)
    sys.stdout.write(text)


def _grid(args, r_max_default: float) -> Grid:
    r_max = args.r_max if args.r_max is not None else r_max_default
    if args.step is None:
        return criticality.critical_grid(r_max, args.grid)
    return Grid(r_max=r_max, step=args.step, kind=args.grid)


def _problems(args, r_max_default: float) -> list[tuple[str, RadialProblem]]:
    """(label, problem) pairs from ``--problem`` or ``--family`` with couplings."""
    if args.problem is not None:
        if args.family is not None:
            raise ValueError("give either --problem or --family, not both")
        return [("problem", problem_from_dict(_load_json(args.problem)))]
    if args.family is None:
        raise ValueError("one of --problem or --family is required")
    fam = criticality.family(args.family, args.dimension, _grid(args, r_max_default), args.mass_factor)
    tokens = _float_list(args.sweep) if getattr(args, "sweep", None) else []
    if getattr(args, "coupling", None) is not None:
        tokens.append(repr(float(args.coupling)))
    if not tokens:
        raise ValueError("give --coupling or --sweep")
    return [(t, fam(float(t))) for t in tokens]


def _workers(n_tasks: int) -> int:
    return max(1, min(n_tasks, multibody.worker_count()))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    jobs = _problems(args, 2000.0)
    with ThreadPoolExecutor(max_workers=_workers(len(jobs))) as pool:
        results = list(pool.map(lambda job: ground_state(job[1]), jobs))
    summary = []
    for (label, _), res in zip(jobs, results):
        name = f"groundstate_{label}.csv"
        write_atomic(args.output / name, res.wavefunction.to_csv())
        summary.append({"coupling": label, "energy": res.energy, "residual": res.residual, "file": name})
    _emit({"results": summary}, None, "")
    return EXIT_OK


def cmd_critical(args) -> int:
    fam = criticality.family(args.family, args.dimension, _grid(args, 1e4), args.mass_factor)
    interval = tuple(float(x) for x in _float_list(args.interval)) if args.interval else None
    if interval is not None and len(interval) != 2:
        raise ValueError("--interval needs lo,hi")
    value = criticality.critical_coupling(fam, interval, args.tol)
    _emit({"lambda_cr": value, "tol": args.tol, "predicate": "zero_energy_node"}, args.output, "critical.json")
    return EXIT_OK


def cmd_envelope(args) -> int:
    (label, problem), *rest = _problems(args, 5000.0)
    if rest:
        raise ValueError("envelope takes a single coupling")
    res = ground_state(problem)
    env = envelopes.build_envelope(problem, res.energy, args.shave, args.R)
    write_atomic(args.output / "envelope.csv", env.to_csv())
    kappa = math.sqrt(max(problem.sigma - res.energy, 0.0))
    if args.window:
        window = tuple(float(x) for x in _float_list(args.window))
    elif args.model == "ExpLinear":
        window = (20.0 / kappa, 100.0 / kappa)
    else:
        window = (100.0, 1600.0)
    fit = envelopes.fit_decay(res.wavefunction, args.model, window)
    write_atomic(args.output / "fit.json", fit.to_json() + "\n")
    verdict = envelopes.verify_envelope(res.wavefunction, env)
    out = {"coupling": label, "energy": res.energy, "fit": json.loads(fit.to_json())}
    if isinstance(verdict, envelopes.Dominates):
        out["verify"] = {"result": "Dominates", "C": verdict.C}
    else:
        out["verify"] = {"result": "Violated", "r_star": verdict.r_star}
    _emit(out, None, "")
    return EXIT_OK


def cmd_classify(args) -> int:
    (label, problem), *rest = _problems(args, 1e4)
    if rest:
        raise ValueError("classify takes a single coupling")
    cmp = criticality.TailComparison(problem.dimension, args.R0, args.eps)
    out = {"tail": criticality.classify_tail(problem.potential, cmp).value}
    if args.crosscheck:
        out["crosscheck"] = criticality.existence_crosscheck(problem).value
    _emit(out, args.output, "classify.json")
    return EXIT_OK


def _region(args) -> multibody.RegionParams:
    return multibody.RegionParams(args.delta, args.alpha)


def cmd_helium(args) -> int:
    rp = _region(args)
    if args.config is not None:
        cfg = ManyBodyConfig.from_dict(_load_json(args.config))
        if cfg.N != 2:
            raise ValueError("helium needs exactly two electrons")
        x1, x2 = cfg.positions
        region = multibody.helium_region(x1, x2, rp)
        if region is multibody.HeliumRegion.INSIDE:
            bound = multibody.helium_bound_inside(x1, x2, cfg.Z, rp)
        else:
            bound = multibody.helium_bound_outside(x1, x2, cfg.Z, rp)
        _emit({"region": region.value, "bound": bound, "potential": many_body_potential(cfg)}, args.output, "helium.json")
        return EXIT_OK
    counts = multibody.sweep_helium(rp, args.samples, args.seed, args.Z)
    _emit(counts, args.output, "helium_sweep.json")
    return EXIT_OK


def cmd_natom(args) -> int:
    if args.config is not None:
        cfg = ManyBodyConfig.from_dict(_load_json(args.config))
        trace = multibody.iterative_split_trace(cfg, args.delta)
        out = {
            "region": multibody.natom_region(cfg, args.delta).value,
            "bound": multibody.natom_lower_bound(cfg, args.delta),
            "potential": many_body_potential(cfg),
            "trace": [{"label": s.label, "bound": s.bound} for s in trace],
        }
        _emit(out, args.output, "natom.json")
        return EXIT_OK
    deltas = tuple(float(x) for x in _float_list(args.deltas))
    cells = multibody.run_natom_sweeps(args.samples, args.seed, args.n_max, deltas, args.Z)
    write_atomic(args.output / "natom_sweep.csv", multibody.sweep_csv(cells))
    _emit({"cells": len(cells), "violations": sum(c.violations for c in cells)}, None, "")
    return EXIT_OK


def cmd_volume(args) -> int:
    rp = _region(args)
    radii = [float(x) for x in _float_list(args.radii)]
    vols = multibody.region_volumes(rp, radii, args.samples, args.seed)
    exponent = multibody.region_volume_exponent(rp, radii, args.samples, args.seed)
    out = {
        "exponent": exponent,
        "analytic": 1.0 + 2.0 * rp.alpha,
        "radii": radii,
        "volumes": vols.tolist(),
        "seed": args.seed,
        "samples": args.samples,
    }
    _emit(out, args.output, "volume.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _radial_options(p: argparse.ArgumentParser, couplings: bool = True) -> None:
    p.add_argument("--family", choices=criticality.FAMILIES)
    p.add_argument("--problem", help="problem JSON (inline or path)")
    if couplings:
        p.add_argument("--coupling", type=float)
    p.add_argument("--dimension", type=int)
    p.add_argument("--mass-factor", type=float, default=1.0)
    p.add_argument("--grid", choices=("log", "uniform"), default="log")
    p.add_argument("--r-max", type=float)
    p.add_argument("--step", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brink", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", type=Path, default=Path("."), help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser  # type: ignore[method-assign]

    p = sub.add_parser("solve", help="ground states, one CSV per coupling")
    _radial_options(p)
    p.add_argument("--sweep", help="comma-separated couplings")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("critical", help="critical coupling by bisection")
    p.add_argument("--family", choices=criticality.FAMILIES, required=True)
    p.add_argument("--dimension", type=int)
    p.add_argument("--mass-factor", type=float, default=1.0)
    p.add_argument("--grid", choices=("log", "uniform"), default="log")
    p.add_argument("--r-max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--interval", help="lo,hi")
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("envelope", help="decay envelope, fit and domination check")
    _radial_options(p)
    p.add_argument("--shave", type=float, default=0.05)
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--model", choices=("ExpLinear", "ExpSqrt"), default="ExpSqrt")
    p.add_argument("--window", help="lo,hi")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("classify", help="zero-energy existence side of a tail")
    _radial_options(p)
    p.add_argument("--R0", type=float, default=10.0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--crosscheck", action="store_true", help="also classify the decaying zero-energy branch")
    p.set_defaults(func=cmd_classify)

    for name, func in (("helium", cmd_helium), ("natom", cmd_natom)):
        p = sub.add_parser(name, help=f"{name} region bounds, one config or a seeded sweep")
        p.add_argument("--config", help="config JSON (inline or path); omit for a sweep")
        p.add_argument("--delta", type=float, default=0.3)
        p.add_argument("--samples", type=int, default=10**5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--Z", type=float, default=multibody.Z_CRITICAL)
        if name == "helium":
            p.add_argument("--alpha", type=float, default=1.0)
        else:
            p.add_argument("--deltas", default="0.1,0.3,0.5")
            p.add_argument("--n-max", type=int, default=5)
        p.set_defaults(func=func)

    p = sub.add_parser("volume", help="Monte Carlo region volume exponent")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--radii", default="1,10,100,1000")
    p.set_defaults(func=cmd_volume)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"brink {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"brink {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
