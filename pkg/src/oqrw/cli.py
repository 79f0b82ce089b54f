"""Command-line front end.

Subcommands::

    oqrw evolve   --model M --state S --steps N [--out DIR]
    oqrw qmc-eval --model M --state S --cylinder C [--steps N] [--horizon H]
    oqrw analyze  --model M --state S [--depth D] [--horizon H] [--n0 K] [--seed X]
    oqrw validate --model M
    oqrw classes  --model M          (classical models only)

Exit codes: 0 success or verdict (Inconclusive included), 1 validation
failure, 2 parse failure, 3 criteria disagreement. Set ``OQRW_LOG`` to
``error``, ``info`` or ``debug`` for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .evolution import site_distribution, trajectory
from .exceptions import CriterionDisagreement, OqrwError, ParseError, SchemaError
from .linalg import DEFAULT_TOL, rank
from .model import validate_model
from .qmc import DEFAULT_HORIZON, bbar, qmc_evaluate, verify_markov_pair
from .reducibility import CP_SEED, ProjectionFamily, analyze, classical_classes

log = logging.getLogger("oqrw")

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_DISAGREE = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class InputError(Exception):
    """Invalid command-line configuration (exit 1)."""


def _tol(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1e-2:
        raise argparse.ArgumentTypeError("tol must lie in (0, 1e-2)")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _nonnegative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def _path(p) -> Path:
    path = Path(p)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    return path


def _jsonable(obj):
    """Recursively convert matrices, families and numpy scalars to JSON-ready values."""
    if isinstance(obj, ProjectionFamily):
        return {
            "n0": obj.n0,
            "certified": obj.certified,
            "default": "identity" if obj.default is None else io.encode_matrix(obj.default),
            "blocks": [{"site": int(j), "matrix": io.encode_matrix(b)}
                       for j, b in sorted(obj.p.items())],
        }
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return io.encode_matrix(obj)
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, frozenset, set)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _emit(text: str, out_dir: Path | None, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    print(f"wrote {out_dir / name}")


def _csv(header, rows) -> str:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _require_valid(m, tol: float) -> None:
    report = validate_model(m, tol)
    if not report.valid:
        lines = [f"site {j}: defect {report.defects[j]:.6e}" for j in report.invalid_sites]
        if report.rule_defect is not None and report.rule_defect > tol:
            lines.append(f"lattice rule: defect {report.rule_defect:.6e}")
        raise InputError("model is not normalized\n" + "\n".join(lines))


def _load(args, state: bool = True):
    m = io.load_model(_path(args.model))
    _require_valid(m, args.tol)
    if not state:
        return m, None
    return m, io.load_state(_path(args.state))


def distribution_rows(traj) -> list:
    rows = []
    for n, s in enumerate(traj.states):
        for site, p in site_distribution(s).items():
            rows.append([n, site, f"{p:.17g}"])
    return rows


def cmd_evolve(args) -> int:
    m, rho0 = _load(args)
    traj = trajectory(m, rho0, args.steps, args.tol)
    table = _csv(["step", "site", "probability"], distribution_rows(traj))
    _emit(table, args.out, "distribution.csv")
    if args.out is not None:
        (args.out / "final_state.yaml").write_text(io.dump_yaml(io.state_to_dict(traj.states[-1])))
        print(f"wrote {args.out / 'final_state.yaml'}")
    return EXIT_OK


def cmd_qmc_eval(args) -> int:
    m, rho0 = _load(args)
    cyl = io.load_cylinder(_path(args.cylinder))
    need = cyl.n + args.horizon
    steps = need if args.steps is None else args.steps
    if steps < need:
        raise InputError(f"cylinder depth {cyl.n} plus horizon {args.horizon} exceeds "
                         f"{steps} steps")
    traj = trajectory(m, rho0, steps, args.tol)
    value = qmc_evaluate(traj, cyl, args.horizon)
    pair = verify_markov_pair(traj, cyl.n, args.horizon)
    fam = bbar(traj, cyl.n, args.horizon)
    report = {
        "value": value,
        "bbar_converged": fam.converged,
        "bbar_delta": fam.delta,
        "depth": cyl.n,
        "horizon": args.horizon,
        "steps": steps,
        "markov_pair": pair.as_dict(),
    }
    _emit(io.dumps(_jsonable(report)), args.out, "qmc_report.json")
    return EXIT_OK


def _class_table(P, tol) -> dict:
    cs = classical_classes(P, tol)
    return {"classes": [list(c) for c in cs.classes], "closed": cs.closed,
            "irreducible": cs.irreducible}


def cmd_analyze(args) -> int:
    m, rho0 = _load(args)
    verdict = analyze(m, rho0, depth=args.depth, tol=args.tol, horizon=args.horizon,
                      n0=args.n0, seed=args.seed)
    report = {
        "status": verdict.status,
        "depth_used": verdict.depth_used,
        "horizon": args.horizon,
        "tol": verdict.tol,
        "seed": args.seed,
        "reason": verdict.reason,
        "certificate": verdict.certificate,
        "witness": verdict.witness,
        "criteria": verdict.criteria,
    }
    if m.kind == "classical":
        report["classes"] = _class_table(m.stochastic, args.tol)
    _emit(io.dumps(_jsonable(report)), args.out, "verdict.json")
    if args.out is not None:
        traj = trajectory(m, rho0, verdict.depth_used, args.tol)
        rows = [[n, j, rank(b, args.tol)] for n, s in enumerate(traj.states)
                for j, b in s.blocks.items()]
        (args.out / "support_ranks.csv").write_text(_csv(["step", "site", "rank"], rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    m = io.load_model(_path(args.model))
    report = validate_model(m, args.tol)
    for j, d in sorted(report.defects.items()):
        flag = " boundary" if j in report.boundary else ""
        print(f"site {j}: defect {d:.6e}{flag}")
    if report.rule_defect is not None:
        print(f"lattice rule: defect {report.rule_defect:.6e}")
    print("valid" if report.valid else "invalid")
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_classes(args) -> int:
    m = io.load_model(_path(args.model))
    if m.kind != "classical":
        raise InputError("classes needs a model of kind 'classical'")
    table = _class_table(m.stochastic, args.tol)
    rows = [[k, " ".join(map(str, c)), str(closed).lower()]
            for k, (c, closed) in enumerate(zip(table["classes"], table["closed"]))]
    _emit(_csv(["class", "states", "closed"], rows), args.out, "classes.csv")
    if args.out is None:
        print(f"irreducible: {str(table['irreducible']).lower()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oqrw", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, state=True):
        p.add_argument("--model", required=True, help="model document (YAML or JSON)")
        if state:
            p.add_argument("--state", required=True, help="initial state document")
        p.add_argument("--tol", type=_tol, default=DEFAULT_TOL)
        p.add_argument("--out", type=Path, default=None, help="output directory")

    p = sub.add_parser("evolve", help="per-step site distribution as CSV")
    common(p)
    p.add_argument("--steps", type=_nonnegative, required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("qmc-eval", help="chain value of a cylinder observable")
    common(p)
    p.add_argument("--cylinder", required=True)
    p.add_argument("--steps", type=_nonnegative, default=None)
    p.add_argument("--horizon", type=_positive, default=DEFAULT_HORIZON)
    p.set_defaults(func=cmd_qmc_eval)

    p = sub.add_parser("analyze", help="reducibility verdict with per-criterion report")
    common(p)
    p.add_argument("--depth", type=_positive, default=None)
    p.add_argument("--horizon", type=_positive, default=DEFAULT_HORIZON)
    p.add_argument("--n0", type=_nonnegative, default=None)
    p.add_argument("--seed", type=int, default=CP_SEED)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="normalization defects per site")
    common(p, state=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classes", help="communicating classes of a classical model")
    common(p, state=False)
    p.set_defaults(func=cmd_classes)
    return parser


def _configure_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("OQRW_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CriterionDisagreement as exc:
        print(f"internal error, criteria disagree: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
    except (InputError, OqrwError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
