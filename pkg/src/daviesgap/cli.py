"""Command-line front end.

Commands:
  example   emit a model-system instance document (JSON)
  bounds    run the full bound pipeline on an instance, emit a JSON report
  exact     dense + block-oracle spectral gaps only
  blocks    debug dump of the Bohr blocks, graphs and trees
  sweep     grid of instances -> CSV rows
  evolve    trajectory distances and the convergence envelope -> CSV

Every error family maps to a fixed exit code (EXIT_CODES); malformed input
never produces a traceback.  The environment variable DAVIES_DENSE_LIMIT
overrides the dense-oracle dimension cutoff.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import blocks as _blocks
from . import bounds as _bounds
from . import graphs as _graphs
from . import liouvillian as _liouvillian
from . import systems as _systems
from .errors import (
    ConfigError,
    DaviesGapError,
    DegenerateNormalization,
    DegenerateSpectrum,
    DimensionOverflow,
    Disconnected,
    EmptyCouplings,
    InvalidArguments,
    InvalidState,
    KernelMismatch,
    MalformedDocument,
    MissingBathFrequency,
    NonHermitianCoupling,
    NotPrimitive,
    NoValidBound,
    SingularVariance,
    UnknownBathKind,
    UnknownFrequency,
    VertexNotInTree,
)
from .model import gibbs, load_system

EXIT_CODES = {
    MalformedDocument: 2,
    DegenerateSpectrum: 3,
    NonHermitianCoupling: 4,
    EmptyCouplings: 5,
    UnknownBathKind: 6,
    MissingBathFrequency: 6,
    UnknownFrequency: 6,
    Disconnected: 7,
    NotPrimitive: 7,
    DimensionOverflow: 8,
    NoValidBound: 9,
    InvalidState: 10,
    InvalidArguments: 11,
    VertexNotInTree: 11,
    KernelMismatch: 11,
    SingularVariance: 11,
    DegenerateNormalization: 12,
    ConfigError: 13,
}

SWEEP_COLUMNS = (
    "model,size,beta,gamma,lambda_cl_exact,lambda_qm_exact,tau0,tau0_hat,"
    "lambda_qm_gersh,lambda_qm_tree,lambda_lower,lambda_exact,tmix_bound,error"
)


def _fmt(value) -> str:
    """Shortest round-trip representation; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_spec(args):
    if getattr(args, "input", None):
        try:
            with open(args.input) as fh:
                text = fh.read()
        except OSError as exc:
            raise MalformedDocument(f"cannot read {args.input}: {exc}") from None
        return load_system(text)
    if getattr(args, "example", None):
        if args.size is None:
            raise ConfigError("--size is required with --example")
        beta = args.beta if args.beta is not None else (args.K or 0.0)
        return _systems.make_model(
            args.example, args.size, args.gamma, beta, g=args.g
        )
    raise ConfigError("need --input <file> or --example <name>")


def cmd_example(args) -> int:
    beta = args.beta if args.beta is not None else (args.K or 0.0)
    spec = _systems.make_model(args.name, args.size, args.gamma, beta, g=args.g)
    _write_text(args.output, json.dumps(spec.to_document(), indent=2))
    return 0


def cmd_bounds(args) -> int:
    spec = _load_spec(args)
    report = _bounds.compute_report(
        spec, with_full_oracle=False if args.no_oracle else None
    )
    if report.lambda_lower is None:
        raise NoValidBound("; ".join(f"{k}: {v}" for k, v in report.errors.items()))
    payload = report.to_dict()
    payload["tmix_bound"] = report.mixing_time(args.epsilon)
    payload["epsilon"] = args.epsilon
    _write_text(args.output, json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_exact(args) -> int:
    spec = _load_spec(args)
    w = gibbs(spec)
    out = {"dim": spec.dim, "beta": spec.beta, "sigma_min": w.sigma_min}
    gaps = _blocks.all_block_gaps(spec, w)
    out["block_gaps"] = {repr(k): v for k, v in gaps.items()}
    out["lambda_cl_exact"] = gaps[0.0]
    positives = [v for k, v in gaps.items() if k > 0.0]
    out["lambda_qm_exact"] = min(positives) if positives else None
    if not args.no_oracle:
        sop = _liouvillian.build_davies(spec)
        out["detailed_balance_residual"] = _liouvillian.detailed_balance_residual(
            sop, w
        )
        out["lambda_exact"] = _liouvillian.exact_gap(sop, w)
    _write_text(args.output, json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_blocks(args) -> int:
    spec = _load_spec(args)
    w = gibbs(spec)
    idx = _blocks.bohr_index(spec)
    payload = {"dim": spec.dim, "frequencies": idx.freqs.tolist(),
               "group_diameters": idx.diameters.tolist(), "blocks": []}
    for gi in range(idx.zero_index, idx.n_freqs):
        nu = float(idx.freqs[gi])
        db = _blocks.dirichlet_block(spec, w, idx, nu)
        graph = _graphs.build_graph(db)
        entry = {
            "nu": nu,
            "basis": db.basis.tolist(),
            "phi": db.phi.tolist(),
            "sigma_pairs": db.sigma_pairs.tolist(),
            "matrix_re": np.real(db.matrix).tolist(),
            "matrix_im": np.imag(db.matrix).tolist(),
            "edges": [
                {
                    "i": i,
                    "j": j,
                    "lam_plus": graph.weight_plus[(i, j)],
                    "lam_minus": graph.weight_minus[(i, j)],
                    "theta": graph.theta[(i, j)],
                }
                for i, j in graph.edges
            ],
        }
        if nu > 0.0:
            tree = _graphs.spanning_tree(graph)
            entry["tree_edges"] = [list(e) for e in tree.edges]
            entry["removed_edges"] = [list(e) for e in tree.removed]
        payload["blocks"].append(entry)
    _write_text(args.output, json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _parse_list(text, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None


def _sweep_row(task: dict) -> dict:
    """One grid point; runs inside a worker process for parallel sweeps."""
    values = {"model": task["model"], "size": task["size"], "beta": task["beta"],
              "gamma": task["gamma"]}
    error = ""
    try:
        spec = _systems.make_model(task["model"], task["size"], task["gamma"],
                                   task["beta"], g=task["g"])
        report = _bounds.compute_report(
            spec,
            with_bounds="bounds" in task["quantities"],
            with_block_oracle="exact" in task["quantities"],
            with_full_oracle=False if task["no_oracle"] else None,
        )
        for key in ("lambda_cl_exact", "lambda_qm_exact", "tau0", "tau0_hat",
                    "lambda_qm_gersh", "lambda_qm_tree", "lambda_lower",
                    "lambda_exact"):
            values[key] = getattr(report, key)
        if report.lambda_lower is not None:
            values["tmix_bound"] = report.mixing_time(task["epsilon"])
        if report.errors:
            error = "; ".join(f"{k}: {v}" for k, v in report.errors.items())
    except DaviesGapError as exc:
        error = f"{type(exc).__name__}: {exc}"
    values["error"] = error
    return values


def cmd_sweep(args) -> int:
    sizes = _parse_list(args.sizes, int)
    betas = _parse_list(args.betas, float)
    if not sizes or not betas:
        raise ConfigError("sweep needs non-empty --sizes and --betas")
    quantities = set(_parse_list(args.quantities, str))
    unknown = quantities - {"exact", "bounds"}
    if unknown:
        raise ConfigError(f"unknown quantities {sorted(unknown)}")
    tasks = [
        {"model": args.model, "size": size, "beta": beta, "gamma": args.gamma,
         "g": args.g, "epsilon": args.epsilon, "quantities": quantities,
         "no_oracle": args.no_oracle}
        for size in sizes
        for beta in betas
    ]
    if args.workers > 1:
        # rows computed in a worker pool; the collector keeps config order
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_row, tasks, chunksize=1))
    else:
        results = [_sweep_row(task) for task in tasks]
    columns = SWEEP_COLUMNS.split(",")
    if args.format == "json":
        payload = [{col: values.get(col) for col in columns} for values in results]
        _write_text(args.output, json.dumps(payload, indent=2))
        return 0
    rows = [SWEEP_COLUMNS]
    for values in results:
        rows.append(",".join(_fmt(values.get(col)) for col in columns))
    _write_text(args.output, "\n".join(rows) + "\n")
    return 0


def _initial_state(choice, w, dim):
    if choice == "sigma":
        return np.diag(w.sigma).astype(complex)
    if choice == "worst":
        k = int(np.argmin(w.sigma))
    elif choice.startswith("level:"):
        k = int(choice.split(":", 1)[1])
        if not 0 <= k < dim:
            raise InvalidArguments(f"level {k} outside 0..{dim - 1}")
    else:
        raise ConfigError(f"unknown rho0 choice {choice!r}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[k, k] = 1.0
    return rho


def cmd_evolve(args) -> int:
    spec = _load_spec(args)
    w = gibbs(spec)
    report = _bounds.compute_report(spec, with_full_oracle=False)
    if report.lambda_lower is None:
        raise NoValidBound("no valid lower bound for the envelope")
    sop = _liouvillian.build_davies(spec)
    rho0 = _initial_state(args.rho0, w, spec.dim)
    times = sorted(_parse_list(args.times, float))
    if not times:
        raise ConfigError("need at least one time in --times")
    tracked = _liouvillian.evolve_and_track(sop, rho0, w, times)
    lines = ["t,trace_distance,chi2,envelope"]
    prefactor = (1.0 / w.sigma_min) ** 0.5
    for t, (td, chi2) in zip(times, tracked):
        env = prefactor * np.exp(-report.lambda_lower * t)
        lines.append(",".join(_fmt(v) for v in (float(t), td, chi2, float(env))))
    _write_text(args.output, "\n".join(lines) + "\n")
    return 0


def _add_instance_flags(p, with_example_flag=True):
    if with_example_flag:
        p.add_argument("--example", choices=_systems.MODEL_NAMES,
                       help="generate a model instance instead of reading a file")
        p.add_argument("--input", help="instance document (JSON file)")
    p.add_argument("--size", type=int, help="model size (N or D)")
    p.add_argument("--gamma", type=float, default=1.0, help="coupling strength")
    p.add_argument("--K", type=float, default=None,
                   help="dimensionless beta*eps (alias for --beta)")
    p.add_argument("--beta", type=float, default=None, help="inverse temperature")
    p.add_argument("--g", type=float, default=0.0,
                   help="on-site shift for particle_line")
    p.add_argument("--output", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daviesgap",
        description="Spectral-gap bounds and oracles for Davies generators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="emit a model instance document")
    p.add_argument("name", choices=_systems.MODEL_NAMES)
    _add_instance_flags(p, with_example_flag=False)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("bounds", help="full bound pipeline, JSON report")
    _add_instance_flags(p)
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="target accuracy for the mixing-time bound")
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the dense superoperator oracle")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("exact", help="exact oracles only")
    _add_instance_flags(p)
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the dense superoperator oracle")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("blocks", help="debug dump of blocks, graphs and trees")
    _add_instance_flags(p)
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("sweep", help="grid of instances to CSV")
    p.add_argument("--model", required=True, choices=_systems.MODEL_NAMES)
    p.add_argument("--sizes", required=True, help="comma-separated sizes")
    p.add_argument("--betas", default="0", help="comma-separated betas")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--g", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--quantities", default="exact,bounds",
                   help="subset of {exact,bounds}")
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes for the grid")
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evolve", help="trajectory distances to CSV")
    _add_instance_flags(p)
    p.add_argument("--rho0", default="worst",
                   help="initial state: worst | sigma | level:<k>")
    p.add_argument("--times", default="0,0.5,1,2,4",
                   help="comma-separated times (sorted in output)")
    p.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DaviesGapError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        for klass, code in EXIT_CODES.items():
            if isinstance(exc, klass):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
