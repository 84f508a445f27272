"""Command-line driver: ``qglab spectrum | experiment | presets``.

Exit codes: 0 ok, 1 experiment ran but some check failed, 2 configuration
error, 3 certification failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import _io
from .config import ConfigError, parse_graph_config
from .experiments import list_presets, parse_plan, run_plan, with_overrides
from .graph import Dirichlet, GraphValidationError, MetricGraph
from .solver import CertificationError, SolverOptions, Spectrum, solve
from .spectral_stats import InsufficientSpectrumError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_CERT, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("qglab")


class _IOFailure(Exception):
    pass


def _load_json(path: str | None):
    if path is None:
        raise ConfigError("--config is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from None


def _check_writable(out: str) -> Path:
    p = Path(out)
    try:
        p.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=p):
            pass
    except OSError as exc:
        raise _IOFailure(f"output directory {out} is not writable: {exc}") from None
    return p


def graph_json(g: MetricGraph) -> dict:
    return {
        "vertices": [
            {"id": i, "condition": str(v.condition), "position": v.position, "attached": v.attached}
            for i, v in enumerate(g.vertices)
        ],
        "edges": [
            {
                "id": i,
                "tail": e.tail,
                "head": e.head,
                "length": e.length,
                "potential": {"breakpoints": list(e.potential.breakpoints), "values": list(e.potential.values)},
            }
            for i, e in enumerate(g.edges)
        ],
    }


def spectrum_files(spec: Spectrum) -> dict[str, str]:
    n = len(spec)
    resid = spec.residuals if spec.residuals is not None else np.zeros(n)
    rows = [[i + 1, spec.eigenvalues[i], int(spec.multiplicity[i]), float(resid[i])] for i in range(n)]
    csv = _io.csv_text(["n", "lambda", "multiplicity", "residual"], rows)
    efs = []
    if spec.has_eigenfunctions:
        A = spec.coef_a.toarray()
        B = spec.coef_b.toarray()
        efs = [{"n": i + 1, "lambda": spec.eigenvalues[i], "A": A[i], "B": B[i]} for i in range(n)]
    doc = {
        "representation": "on edge e, f_n(t) = A[e] c(t) + B[e] s(t); (c, s) solve -f'' + q f = lambda f "
        "with c(0)=1, c'(0)=0, s(0)=0, s'(0)=1 at the edge tail; L2-normalized",
        "method": spec.method,
        "graph": graph_json(spec.graph),
        "eigenfunctions": efs,
    }
    return {"spectrum.csv": csv, "eigenfunctions.json": _io.dumps(doc)}


def cmd_spectrum(args) -> int:
    cfg = parse_graph_config(_load_json(args.config))
    g = cfg.build()
    n = args.n
    if n is None and args.lmax is None:
        n = 20
    opts = SolverOptions(
        n_target=n,
        lam_max=args.lmax,
        bisect_tol=args.tol if args.tol is not None else 1e-13,
        oracle_check=args.oracle,
    )
    out = _check_writable(args.out)
    if any(isinstance(c, Dirichlet) for c in g.conditions) and all(isinstance(c, Dirichlet) for c in g.conditions):
        log.info("all vertices Dirichlet: spectrum is the union of the edge spectra")
    spec = solve(g, opts)
    files = spectrum_files(spec)
    _io.write_atomic({out / name: text for name, text in files.items()})
    print(f"wrote {len(spec)} eigenvalues to {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.preset is not None and args.config is not None:
        raise ConfigError("give either --config or --preset")
    obj = {"preset": args.preset} if args.preset is not None else _load_json(args.config)
    plan = with_overrides(parse_plan(obj), tol=args.tol, N=args.n, seed=args.seed)
    out = _check_writable(args.out)
    report = run_plan(plan)
    report.write(out)
    status = "PASS" if report.passed else "FAIL"
    print(f"{plan.tag}: {status} " + " ".join(f"{k}={v}" for k, v in report.checks.items()))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_presets(args) -> int:
    for name, tag, desc in list_presets():
        print(f"{name:20s} {tag:15s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qglab", description="Spectra of quantum graphs with delta couplings.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--n", type=int, help="number of eigenvalues / largest N")
        sp.add_argument("--tol", type=float, help="relative tolerance")
        sp.add_argument("--seed", type=int, help="seed for randomized grids")

    sp = sub.add_parser("spectrum", help="solve one graph, write spectrum.csv and eigenfunctions.json")
    common(sp)
    sp.add_argument("--lmax", type=float, help="all eigenvalues up to this value")
    sp.add_argument("--oracle", action="store_true", help="cross-check against the finite-element oracle")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("experiment", help="run an experiment plan, write report.csv and report.json")
    common(sp)
    sp.add_argument("--preset", help="run a named preset instead of --config")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("presets", help="list the experiment presets")
    sp.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # option validation (SolverOptions and friends)
        if isinstance(exc, InsufficientSpectrumError):
            print(f"certification error: {exc}", file=sys.stderr)
            return EXIT_CERT
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"certification error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (_IOFailure, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
