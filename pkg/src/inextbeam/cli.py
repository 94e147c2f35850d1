"""Command-line interface: ``inextbeam {modes,tensors,flutter,simulate,sweep}``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .assembly import cache_key, save_tensors
from .config import ALIASES, ConfigError, SimConfig, load, load_preset, preset_names
from .diagnostics import summarize
from .dynamics import StepFailure, build_model, simulate, sweep
from .flutter import FlutterParams, sweep as flutter_sweep
from .modes import ModeBasis, RootFindingError
from .output import write_csv, write_flutter_table, write_json, write_sweep, write_trajectory
from .quadrature import QuadratureGrid

log = logging.getLogger("inextbeam")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad arguments; usage errors here are status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", metavar="PATH", default=d(None), help="YAML run configuration")
    parser.add_argument("--out", metavar="DIR", default=d(None), help="output directory (default: .)")
    parser.add_argument("--threads", metavar="K", type=_positive_int, default=d(1), help="worker processes for sweeps")
    parser.add_argument("--quad-points", metavar="M", type=_positive_int, default=d(None),
                        help="quadrature panels on [0, L] (default 4096)")
    parser.add_argument("--cache-dir", metavar="DIR", default=d(None),
                        help="tensor cache directory (default: $INEXTBEAM_CACHE_DIR or ~/.cache/inextbeam)")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="inextbeam", description="Spectral Galerkin simulator for the inextensible cantilever in axial flow.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("modes", help="clamped-free mode numbers and shape constants")
    _global_flags(p, suppress=True)
    p.add_argument("--n", type=_positive_int, default=6, help="number of modes")
    p.add_argument("--L", type=_positive_float, default=None, help="beam length (default: config or 1)")

    p = sub.add_parser("tensors", help="assemble and store the modal operators")
    _global_flags(p, suppress=True)
    p.add_argument("--n", type=_positive_int, default=None, help="number of modes (default: config)")
    p.add_argument("--L", type=_positive_float, default=None)

    p = sub.add_parser("flutter", help="linear growth rates over a U range and the flutter onset")
    _global_flags(p, suppress=True)
    p.add_argument("--n", type=_positive_int, default=None, help="number of modes (default: config)")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--k0", type=float, default=None)
    p.add_argument("--D", type=_positive_float, default=None)
    p.add_argument("--L", type=_positive_float, default=None)
    p.add_argument("--u-min", type=float, default=100.0)
    p.add_argument("--u-max", type=float, default=160.0)
    p.add_argument("--points", type=_positive_int, default=121, help="number of U samples")
    p.add_argument("--off-diagonal-only", action="store_true",
                   help="drop the diagonal flow terms beta U s_n(L)^2 / 2")

    for name, text in (("simulate", "integrate one configuration"), ("sweep", "run a configuration over a parameter grid")):
        p = sub.add_parser(name, help=text)
        _global_flags(p, suppress=True)
        p.add_argument("--preset", default=None, help=f"named preset ({', '.join(preset_names())})")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. U=140 or numerical.rel_tol=1e-8")
        p.add_argument("--t-end", type=float, default=None)
        if name == "sweep":
            p.add_argument("--param", default=None, help="parameter to vary (e.g. U, a, N)")
            p.add_argument("--values", default=None, help="comma-separated values")
            p.add_argument("--range", dest="grid", default=None, metavar="START:STOP:STEP",
                           help="inclusive grid")
    return parser


# -- config handling ----------------------------------------------------------------

def _parse_value(text: str):
    return yaml.safe_load(text)


def resolve_config(args) -> SimConfig:
    if getattr(args, "preset", None) and args.config:
        raise UsageError("--preset and --config are mutually exclusive")
    if getattr(args, "preset", None):
        cfg = load_preset(args.preset)
    elif args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load(args.config)
    else:
        cfg = SimConfig()
    changes = {}
    for item in getattr(args, "overrides", []):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        changes[key.strip()] = _parse_value(value)
    if getattr(args, "t_end", None) is not None:
        changes["numerical.t_end"] = args.t_end
    if args.quad_points is not None:
        changes["numerical.quad_points"] = args.quad_points
    return cfg.replace(**changes) if changes else cfg.validate()


def _cache_dir(args) -> Path:
    if args.cache_dir:
        return Path(args.cache_dir)
    env = os.environ.get("INEXTBEAM_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "inextbeam"


def _out(args) -> Path:
    return Path(args.out if args.out is not None else ".")


def _grid(cfg: SimConfig, L: float | None = None) -> QuadratureGrid:
    return QuadratureGrid(L if L is not None else cfg.physical.L, cfg.numerical.quad_points, cfg.numerical.quad_rule)


# -- subcommands ------------------------------------------------------------------

def cmd_modes(args) -> int:
    cfg = resolve_config(args)
    L = args.L if args.L is not None else cfg.physical.L
    basis = ModeBasis(args.n, L, _grid(cfg, L))
    rows = [(n + 1, float(basis.kappaL[n]), float(basis.C[n]), float(basis.c[n])) for n in range(args.n)]
    print(f"{'n':>3} {'kappa_n L':>12} {'C_n':>12} {'c_n':>12}")
    for n, k, C, c in rows:
        print(f"{n:>3} {k:>12.8f} {C:>12.8f} {c:>12.8f}")
    if args.out is not None:
        out = Path(args.out)
        path = out if out.suffix == ".csv" else out / "modes.csv"
        write_csv(path, ["n", "kappaL", "C", "c"], rows)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_tensors(args) -> int:
    cfg = resolve_config(args)
    if args.n is not None or args.L is not None:
        cfg = cfg.replace(**{k: v for k, v in (("numerical.N", args.n), ("physical.L", args.L)) if v is not None})
    basis, ts = build_model(cfg, _cache_dir(args))
    path = _out(args) / "tensors.npz"
    header = save_tensors(path, ts, basis)
    header["cache_key"] = cache_key(basis)
    write_json(_out(args) / "tensors.json", header)
    print(f"wrote {path} (N={ts.N}, checksum {header['checksum'][:16]})")
    return EXIT_OK


def cmd_flutter(args) -> int:
    cfg = resolve_config(args)
    p = cfg.physical
    params = FlutterParams(
        D=args.D if args.D is not None else p.D,
        L=args.L if args.L is not None else p.L,
        beta=args.beta if args.beta is not None else p.beta,
        k0=args.k0 if args.k0 is not None else p.k0,
        N=args.n if args.n is not None else cfg.numerical.N,
        diagonal_coupling=not args.off_diagonal_only,
    )
    if args.u_max < args.u_min:
        raise UsageError("--u-max must not be below --u-min")
    run_cfg = cfg.replace(**{"numerical.N": params.N, "physical.L": params.L, "physical.D": params.D})
    _, ts = build_model(run_cfg, _cache_dir(args))
    U = np.linspace(args.u_min, args.u_max, args.points)
    res = flutter_sweep(params, ts, U)
    out = _out(args)
    csv_path = write_flutter_table(out / "flutter.csv", res.U, res.branch_table, params.N)
    summary = {
        "Ucrit": res.Ucrit,
        "crossing": res.Ucrit is not None,
        "message": "" if res.Ucrit is not None else f"no crossing in range [{args.u_min}, {args.u_max}]",
        "N": params.N,
        "params": dict(params.__dict__),
        "U_range": [args.u_min, args.u_max, args.points],
    }
    json_path = write_json(out / "flutter.json", summary)
    if res.Ucrit is None:
        print(summary["message"])
    else:
        print(f"Ucrit = {res.Ucrit:.6f}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _manifest(cfg: SimConfig, wall: float, outputs: dict, status: str, message: str) -> dict:
    basis_key = None
    try:
        basis = ModeBasis(cfg.numerical.N, cfg.physical.L, _grid(cfg))
        basis_key = cache_key(basis)
    except RootFindingError:
        pass
    return {
        "config": cfg.to_dict(),
        "tensor_cache_key": basis_key,
        "version": __version__,
        "wall_time_s": wall,
        "outputs": outputs,
        "status": status,
        "truncated": status == "step_failure",
        "message": message,
    }


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    out = _out(args)
    t0 = time.perf_counter()
    traj = simulate(cfg, cache_dir=_cache_dir(args))
    summary = summarize(traj)
    summary["params"] = cfg.to_dict()
    o = cfg.output
    paths = {
        "trajectory": str(write_trajectory(out / o.trajectory, traj)),
        "summary": str(write_json(out / o.summary, summary)),
    }
    paths["manifest"] = str(out / o.manifest)
    write_json(paths["manifest"], _manifest(cfg, time.perf_counter() - t0, paths, traj.status, traj.message))
    print(f"{summary['classification']}: t_end_reached={traj.t_end_reached:g} E_final={summary['E_final']!r}")
    if traj.status == "step_failure":
        print(traj.message, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _sweep_values(args, cfg: SimConfig) -> tuple[str, list]:
    param = args.param or (cfg.sweep.param if cfg.sweep else None)
    if param is None:
        raise UsageError("sweep needs --param (or a sweep section in the config)")
    if args.values is not None and args.grid is not None:
        raise UsageError("--values and --range are mutually exclusive")
    if args.values is not None:
        text = args.values.strip()
        values = [_parse_value(v) for v in text.split(",")] if text else []
    elif args.grid is not None:
        try:
            start, stop, step = (float(v) for v in args.grid.split(":"))
        except ValueError:
            raise UsageError("--range expects START:STOP:STEP") from None
        if step == 0 or (stop - start) * step < 0:
            raise UsageError("--range step must move from START towards STOP")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [float(np.round(start + i * step, 12)) for i in range(n)]
    elif cfg.sweep is not None:
        values = list(cfg.sweep.values)
    else:
        raise UsageError("sweep needs --values or --range")
    if param not in ALIASES and "." not in param:
        raise UsageError(f"unknown sweep parameter {param!r}")
    return param, values


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    param, values = _sweep_values(args, cfg)
    if param in ("N", "numerical.N"):
        values = [int(v) for v in values]
    rows = sweep(cfg, param, values, threads=args.threads, cache_dir=_cache_dir(args))
    n_q = max([len(r.get("q_final") or []) for r in rows] + [cfg.numerical.N if not values else 0])
    name = cfg.sweep.output if cfg.sweep else "sweep.csv"
    path = write_sweep(_out(args) / name, rows, n_q)
    for r in rows:
        print(f"{param}={r['value']}: {r['classification']} ({r['status']})")
    print(f"wrote {path}")
    if any(r.get("status") == "error" for r in rows):
        return EXIT_NUMERICAL
    return EXIT_OK


COMMANDS = {"modes": cmd_modes, "tensors": cmd_tensors, "flutter": cmd_flutter,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"inextbeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RootFindingError, StepFailure, np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        print(f"inextbeam: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
