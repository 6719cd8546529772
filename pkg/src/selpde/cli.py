"""Command line interface: run / slice / compare.

Configs are INI files whose sections are purely organizational; all keys
live in one flat namespace named after the usual symbols (N1, N2, n,
n1, n2, lambda, epsilon, m, L, m_s, L_s, m0, M0, h, method, problem, d,
seed, ...). Numbers in emitted CSVs carry 17 significant digits so they
round-trip through float64.

Exit codes: 0 success, 2 configuration error, 3 diverged run (partial
artifacts are kept).
"""

import argparse
import configparser
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import _kernels
from .net import MlpNetwork, NetworkShape, SelectionNetwork, SolutionAnsatz
from .operators import OperatorConfig, apply_operator
from .problems import make_problem
from .trainer import METHODS, TrainConfig, run_trials, train

ERROR_CSV_HEADER = "iteration,seconds,loss_interior,loss_boundary,loss_penalty,rel_l2_error,lr"


class ConfigError(Exception):
    pass


# key -> (TrainConfig attribute, parser); "lambda" is a Python keyword,
# hence the lam attribute
_INT_KEYS = ("N1", "N2", "n", "n1", "n2", "m", "L", "m_s", "L_s", "d", "seed",
             "eval_every", "n_test", "annuli", "lr_floor_after")
_FLOAT_KEYS = ("epsilon", "m0", "M0", "h", "tau_s", "p", "w_large", "w_small",
               "lr_floor", "time_budget_seconds")
_STR_KEYS = ("method", "problem", "activation", "sel_activation", "optimizer",
             "boundary_mode", "strategy")

CONFIG_KEYS = {key: (key, int) for key in _INT_KEYS}
CONFIG_KEYS.update({key: (key, float) for key in _FLOAT_KEYS})
CONFIG_KEYS.update({key: (key, str) for key in _STR_KEYS})
CONFIG_KEYS["lambda"] = ("lam", float)

# subcommand-level keys that may sit in the same file
EXTRA_KEYS = {"trials": int, "methods": str, "grid": int}


def parse_config_file(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str  # N1 and n1 are distinct keys
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}")
    flat = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in flat:
                raise ConfigError(f"duplicate config key {key!r}")
            flat[key] = raw
    return flat


def build_config(flat):
    """Flat key/value strings -> (TrainConfig, extras)."""
    kwargs, extras = {}, {}
    for key, raw in flat.items():
        if key in CONFIG_KEYS:
            attr, cast = CONFIG_KEYS[key]
            try:
                kwargs[attr] = cast(raw)
            except ValueError:
                raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {cast.__name__}")
        elif key in EXTRA_KEYS:
            try:
                extras[key] = EXTRA_KEYS[key](raw)
            except ValueError:
                raise ConfigError(f"key {key!r}: cannot parse {raw!r}")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for required in ("problem", "d"):
        if required not in kwargs:
            raise ConfigError(f"config must set {required!r}")
    try:
        config = TrainConfig(**kwargs)
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    return config, extras


def load_config(path):
    return build_config(parse_config_file(path))


def _fmt(value):
    return f"{value:.17g}"


def write_error_csv(path, records):
    lines = [ERROR_CSV_HEADER]
    for r in records:
        lines.append(",".join([
            str(r.iteration), _fmt(r.seconds), _fmt(r.loss_interior),
            _fmt(r.loss_boundary), _fmt(r.loss_penalty),
            _fmt(r.rel_l2_error), _fmt(r.lr),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def _network_meta(network):
    return {
        "input_dim": network.shape.input_dim,
        "width": network.shape.width,
        "depth": network.shape.depth,
        "activation": network.activation,
    }


def _pack_network(arrays, prefix, network):
    for i, w in enumerate(network.weights):
        arrays[f"{prefix}_w{i}"] = w
    for i, b in enumerate(network.biases):
        arrays[f"{prefix}_b{i}"] = b


def _unpack_network(npz, prefix, meta):
    shape = NetworkShape(meta["input_dim"], meta["width"], meta["depth"])
    weights = [npz[f"{prefix}_w{i}"] for i in range(shape.depth + 1)]
    biases = [npz[f"{prefix}_b{i}"] for i in range(shape.depth + 1)]
    return MlpNetwork(shape, meta["activation"], weights, biases)


def write_run_artifacts(out_dir, config, result, config_path):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_error_csv(out / "errors.csv", result.records)

    arrays = {}
    _pack_network(arrays, "solution", result.ansatz.core)
    networks = {"solution": {**_network_meta(result.ansatz.core),
                             "mask": result.ansatz.mask}}
    for name, sel in (("sel_interior", result.sel_interior),
                      ("sel_boundary", result.sel_boundary)):
        if sel is not None:
            _pack_network(arrays, name, sel.core)
            networks[name] = {**_network_meta(sel.core),
                              "m0": sel.m0, "M0": sel.M0}
    np.savez(out / "params.npz", **arrays)

    metadata = {
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "config": dataclasses.asdict(config),
        "rng": result.rng_metadata,
        "networks": networks,
        "diverged": result.diverged,
        "final_error": result.final_error,
        "elapsed_seconds": result.elapsed_seconds,
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2) + "\n")

    artifacts = ["errors.csv", "params.npz", "metadata.json"]
    manifest = {
        "config_path": str(config_path),
        "out_dir": str(out),
        "artifacts": artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def cmd_run(args):
    config, _ = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.time_budget_seconds is not None:
        config.time_budget_seconds = args.time_budget_seconds
    config.validate()
    result = train(config)
    write_run_artifacts(args.out_dir, config, result, args.config)
    if result.diverged:
        print(f"run diverged at iteration {result.records[-1].iteration}; "
              f"partial artifacts in {args.out_dir}", file=sys.stderr)
        return 3
    print(f"final relative l2 error {_fmt(result.final_error)} "
          f"({len(result.records)} checkpoints) -> {args.out_dir}")
    return 0


def _load_run(run_dir):
    run = Path(run_dir)
    meta_path = run / "metadata.json"
    if not meta_path.exists():
        raise ConfigError(f"{run_dir} does not contain metadata.json")
    metadata = json.loads(meta_path.read_text())
    npz = np.load(run / "params.npz")
    networks = metadata["networks"]
    ansatz = SolutionAnsatz(
        _unpack_network(npz, "solution", networks["solution"]),
        networks["solution"]["mask"],
    )
    sels = {}
    for name in ("sel_interior", "sel_boundary"):
        if name in networks:
            meta = networks[name]
            sels[name] = SelectionNetwork(
                _unpack_network(npz, name, meta), meta["m0"], meta["M0"])
    config = TrainConfig(**metadata["config"])
    return config, ansatz, sels


def _slice_grid(problem, grid):
    """Plane through the domain: (x1, x2) for stationary problems,
    (t, x1) for time-dependent ones; remaining coordinates 0."""
    axis = np.linspace(-1.0, 1.0, grid)
    if problem.time_dependent:
        t = np.linspace(0.0, problem.T, grid)
        c1, c2 = np.meshgrid(t, axis, indexing="ij")
        points = np.zeros((grid * grid, problem.input_dim))
        points[:, 0] = c2.ravel()               # x1
        points[:, problem.d] = c1.ravel()       # t is the last column
    else:
        c1, c2 = np.meshgrid(axis, axis, indexing="ij")
        points = np.zeros((grid * grid, problem.input_dim))
        points[:, 0] = c1.ravel()
        points[:, 1] = c2.ravel()
    coords = np.column_stack([c1.ravel(), c2.ravel()])
    if problem.domain in ("ball", "cylinder"):
        keep = (points[:, :problem.d] ** 2).sum(axis=1) <= 1.0 + 1e-12
        points, coords = points[keep], coords[keep]
    return coords, points


def _write_slice_csv(path, coords, values):
    lines = ["coord1,coord2,value"]
    for (c1, c2), v in zip(coords, values):
        lines.append(f"{_fmt(c1)},{_fmt(c2)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_slice(args):
    if args.grid < 2:
        raise ConfigError("grid must be at least 2")
    config, ansatz, sels = _load_run(args.run_dir)
    problem = make_problem(config.problem, config.d)
    coords, points = _slice_grid(problem, args.grid)
    out = Path(args.out_dir) if args.out_dir else Path(args.run_dir)
    out.mkdir(parents=True, exist_ok=True)

    _write_slice_csv(out / "slice_solution.csv", coords, ansatz.values(points))
    opconfig = OperatorConfig(h=config.h)
    du, _ = apply_operator(ansatz, problem.operator, points, opconfig)
    with np.errstate(invalid="ignore"):
        residual = np.abs(du - problem.f(points))
    _write_slice_csv(out / "slice_residual.csv", coords, residual)
    written = ["slice_solution.csv", "slice_residual.csv"]
    if "sel_interior" in sels:
        _write_slice_csv(out / "slice_selection.csv", coords,
                         sels["sel_interior"].values(points))
        written.append("slice_selection.csv")
    print(f"wrote {', '.join(written)} ({len(coords)} grid points) -> {out}")
    return 0


def cmd_compare(args):
    config, extras = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    trials = args.trials if args.trials is not None else extras.get("trials", 5)
    methods_raw = args.methods or extras.get("methods", "basic,selectnet")
    methods = [m.strip() for m in methods_raw.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r} in comparison")
    if trials < 1:
        raise ConfigError("trials must be positive")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["method,trials,mean_error,stdev,cv"]
    print("method        mean_error    stdev         cv")
    for method in methods:
        stats = run_trials(dataclasses.replace(config, method=method), trials)
        lines.append(",".join([
            method, str(trials), _fmt(stats.mean), _fmt(stats.stdev), _fmt(stats.cv),
        ]))
        print(f"{method:<12}  {stats.mean:<12.4e}  {stats.stdev:<12.4e}  {stats.cv:.4f}")
    (out / "stats.csv").write_text("\n".join(lines) + "\n")
    manifest = {
        "config_path": str(args.config),
        "out_dir": str(out),
        "artifacts": ["stats.csv"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="selpde",
        description="mesh-free PDE solver with adaptively weighted residual training",
    )
    parser.add_argument("--version", action="version", version=f"selpde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one model and write its error table")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out-dir", default="run_out")
    run.add_argument("--time-budget-seconds", type=float, default=None)
    run.set_defaults(fn=cmd_run)

    slc = sub.add_parser("slice", help="export plane slices of a finished run")
    slc.add_argument("run_dir")
    slc.add_argument("--grid", type=int, default=101)
    slc.add_argument("--out-dir", default=None)
    slc.set_defaults(fn=cmd_slice)

    cmp_ = sub.add_parser("compare", help="multi-trial statistics across methods")
    cmp_.add_argument("config")
    cmp_.add_argument("--trials", type=int, default=None)
    cmp_.add_argument("--methods", default=None)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--out-dir", default="compare_out")
    cmp_.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:  # diverged trial inside compare
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
