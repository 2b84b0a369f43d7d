"""Command-line interface: synth, build-graph, propagate, grf, benchmark.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All numeric file
output uses 17-significant-digit decimals, so repeated runs with the same
flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import data as datamod
from . import evaluation
from .baselines import grf_harmonic
from .diffusion import (
    DiffusionConfig,
    decode_labels,
    init_labels,
    run_diffusion,
    write_energy_trace,
)
from .errors import (
    DegenerateDataError,
    DivergenceError,
    InputError,
    ParameterError,
    ShapeError,
    UnlabeledComponentError,
)
from .graph import auto_sigma_x, build_knn_graph, knn_neighborhoods, write_graph_triplets

VARIANT_FLAGS = {
    "iso": "isotropic",
    "plain": "plain",
    "smooth": "smooth",
    "match": "local_match",
}

CONFIG_KEYS = (
    "K",
    "sigma_f",
    "delta",
    "T",
    "warm_start",
    "variant",
    "mode",
    "clamp_labels",
)


def _add_data_flags(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", help="feature file, one point per row")
    src.add_argument("--distances", help="dense matrix or 'i j dist' triplets")


def _add_config_flags(p):
    p.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain")
    p.add_argument("--mode", choices=["linear", "nonlinear"], default="nonlinear")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--sigma-f", dest="sigma_f", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--warm-start", dest="warm_start", type=int, default=20)
    p.add_argument("--clamp-labels", dest="clamp_labels", action="store_true")
    p.add_argument("--config", help="key=value file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisodiff",
        description="Anisotropic diffusion on kNN graphs for label propagation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--kind", choices=["two-moons", "blobs"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.1, help="two-moons noise sd")
    p.add_argument("--classes", type=int, default=3, help="blobs class count")
    p.add_argument("--dim", type=int, default=2, help="blobs dimension")
    p.add_argument("--separation", type=float, default=6.0, help="blobs center gap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-graph", help="build the kNN graph and export edges")
    _add_data_flags(p)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--sigma-x", dest="sigma_x", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("propagate", help="diffuse labels and write predictions")
    _add_data_flags(p)
    p.add_argument("--labels", required=True, help="'index class' lines, labeled subset")
    p.add_argument("--truth", help="full ground-truth labels for scoring")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=0, help="unused; accepted for symmetry")
    p.add_argument("--trace", help="write the energy trace CSV here")
    p.add_argument("--out", required=True, help="predictions file")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("grf", help="harmonic-function baseline predictions")
    _add_data_flags(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--truth")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grf)

    p = sub.add_parser("benchmark", help="compare methods with grid selection")
    _add_data_flags(p)
    p.add_argument("--labels", required=True, help="full ground-truth labels")
    p.add_argument("--methods", required=True, help="comma list, e.g. I,A_S,GRF")
    p.add_argument("--seeds", default="0", help="comma list of split seeds")
    p.add_argument("--train-labels", dest="train_labels", type=int, default=None)
    p.add_argument("--grid-K", dest="grid_K", default="5,10,20")
    p.add_argument("--grid-T", dest="grid_T", default="10,50,100,200")
    p.add_argument(
        "--grid-sigma-f", dest="grid_sigma_f", default="0.05,0.1,0.2,0.5,1"
    )
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--warm-start", dest="warm_start", type=int, default=20)
    p.add_argument("--out", required=True, help="report prefix (.txt and .kv)")
    p.set_defaults(func=cmd_benchmark)

    return parser


def _require_file(parser, path, what):
    if path is not None and not os.path.exists(path):
        parser.error(f"{what} file not found: {path}")


def _apply_config_file(parser, args, argv):
    """Overlay key=value config entries under explicitly passed flags."""
    if getattr(args, "config", None) is None:
        return
    _require_file(parser, args.config, "config")
    entries = datamod.read_manifest(args.config)
    seen = set()
    for token in argv:
        if token.startswith("--"):
            seen.add(token.split("=", 1)[0].lstrip("-").replace("-", "_"))
    for key, raw in entries.items():
        if key not in CONFIG_KEYS:
            parser.error(
                f"unknown config key {key!r}; valid: {', '.join(CONFIG_KEYS)}"
            )
        if key in seen:
            continue  # explicit flag wins
        if key in ("K", "T", "warm_start"):
            value = int(raw)
        elif key in ("sigma_f", "delta"):
            value = float(raw)
        elif key == "clamp_labels":
            value = raw.lower() in ("1", "true", "yes")
        else:
            value = raw
        if key == "variant" and value not in VARIANT_FLAGS:
            parser.error(f"config variant must be one of {sorted(VARIANT_FLAGS)}")
        setattr(args, key, value)


def _report_mapping(mapping):
    if mapping and any(orig != new for orig, new in mapping.items()):
        pairs = ", ".join(f"{o}->{v}" for o, v in sorted(mapping.items()))
        print(f"label classes remapped to a contiguous range: {pairs}")


def _load_dataset_sources(parser, args):
    if args.features:
        _require_file(parser, args.features, "features")
        X = datamod.read_features(args.features)
        return X, None, X.shape[0]
    _require_file(parser, args.distances, "distances")
    D = datamod.read_distances(args.distances)
    return None, D, D.shape[0]


def cmd_synth(parser, args) -> int:
    if args.kind == "two-moons":
        if args.n < 4 or args.n % 2:
            parser.error("two-moons requires an even n >= 4")
        ds = datamod.two_moons(args.n, args.noise, args.seed)
    else:
        if args.classes < 2 or args.n < args.classes:
            parser.error("blobs require n >= classes >= 2")
        ds = datamod.gaussian_blobs(
            args.n, args.classes, args.separation, args.dim, args.seed
        )
    os.makedirs(args.out, exist_ok=True)
    datamod.write_features(ds.features, os.path.join(args.out, "features.txt"))
    datamod.write_labels(ds.labels, os.path.join(args.out, "labels.txt"))
    datamod.write_manifest(
        {"name": ds.name, "n": ds.n, "c": ds.c, "format": "features"},
        os.path.join(args.out, "manifest.txt"),
    )
    print(f"wrote {ds.n} points, {ds.c} classes to {args.out}")
    return 0


def cmd_build_graph(parser, args) -> int:
    X, D, n = _load_dataset_sources(parser, args)
    if D is None:
        from .graph import pairwise_distances

        D = pairwise_distances(X)
    if not 1 <= args.K <= n - 1:
        parser.error(f"--K must be in [1, {n - 1}]")
    nbrs = knn_neighborhoods(D, args.K)
    sigma_x = args.sigma_x if args.sigma_x is not None else auto_sigma_x(D, nbrs)
    from .graph import gaussian_weights

    graph = gaussian_weights(D, sigma_x, nbrs)
    write_graph_triplets(graph, args.out)
    print(f"n={graph.n} edges={len(graph.upper)} sigma_x={sigma_x:.17g}")
    return 0


def _config_from_args(parser, args, n):
    if not 1 <= args.K <= n - 1:
        parser.error(f"--K must be in [1, {n - 1}]")
    try:
        return DiffusionConfig(
            K=args.K,
            T=args.T,
            sigma_f=args.sigma_f,
            delta=args.delta,
            warm_start_steps=args.warm_start,
            variant=VARIANT_FLAGS[args.variant],
            mode=args.mode,
            clamp_labels=args.clamp_labels,
        )
    except ParameterError as exc:
        parser.error(str(exc))


def cmd_propagate(parser, args) -> int:
    X, D, n = _load_dataset_sources(parser, args)
    _require_file(parser, args.labels, "labels")
    _require_file(parser, args.truth, "truth")
    idx, cls = datamod.read_label_pairs(args.labels)
    if idx.size and idx.max() >= n:
        raise InputError(f"label index {idx.max()} outside [0, {n})")
    truth = None
    if args.truth:
        truth, mapping = datamod.read_labels(args.truth, n)
        _report_mapping(mapping)
        c = int(truth.max()) + 1
        if cls.size and cls.max() >= c:
            raise InputError("labeled classes exceed ground-truth class range")
    else:
        c = int(cls.max()) + 1 if cls.size else 1
    config = _config_from_args(parser, args, n)
    if D is None:
        from .graph import pairwise_distances

        D = pairwise_distances(X)
    graph = build_knn_graph(D, config.K)
    state = init_labels(zip(idx, cls), n, c)
    result = run_diffusion(config, graph, state)
    pred = decode_labels(result.f)
    datamod.write_labels(pred, args.out)
    if args.trace:
        write_energy_trace(result.energies, args.trace)
    if truth is not None:
        eval_idx = np.setdiff1d(np.arange(n), idx)
        err = evaluation.error_rate(pred, truth, eval_idx)
        print(f"test_error={err:.17g}")
    else:
        print(f"predictions={args.out}")
    return 0


def cmd_grf(parser, args) -> int:
    X, D, n = _load_dataset_sources(parser, args)
    _require_file(parser, args.labels, "labels")
    _require_file(parser, args.truth, "truth")
    idx, cls = datamod.read_label_pairs(args.labels)
    if idx.size == 0:
        parser.error("grf requires at least one labeled node")
    if idx.max() >= n:
        raise InputError(f"label index {idx.max()} outside [0, {n})")
    truth = None
    if args.truth:
        truth, mapping = datamod.read_labels(args.truth, n)
        _report_mapping(mapping)
        c = int(truth.max()) + 1
    else:
        c = int(cls.max()) + 1
    if not 1 <= args.K <= n - 1:
        parser.error(f"--K must be in [1, {n - 1}]")
    if D is None:
        from .graph import pairwise_distances

        D = pairwise_distances(X)
    graph = build_knn_graph(D, args.K)
    state = init_labels(zip(idx, cls), n, c)
    sol = grf_harmonic(graph, state)
    pred = decode_labels(sol.f)
    datamod.write_labels(pred, args.out)
    if truth is not None:
        eval_idx = np.setdiff1d(np.arange(n), idx)
        err = evaluation.error_rate(pred, truth, eval_idx)
        print(f"test_error={err:.17g}")
    else:
        print(f"predictions={args.out}")
    return 0


def cmd_benchmark(parser, args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in evaluation.METHODS:
            parser.error(
                f"unknown method {m!r}; valid methods: {', '.join(evaluation.METHODS)}"
            )
    if not methods:
        parser.error("--methods must name at least one method")
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        grid = evaluation.GridSpec(
            K_values=tuple(int(v) for v in args.grid_K.split(",")),
            T_values=tuple(int(v) for v in args.grid_T.split(",")),
            sigma_f_values=tuple(float(v) for v in args.grid_sigma_f.split(",")),
        )
    except (ValueError, ParameterError) as exc:
        parser.error(str(exc))
    X, D, n = _load_dataset_sources(parser, args)
    _require_file(parser, args.labels, "labels")
    labels, mapping = datamod.read_labels(args.labels, n)
    _report_mapping(mapping)
    ds = datamod.Dataset("cli-dataset", labels, features=X, distances=D)
    report = evaluation.benchmark(
        ds,
        methods,
        seeds,
        grid,
        train_labels=args.train_labels,
        delta=args.delta,
        warm_start_steps=args.warm_start,
    )
    out_txt = args.out + ".txt"
    out_kv = args.out + ".kv"
    with open(out_txt, "w") as fh:
        fh.write(evaluation.report_table(report))
    with open(out_kv, "w") as fh:
        fh.write(evaluation.report_kv(report))
    # timing is informational only; keeping it off the files makes them
    # byte-identical across repeated runs
    for row in report.rows:
        print(
            f"method={row.method} mean_error={row.mean_error:.2f} "
            f"sd_error={row.sd_error:.2f} mean_seconds={row.mean_seconds:.3f}"
        )
    print(f"report={out_txt} kv={out_kv}")
    return 0


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(parser, args, argv)
    try:
        return args.func(parser, args)
    except (
        ParameterError,
        InputError,
        ShapeError,
        DegenerateDataError,
        DivergenceError,
        UnlabeledComponentError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
