"""Batch experiment runner, dataset generator, and service launcher.

``ipbc run`` reproduces the four-method comparison at desk scale: k-Means on
raw features, k-Means after PCA, the static embed+DBSCAN pipeline, and the
full interactive loop with the simulated oracle. Reports are deterministic:
identical config and seeds give byte-identical metrics CSV output.

Config files are INI-style, one section per concern::

    [dataset]
    name = overlap_blobs
    source = blobs            ; or csv (path = ..., label_column = ...)
    n_per_cluster = 100
    d = 10
    k = 4
    sep = 10
    noise = 1.0
    overlap = 1,2
    seed = 0

    [run]
    methods = kmeans_raw, kmeans_pca, static, ipbc
    seeds = 0,1,2

    [embedding]
    n_neighbors = 15
    epochs = 200

    [ipbc]
    rounds = 3
    n_ml = 5
    n_cl = 5
    strategy = error_driven
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .dataset import Dataset, DatasetError, generate_blobs, load_csv, standardize, write_csv
from .embedding import OptimizerParams
from .metrics import MetricReport, kmeans, metric_report, pca
from .oracle import SessionConfig, run_session

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_DATASET = 3

METHODS = ("kmeans_raw", "kmeans_pca", "static", "ipbc")

_KNOWN_KEYS = {
    "dataset": {"name", "source", "path", "label_column", "n_per_cluster", "d",
                "k", "sep", "noise", "overlap", "seed"},
    "run": {"methods", "seeds"},
    "embedding": {"n_neighbors", "epochs", "initial_lr", "negative_samples",
                  "min_dist", "spread", "init"},
    "cluster": {"min_pts", "eps"},
    "ipbc": {"rounds", "n_ml", "n_cl", "strategy", "lambda_ml", "lambda_cl",
             "margin", "warm_epochs"},
    "kmeans": {"k", "n_init", "max_iter"},
    "pca": {"dims"},
}


class ConfigError(ValueError):
    pass


def _fmt(value: float | None) -> str:
    return "" if value is None else "%.9g" % value


def _load_config(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
    return parser


def _dataset_from_config(cfg: configparser.ConfigParser) -> tuple[Dataset, str]:
    sec = cfg["dataset"] if cfg.has_section("dataset") else {}
    name = sec.get("name", "dataset")
    source = sec.get("source", "blobs")
    if source == "csv":
        path = sec.get("path")
        if not path:
            raise ConfigError("dataset source csv requires key 'path'")
        ds = load_csv(path, sec.get("label_column"))
        return ds, name
    if source != "blobs":
        raise ConfigError(f"unknown dataset source {source!r}")
    overlap = None
    if sec.get("overlap"):
        parts = [int(v) for v in sec["overlap"].split(",")]
        if len(parts) != 2:
            raise ConfigError("overlap must be two cluster ids, e.g. 1,2")
        overlap = (parts[0], parts[1])
    ds = generate_blobs(
        n_per_cluster=int(sec.get("n_per_cluster", 100)),
        d=int(sec.get("d", 10)),
        k=int(sec.get("k", 4)),
        centers_separation=float(sec.get("sep", 10.0)),
        noise_scale=float(sec.get("noise", 1.0)),
        overlap_pair=overlap,
        seed=int(sec.get("seed", 0)),
    )
    return ds, name


def _session_config(cfg: configparser.ConfigParser) -> SessionConfig:
    emb = cfg["embedding"] if cfg.has_section("embedding") else {}
    ip = cfg["ipbc"] if cfg.has_section("ipbc") else {}
    cl = cfg["cluster"] if cfg.has_section("cluster") else {}
    optimizer = OptimizerParams(
        epochs=int(emb.get("epochs", OptimizerParams.epochs)),
        initial_lr=float(emb.get("initial_lr", OptimizerParams.initial_lr)),
        negative_samples=int(emb.get("negative_samples",
                                     OptimizerParams.negative_samples)),
        min_dist=float(emb.get("min_dist", OptimizerParams.min_dist)),
        spread=float(emb.get("spread", OptimizerParams.spread)),
    )
    base = SessionConfig(optimizer=optimizer)
    return dataclasses.replace(
        base,
        n_neighbors=int(emb.get("n_neighbors", base.n_neighbors)),
        init_method=emb.get("init", base.init_method),
        warm_epochs=int(ip.get("warm_epochs", base.warm_epochs)),
        margin=float(ip.get("margin", base.margin)),
        lambda_ml=float(ip.get("lambda_ml", base.lambda_ml)),
        lambda_cl=float(ip.get("lambda_cl", base.lambda_cl)),
        min_pts=int(cl.get("min_pts", base.min_pts)),
        n_ml=int(ip.get("n_ml", base.n_ml)),
        n_cl=int(ip.get("n_cl", base.n_cl)),
        strategy=ip.get("strategy", base.strategy),
    )


def _write_coords(path: str, coords: np.ndarray, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = "x,y" + (",label" if labels is not None else "")
        fh.write(header + "\n")
        for i in range(coords.shape[0]):
            row = "%.9g,%.9g" % (coords[i, 0], coords[i, 1])
            if labels is not None:
                row += ",%d" % labels[i]
            fh.write(row + "\n")


def _run_method(method: str, ds: Dataset, name: str, seed: int,
                cfg: configparser.ConfigParser, out_dir: str,
                scfg: SessionConfig) -> list[MetricReport]:
    km = cfg["kmeans"] if cfg.has_section("kmeans") else {}
    true_k = int(np.unique(ds.labels).size) if ds.labels is not None else None
    if method in ("kmeans_raw", "kmeans_pca"):
        k = int(km.get("k", true_k or 0))
        if k < 1:
            raise ConfigError("kmeans needs a cluster count: labels absent and no [kmeans] k")
        x = standardize(ds).features
        if method == "kmeans_pca":
            pc = cfg["pca"] if cfg.has_section("pca") else {}
            dims = int(pc.get("dims", min(50, ds.d, ds.n - 1)))
            x, _ = pca(x, dims)
            _write_coords(os.path.join(out_dir, f"coords_{method}_seed{seed}.csv"),
                          x[:, :2], ds.labels)
        labels = kmeans(x, k, seed=seed,
                        n_init=int(km.get("n_init", 10)),
                        max_iter=int(km.get("max_iter", 300)))
        return [metric_report(method, name, 0, x, labels, ds.labels)]
    if method == "static":
        report = run_session(ds, rounds=0, config=scfg, seed=seed,
                             dataset_name=name, method_name=method)
        _write_coords(os.path.join(out_dir, f"coords_{method}_seed{seed}.csv"),
                      report.final_state.coords, ds.labels)
        return [r.metrics for r in report.rounds]
    if method == "ipbc":
        ip = cfg["ipbc"] if cfg.has_section("ipbc") else {}
        rounds = int(ip.get("rounds", 3))
        report = run_session(ds, rounds=rounds, config=scfg, seed=seed,
                             dataset_name=name, method_name=method)
        _write_coords(os.path.join(out_dir, f"coords_{method}_seed{seed}.csv"),
                      report.final_state.coords, ds.labels)
        session_path = os.path.join(out_dir, f"session_{method}_seed{seed}.json")
        with open(session_path, "w", encoding="utf-8") as fh:
            json.dump(_session_json(report), fh, indent=2, sort_keys=True)
        return [r.metrics for r in report.rounds]
    raise ConfigError(f"unknown method {method!r}")


def _session_json(report) -> dict:
    return {
        "dataset": report.dataset_name,
        "strategy": report.strategy,
        "seed": report.seed,
        "rounds": [
            {
                "round": r.round_index,
                "constraints_added": [
                    {"kind": c.kind, "i": c.i, "j": c.j, "weight": c.weight}
                    for c in r.constraints_added
                ],
                "n_constraints_total": r.n_constraints_total,
                "loss": dataclasses.asdict(r.loss),
                "ari": r.metrics.ari,
                "nmi": r.metrics.nmi,
                "silhouette": r.metrics.silhouette,
                "davies_bouldin": r.metrics.davies_bouldin,
                "k_found": r.cluster.k_found,
                "warm_seconds": r.warm_seconds,
            }
            for r in report.rounds
        ],
        "final_k_found": report.final_cluster.k_found,
        "explanations": [
            {
                "cluster_id": e.cluster_id,
                "train_accuracy": e.train_accuracy,
                "top_features": [
                    {"feature": f, "importance": imp, "rule": rule}
                    for f, imp, rule in e.top_features
                ],
            }
            for e in report.explanations
        ],
    }


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
        run_sec = cfg["run"] if cfg.has_section("run") else {}
        methods = [m.strip() for m in run_sec.get("methods", "").split(",") if m.strip()]
        if not methods:
            raise ConfigError("config key 'methods' in [run] is required")
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
        seeds = [int(s) for s in run_sec.get("seeds", "0").split(",") if s.strip()]
        scfg = _session_config(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        ds, name = _dataset_from_config(cfg)
    except (DatasetError, ConfigError) as exc:
        print(f"error: dataset: {exc}", file=sys.stderr)
        return EXIT_DATASET
    os.makedirs(args.out, exist_ok=True)

    cells = [(m, s) for m in methods for s in seeds]
    results: dict[tuple[str, int], list[MetricReport]] = {}
    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = {
                pool.submit(_run_method, m, ds, name, s, cfg, args.out, scfg): (m, s)
                for m, s in cells
            }
            for fut, cell in futures.items():
                results[cell] = fut.result()
    else:
        for m, s in cells:
            results[(m, s)] = _run_method(m, ds, name, s, cfg, args.out, scfg)

    metrics_path = os.path.join(args.out, "metrics.csv")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write("method,dataset,seed,round,ari,nmi,silhouette,davies_bouldin\n")
        for m, s in cells:
            for rep in results[(m, s)]:
                fh.write(",".join([
                    rep.method_name, rep.dataset_name, str(s),
                    str(rep.round_index), _fmt(rep.ari), _fmt(rep.nmi),
                    _fmt(rep.silhouette), _fmt(rep.davies_bouldin),
                ]) + "\n")
    print(f"wrote {metrics_path}")
    return EXIT_OK


def cmd_gen(args) -> int:
    overlap = None
    if args.overlap:
        parts = [int(v) for v in args.overlap.split(",")]
        if len(parts) != 2:
            print("error: --overlap expects two cluster ids, e.g. 1,2", file=sys.stderr)
            return EXIT_BAD_CONFIG
        overlap = (parts[0], parts[1])
    try:
        ds = generate_blobs(args.n, args.d, args.k, args.sep, args.noise,
                            overlap_pair=overlap, seed=args.seed)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    write_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.n} points, {ds.d} features, labels included)")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import resolve_port, serve

    port = resolve_port(args.port)
    import socket

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, port))
    except OSError as exc:
        print(f"error: cannot listen on {args.host}:{port}: {exc}", file=sys.stderr)
        return 1
    finally:
        probe.close()
    serve(port=port, host=args.host)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipbc",
        description="Interactive projection-based clustering workbench",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch experiment from a config file")
    run.add_argument("--config", required=True, help="INI config path")
    run.add_argument("--out", required=True, help="output directory for reports")
    run.add_argument("--jobs", type=int, default=1, help="concurrent method x seed cells")
    run.set_defaults(func=cmd_run)

    serve_p = sub.add_parser("serve", help="run the HTTP session service")
    serve_p.add_argument("--port", type=int, default=None,
                         help="listen port (default: $IPBC_PORT or 8787)")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.set_defaults(func=cmd_serve)

    gen = sub.add_parser("gen", help="generate a blob dataset CSV")
    gen.add_argument("--n", type=int, default=100, help="points per cluster")
    gen.add_argument("--d", type=int, default=10)
    gen.add_argument("--k", type=int, default=4)
    gen.add_argument("--sep", type=float, default=10.0)
    gen.add_argument("--noise", type=float, default=1.0)
    gen.add_argument("--overlap", default=None, help="two cluster ids, e.g. 1,2")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
