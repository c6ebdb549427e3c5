"""Command line: thin client over the HTTP service.

Every compute subcommand reads local files, sends one request to the service
(an embedded loopback instance by default, or --server / FACTORSEG_SERVER),
and writes the response to local files. Identical inputs and seed give
identical outputs; only reported durations vary.

A config file of TOML-style ``key = value`` lines can set defaults for any
long option (e.g. ``mindist = 50``); explicit flags win. FACTORSEG_THREADS
sets the worker-count hint (results never depend on it).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import ExitStack
from pathlib import Path

from .client import ServiceClient, ServiceError, local_server
from .data import load_adjacency_csv, load_atlas, load_matrix
from .errors import FactorsegError, ParameterError

ENV_SERVER = "FACTORSEG_SERVER"
ENV_THREADS = "FACTORSEG_THREADS"


def parse_config_file(path) -> dict:
    """Flat TOML-style key/value file: strings, numbers, booleans, comments."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.split("#", 1)[0].strip()
        if not key or not val:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if len(val) >= 2 and val[0] == val[-1] and val[0] in "'\"":
            parsed: object = val[1:-1]
        elif val.lower() in ("true", "false"):
            parsed = val.lower() == "true"
        else:
            try:
                parsed = int(val)
            except ValueError:
                try:
                    parsed = float(val)
                except ValueError:
                    parsed = val
        values[key] = parsed
    return values


def parse_lambda_spec(text: str):
    """'7' -> clusters; '0.4' -> threshold; comma lists and 'a:b:step' ranges fan out."""
    def one(tok: str):
        tok = tok.strip()
        try:
            return int(tok)
        except ValueError:
            pass
        try:
            return float(tok)
        except ValueError:
            raise ParameterError(f"lambda value {tok!r} is not a number") from None

    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError("lambda range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ParameterError("lambda range step must be positive")
        out, v = [], start
        while v <= stop + 1e-12:
            out.append(round(v, 10))
            v += step
        return out
    if "," in text:
        return [one(t) for t in text.split(",") if t.strip()]
    return one(text)


def parse_int_list(text: str) -> list[int]:
    """Comma-separated integers, with 'a-b' ranges allowed (e.g. '1-30,40')."""
    out: list[int] = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok[1:]:
            a, _, b = tok.partition("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(tok))
    return out


def _merge(args: argparse.Namespace, config: dict, defaults: dict) -> argparse.Namespace:
    for key, builtin in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, builtin))
    return args


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    try:
        return max(1, int(os.environ.get(ENV_THREADS, "1")))
    except ValueError:
        return 1


def _client(stack: ExitStack, args) -> ServiceClient:
    server = getattr(args, "server", None) or os.environ.get(ENV_SERVER)
    if not server:
        server = stack.enter_context(local_server())
    return stack.enter_context(ServiceClient(server))


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_input(args) -> list[list[float]]:
    m = load_matrix(args.input, fmt=args.fmt, has_header=args.has_header)
    return m.values.tolist()


# --- subcommands -----------------------------------------------------------

OPT_RANK_DEFAULTS = dict(nruns=50, seed=0, tolerance=1e-6, max_iterations=2000, fmt="csv", format="table")


def cmd_opt_rank(args, config) -> int:
    _merge(args, config, OPT_RANK_DEFAULTS)
    data = _load_input(args)
    with ExitStack() as stack:
        client = _client(stack, args)
        result = client.rank(
            {
                "data": data,
                "options": {
                    "nruns": args.nruns,
                    "max_iterations": args.max_iterations,
                    "tolerance": args.tolerance,
                    "seed": args.seed,
                },
                "n_jobs": _threads(args),
            }
        )
    if args.format == "json":
        print(json.dumps(result, indent=2))
    else:
        print(f"rank: {result['rank']}")
        if result["saturated"]:
            print("warning: search saturated at the upper bound")
        print("rank    loss          loss*         decrement     decrement*")
        for row in result["diagnostics"]:
            print(
                f"{row['rank']:>4} {row['loss']:>13.4f} {row['loss_permuted']:>13.4f}"
                f" {row['decrement']:>13.4f} {row['decrement_permuted']:>13.4f}"
            )
    if args.output:
        _write_json(args.output, result)
    return 0


DETECT_DEFAULTS = dict(
    mindist=35, nruns=50, nreps=100, alpha=None, rank=None, testtype="welch_t",
    seed=0, tolerance=1e-6, max_iterations=2000, fmt="csv", format="table",
)


def cmd_detect_cps(args, config) -> int:
    _merge(args, config, DETECT_DEFAULTS)
    data = _load_input(args)
    payload = {
        "data": data,
        "mindist": args.mindist,
        "nruns": args.nruns,
        "nreps": args.nreps,
        "alpha": args.alpha,
        "rank": args.rank,
        "testtype": args.testtype,
        "seed": args.seed,
        "tolerance": args.tolerance,
        "max_iterations": args.max_iterations,
        "n_jobs": _threads(args),
    }
    with ExitStack() as stack:
        client = _client(stack, args)
        result = client.detect(payload, on_progress=lambda msg: print(msg, flush=True))
    if args.format == "json":
        print(json.dumps({k: v for k, v in result.items() if k != "log"}, indent=2))
    else:
        print(f"rank: {result['rank']}")
        print("    T    stat_test")
        for n, row in enumerate(result["change_points"], start=1):
            val = row["stat_test"]
            shown = f"{val:.6e}" if isinstance(val, float) else str(val)
            print(f"{n:>3} {row['T']:>4} {shown}")
        if not result["change_points"]:
            print("(no change points)")
        print(f"compute time: {result['compute_time_seconds']:.2f} s")
    if args.output:
        _write_json(args.output, {k: v for k, v in result.items() if k != "log"})
    return 0


EST_NET_DEFAULTS = dict(
    nruns=50, rank=None, seed=0, tolerance=1e-6, max_iterations=2000,
    changepoints=None, fmt="csv", format="csv",
)


def cmd_est_net(args, config) -> int:
    _merge(args, config, EST_NET_DEFAULTS)
    data = _load_input(args)
    lam = parse_lambda_spec(args.lam)
    cps = parse_int_list(args.changepoints) if args.changepoints else None
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "data": data,
        "lambda_spec": lam,
        "rank": args.rank,
        "nruns": args.nruns,
        "changepoints": cps,
        "seed": args.seed,
        "tolerance": args.tolerance,
        "max_iterations": args.max_iterations,
        "n_jobs": _threads(args),
    }
    with ExitStack() as stack:
        client = _client(stack, args)
        result = client.network(payload)

    manifest = {"input": str(args.input), "seed": args.seed, "lambda_spec": lam, "segments": []}
    for seg_idx, seg in enumerate(result["segments"], start=1):
        entry = {"segment": seg_idx, "start": seg["start"], "end": seg["end"], "files": []}
        for adj in seg["adjacencies"]:
            tag = adj["mode"].replace("threshold(", "lam").replace("clusters(", "k").rstrip(")")
            name = f"adjacency_seg{seg_idx:02d}_{tag}.{ 'json' if args.format == 'json' else 'csv' }"
            path = outdir / name
            if args.format == "json":
                _write_json(path, {"mode": adj["mode"], "matrix": adj["matrix"]})
            else:
                with open(path, "w") as fh:
                    for row in adj["matrix"]:
                        fh.write(",".join(str(int(v)) for v in row) + "\n")
            entry["files"].append({"mode": adj["mode"], "path": name})
        manifest["segments"].append(entry)
    manifest_path = outdir / "manifest.json"
    _write_json(manifest_path, manifest)
    print(f"wrote {sum(len(s['files']) for s in manifest['segments'])} adjacency files; manifest: {manifest_path}")
    return 0


SIMULATE_DEFAULTS = dict(
    p=20, T=200, changepoints=None, clusters=2, within_corr=0.75,
    between_corr=0.20, seed=0, reshuffle=True, ground_truth=None,
)


def cmd_simulate(args, config) -> int:
    _merge(args, config, SIMULATE_DEFAULTS)
    cps = parse_int_list(args.changepoints) if args.changepoints else []
    payload = {
        "p": args.p,
        "T": args.T,
        "changepoints": cps,
        "clusters": args.clusters,
        "within_corr": args.within_corr,
        "between_corr": args.between_corr,
        "seed": args.seed,
        "reshuffle": bool(args.reshuffle),
    }
    with ExitStack() as stack:
        client = _client(stack, args)
        result = client.simulate(payload)
    with open(args.output, "w") as fh:
        for row in result["data"]:
            fh.write(",".join(repr(v) for v in row) + "\n")
    truth = {
        "p": args.p,
        "T": args.T,
        "seed": args.seed,
        "clusters": args.clusters,
        "changepoints": result["changepoints"],
        "labels": result["labels"],
    }
    gt_path = args.ground_truth or (str(args.output) + ".truth.json")
    _write_json(gt_path, truth)
    print(f"wrote {args.output} ({args.T}x{args.p}) and {gt_path}")
    return 0


EXPORT_DEFAULTS = dict(communities=None, node_ids=None, colors=None, segment=None, source=None)


def cmd_export_viewer(args, config) -> int:
    _merge(args, config, EXPORT_DEFAULTS)
    adjacency = load_adjacency_csv(args.adjacency)
    atlas = load_atlas(args.atlas)
    metadata: dict = {}
    if args.segment is not None:
        metadata["segment"] = args.segment
    if args.source:
        metadata["source"] = args.source
    payload = {
        "adjacency": adjacency.values.tolist(),
        "atlas": [
            {"community": c, "x": float(x), "y": float(y), "z": float(z)}
            for c, (x, y, z) in zip(atlas.communities, atlas.xyz)
        ],
        "communities": args.communities.split(",") if args.communities else None,
        "node_ids": parse_int_list(args.node_ids) if args.node_ids else None,
        "colors": args.colors.split(",") if args.colors else None,
        "metadata": metadata,
    }
    with ExitStack() as stack:
        client = _client(stack, args)
        result = client.export(payload)
    _write_json(args.output, result)
    print(f"wrote {args.output}: {len(result['nodes'])} nodes, {len(result['edges'])} edges")
    return 0


def cmd_serve(args, config) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# --- argument wiring ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", help=f"service URL (default: embedded; or ${ENV_SERVER})")
    p.add_argument("--config", help="TOML-style key/value file of option defaults")
    p.add_argument("--threads", type=int, help=f"worker hint (or ${ENV_THREADS}); never changes results")
    p.add_argument("--seed", type=int, help="master seed (default 0)")


def _add_matrix_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="matrix file, rows = time points")
    p.add_argument("--fmt", choices=("csv", "tsv"), help="input format (default csv)")
    p.add_argument("--has-header", action="store_true", help="first row holds column labels")


def _add_nmf_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nruns", type=int, help="random restarts per fit (default 50)")
    p.add_argument("--tolerance", type=float, help="relative loss-change stop (default 1e-6)")
    p.add_argument("--max-iterations", type=int, help="update cap per fit (default 2000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorseg",
        description="Change point detection and network estimation for positive multivariate time series",
    )
    from . import __version__

    parser.add_argument("--version", action="version", version=f"factorseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("opt-rank", help="data-driven factorization rank")
    _add_matrix_input(p)
    _add_nmf_opts(p)
    p.add_argument("--output", help="write result JSON here")
    p.add_argument("--format", choices=("table", "json"))
    _add_common(p)
    p.set_defaults(func=cmd_opt_rank)

    p = sub.add_parser("detect-cps", help="detect change points")
    _add_matrix_input(p)
    _add_nmf_opts(p)
    p.add_argument("--mindist", type=int, help="minimum distance between change points (default 35)")
    p.add_argument("--nreps", type=int, help="inference repetitions (default 100)")
    p.add_argument("--alpha", type=float, help="significance level; omit to report p-values")
    p.add_argument("--rank", type=int, help="factorization rank; omit for automatic")
    p.add_argument("--testtype", choices=("welch_t", "wilcoxon", "ks"))
    p.add_argument("--output", help="write report JSON here")
    p.add_argument("--format", choices=("table", "json"))
    _add_common(p)
    p.set_defaults(func=cmd_detect_cps)

    p = sub.add_parser("est-net", help="estimate stationary networks")
    _add_matrix_input(p)
    _add_nmf_opts(p)
    p.add_argument("--lambda", dest="lam", required=True,
                   help="cluster count (int), threshold (<1), comma list, or start:stop:step")
    p.add_argument("--rank", type=int, help="factorization rank; omit for automatic per segment")
    p.add_argument("--changepoints", help="comma-separated change points, e.g. 35,70")
    p.add_argument("--outdir", required=True, help="directory for adjacency files + manifest")
    p.add_argument("--format", choices=("csv", "json"))
    _add_common(p)
    p.set_defaults(func=cmd_est_net)

    p = sub.add_parser("simulate", help="simulate a blocked-covariance dataset")
    p.add_argument("--p", type=int, help="variables (default 20)")
    p.add_argument("--T", type=int, help="time points (default 200)")
    p.add_argument("--changepoints", help="comma-separated change points")
    p.add_argument("--clusters", type=int, help="clusters per regime (default 2)")
    p.add_argument("--within-corr", type=float, help="within-cluster correlation (default 0.75)")
    p.add_argument("--between-corr", type=float, help="between-cluster correlation (default 0.20)")
    p.add_argument("--no-reshuffle", dest="reshuffle", action="store_false", default=None,
                   help="keep the same labels across change points")
    p.add_argument("--output", required=True, help="matrix CSV path")
    p.add_argument("--ground-truth", help="ground truth JSON path (default: OUTPUT.truth.json)")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-viewer", help="join adjacency with an atlas for the 3-D viewer")
    p.add_argument("--adjacency", required=True, help="dense 0/1 CSV")
    p.add_argument("--atlas", required=True, help="atlas CSV (community,x,y,z)")
    p.add_argument("--communities", help="comma-separated community filter")
    p.add_argument("--node-ids", help="node id filter, e.g. 1-30 or 1,2,5")
    p.add_argument("--colors", help="comma-separated hex colors per community")
    p.add_argument("--segment", type=int, help="segment index recorded in metadata")
    p.add_argument("--source", help="source dataset name recorded in metadata")
    p.add_argument("--output", required=True, help="export JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_export_viewer)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8714)
    p.set_defaults(func=cmd_serve, config=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = parse_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, config)
    except (FactorsegError, ServiceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
