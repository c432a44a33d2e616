"""``g3`` command-line interface.

Subcommands: gen-data, import, train, sample, eval, sweep, rerun. Every output
file gets a ``<output>.manifest.json`` written next to it that records the
argv, resolved configuration, seed and paths needed to rerun the command.

Exit status is 0 on success, 1 on invalid input or usage, and 2 on a
numerical abort. Errors go to stderr as ``E:<code>:<message>``.
"""

from __future__ import annotations

import os

# single-threaded BLAS unless the caller says otherwise: keeps reruns bit-identical
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import logging  # noqa: E402
import math  # noqa: E402
import subprocess  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from concurrent.futures import ProcessPoolExecutor  # noqa: E402
from dataclasses import fields  # noqa: E402
from pathlib import Path  # noqa: E402

from . import datasets  # noqa: E402
from ._io import atomic_write_text  # noqa: E402
from .config import RunConfig, resolve  # noqa: E402
from .errors import EmptyDataset, G3Error, NumericalAbort  # noqa: E402
from .evaluation import STATISTICS, MmdConfig, evaluate  # noqa: E402
from .graph import read_jsonl, write_jsonl  # noqa: E402
from .nn import load_checkpoint, save_checkpoint  # noqa: E402
from .pipeline import fit, nan_report, run_cell, sample  # noqa: E402
from .sampler import CovariateSpec  # noqa: E402

log = logging.getLogger("g3")

SWEEP_PARAMS = {"T": "T", "alpha": "alpha", "w": "width", "N": None, "M": "M"}
SAMPLER_KEYS = ("alpha", "M", "threshold_rule", "base_scale", "bernoulli")
REPORT_KEYS = tuple(STATISTICS) + ("non_unique_fraction",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _version() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def write_manifest(output, args, argv, config=None, inputs=None, outputs=None,
                   started=None) -> None:
    manifest = {
        "subcommand": args.command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "config": config,
        "seed": getattr(args, "seed", None) if config is None or "seed" not in config else config["seed"],
        "inputs": inputs or {},
        "outputs": [str(o) for o in (outputs or [output])],
        "wall_clock_seconds": None if started is None else round(time.perf_counter() - started, 3),
        "version": _version(),
        "threads": int(os.environ.get("G3_THREADS", "1")),
    }
    atomic_write_text(f"{output}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _add_config_flags(p, keys=None, exclude=()):
    """One ``--key`` flag per RunConfig field (dashes for underscores)."""
    for f in fields(RunConfig):
        if (keys is not None and f.name not in keys) or f.name in exclude:
            continue
        p.add_argument("--" + f.name.replace("_", "-"), dest=f"cfg_{f.name}", default=None,
                       metavar=f.type.upper())
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key")


def _overrides(args) -> dict:
    out = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="g3", description="Graph generation by heat-kernel generator matching.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("gen-data", help="generate a synthetic graph set")
    q.add_argument("--kind", choices=("sbm", "dcsbm", "planar"), required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--count", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--k", type=int, default=None, help="SBM blocks (default: random 2-5)")
    q.add_argument("--p-intra", type=float, default=0.3)
    q.add_argument("--p-inter", type=float, default=0.05)
    q.add_argument("--unbalanced", action="store_true")
    q.add_argument("--covariates", action="store_true", help="attach +-1 block labels (k=2)")
    q.add_argument("--out", required=True)

    q = sub.add_parser("import", help="convert an edge-list file to JSON Lines")
    q.add_argument("--input", required=True)
    q.add_argument("--out", required=True)

    q = sub.add_parser("train", help="fit a surrogate generator")
    q.add_argument("--data", required=True)
    q.add_argument("--config", default=None, help="config file or preset name (planar, sbm, dcsbm)")
    q.add_argument("--out", required=True)
    _add_config_flags(q)

    q = sub.add_parser("sample", help="generate graphs from a checkpoint")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--n", type=int, default=None, help="node count (default: largest training size)")
    q.add_argument("--count", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--conditional", default=None, metavar="COVARIATES_JSON")
    q.add_argument("--out", required=True)
    _add_config_flags(q, SAMPLER_KEYS)

    q = sub.add_parser("eval", help="MMD report between generated and reference graphs")
    q.add_argument("--generated", required=True)
    q.add_argument("--reference", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--csv", default=None)
    q.add_argument("--sigma", type=float, default=1.0)

    q = sub.add_parser("sweep", help="train/sample/evaluate over a parameter grid")
    q.add_argument("--data", required=True)
    q.add_argument("--config", default=None)
    q.add_argument("--param", required=True, choices=tuple(SWEEP_PARAMS))
    q.add_argument("--values", required=True, help="comma-separated")
    q.add_argument("--repeats", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--train-fraction", type=float, default=0.8)
    q.add_argument("--count", type=int, default=None, help="samples per cell (default: test size)")
    q.add_argument("--out-dir", required=True)
    _add_config_flags(q, exclude=("seed",))

    q = sub.add_parser("rerun", help="repeat the command recorded in a manifest")
    q.add_argument("--manifest", required=True)
    return p


# -- subcommands -------------------------------------------------------------

def cmd_gen_data(args, argv, started):
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    kw = {}
    if args.kind in ("sbm", "dcsbm"):
        kw = dict(k=args.k, p_intra=args.p_intra, p_inter=args.p_inter,
                  balanced=not args.unbalanced, covariates=args.covariates)
    graphs = datasets.generate(args.kind, args.n, args.count, args.seed, **kw)
    write_jsonl(args.out, graphs)
    write_manifest(args.out, args, argv, config={"kind": args.kind, "n": args.n, "count": args.count, **kw},
                   started=started)


def cmd_import(args, argv, started):
    graphs = datasets.import_graphs(args.input)
    write_jsonl(args.out, graphs)
    write_manifest(args.out, args, argv, inputs={"input": args.input}, started=started)


def cmd_train(args, argv, started):
    cfg = resolve(args.config, _overrides(args))
    graphs = read_jsonl(args.data)
    if not graphs:
        raise EmptyDataset(f"{args.data} holds no graphs")
    model, meta, report = fit(graphs, cfg)
    save_checkpoint(args.out, model, meta)
    log.info("trained %d iterations, final loss %.6g", report.iterations,
             report.iteration_losses[-1])
    write_manifest(args.out, args, argv, config=cfg.to_dict(), inputs={"data": args.data},
                   started=started)


def _load_covariates(path) -> CovariateSpec:
    try:
        spec = json.loads(Path(path).read_text())
        return CovariateSpec(spec["z"], float(spec.get("omega", 1.0)))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise G3Error(f"bad covariates file {path}: {exc}") from None


def cmd_sample(args, argv, started):
    model, meta = load_checkpoint(args.ckpt)
    if "run_config" not in meta:
        raise G3Error(f"{args.ckpt} carries no training metadata")
    trained = RunConfig(**meta["run_config"])
    cfg = trained.replace(**{k: v for k, v in _overrides(args).items() if k in SAMPLER_KEYS})
    extra = set(_overrides(args)) - set(SAMPLER_KEYS)
    if extra:
        raise UsageError(f"sample does not accept config keys {sorted(extra)}")
    cov = _load_covariates(args.conditional) if args.conditional else None
    n = args.n if args.n is not None else (len(cov.z) if cov is not None else max(meta["stats"]["node_counts"]))
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    graphs = sample(model, meta, n, args.count, args.seed, cfg, cov)
    write_jsonl(args.out, graphs)
    inputs = {"ckpt": args.ckpt}
    if args.conditional:
        inputs["conditional"] = args.conditional
    write_manifest(args.out, args, argv, config={k: getattr(cfg, k) for k in SAMPLER_KEYS} | {"n": n},
                   inputs=inputs, started=started)


def _fmt(v) -> str:
    return repr(float(v))


def cmd_eval(args, argv, started):
    gen, ref = read_jsonl(args.generated), read_jsonl(args.reference)
    report = evaluate(gen, ref, MmdConfig(sigma=args.sigma))
    atomic_write_text(args.out, json.dumps({k: report[k] for k in REPORT_KEYS}, indent=2, sort_keys=True) + "\n")
    outputs = [args.out]
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k in REPORT_KEYS:
            w.writerow([k, _fmt(report[k])])
        atomic_write_text(args.csv, buf.getvalue())
        outputs.append(args.csv)
    for out in outputs:
        write_manifest(out, args, argv, config={"sigma": args.sigma},
                       inputs={"generated": args.generated, "reference": args.reference},
                       outputs=outputs, started=started)


def _parse_values(param: str, text: str) -> list:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise UsageError("--values is empty")
    conv = int if param in ("w", "N", "M") else float
    try:
        return [conv(s) for s in items]
    except ValueError:
        raise UsageError(f"cannot parse --values {text!r} for {param}") from None


def _sweep_cell(job):
    param, value, seed, cfg_dict, train_graphs, test_graphs, count = job
    cfg = RunConfig(**cfg_dict)
    try:
        if param == "N":
            if value < 1 or value > len(train_graphs):
                raise G3Error(f"N={value} outside 1..{len(train_graphs)}")
            train_graphs = train_graphs[:value]
        else:
            cfg = cfg.replace(**{SWEEP_PARAMS[param]: value})
        cfg = cfg.replace(seed=seed)
        return run_cell(train_graphs, test_graphs, cfg, count=count), None
    except (G3Error, ValueError, ArithmeticError) as exc:
        return nan_report(), f"{type(exc).__name__}: {exc}"


def cmd_sweep(args, argv, started):
    values = _parse_values(args.param, args.values)
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    base = resolve(args.config, _overrides(args))
    graphs = read_jsonl(args.data)
    train_graphs, test_graphs = datasets.split(graphs, datasets.SplitSpec(args.train_fraction, args.seed))
    out_dir = Path(args.out_dir)
    (out_dir / "cells").mkdir(parents=True, exist_ok=True)
    seeds = [args.seed + r for r in range(args.repeats)]
    jobs = [(args.param, v, s, base.to_dict(), train_graphs, test_graphs, args.count)
            for v in values for s in seeds]
    workers = max(1, int(os.environ.get("G3_THREADS", "1")))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(j) for j in jobs]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "value", "seed", *REPORT_KEYS])
    outputs = []
    for vi, v in enumerate(values):
        rows = results[vi * len(seeds):(vi + 1) * len(seeds)]
        for s, (report, err) in zip(seeds, rows):
            if err:
                print(f"E:CELL:{args.param}={v} seed={s}: {err}", file=sys.stderr)
            cell = out_dir / "cells" / f"{args.param}={v}_seed={s}.json"
            atomic_write_text(cell, json.dumps({k: report[k] for k in REPORT_KEYS}, indent=2,
                                               sort_keys=True) + "\n")
            outputs.append(cell)
            w.writerow([args.param, v, s, *(_fmt(report[k]) for k in REPORT_KEYS)])
        if len(seeds) > 1:
            means = []
            for k in REPORT_KEYS:
                vals = [r[k] for r, _ in rows if not math.isnan(r[k])]
                means.append(_fmt(sum(vals) / len(vals)) if vals else "nan")
            w.writerow([args.param, v, "mean", *means])
    csv_path = out_dir / "sweep.csv"
    atomic_write_text(csv_path, buf.getvalue())
    outputs.append(csv_path)
    write_manifest(csv_path, args, argv, config=base.to_dict(), inputs={"data": args.data},
                   outputs=outputs, started=started)


def cmd_rerun(args, argv, started):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        recorded = manifest["argv"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise G3Error(f"bad manifest {args.manifest}: {exc}") from None
    if recorded and recorded[0] == "rerun":
        raise G3Error("refusing to rerun a rerun")
    cwd = os.getcwd()
    os.chdir(manifest.get("cwd", cwd))
    try:
        code = main(recorded)
    finally:
        os.chdir(cwd)
    if code:
        raise SystemExit(code)


COMMANDS = {
    "gen-data": cmd_gen_data, "import": cmd_import, "train": cmd_train, "sample": cmd_sample,
    "eval": cmd_eval, "sweep": cmd_sweep, "rerun": cmd_rerun,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"E:USAGE:{exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    # the manifest records only the subcommand's own arguments
    sub_argv = argv[argv.index(args.command):]
    if args.verbose:
        sub_argv = ["-v", *sub_argv]
    try:
        COMMANDS[args.command](args, sub_argv, started)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"E:USAGE:{exc}", file=sys.stderr)
        return 1
    except NumericalAbort as exc:
        print(f"E:{exc.code}:{exc}", file=sys.stderr)
        return 2
    except G3Error as exc:
        print(f"E:{exc.code}:{exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        code = "IO" if isinstance(exc, OSError) else "INVALID"
        print(f"E:{code}:{exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
