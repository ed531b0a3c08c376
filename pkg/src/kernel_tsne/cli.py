"""Command-line interface.

    kernel-tsne gen-data    --out blobs.csv
    kernel-tsne reduce      --input blobs.csv --variant e2e --gamma 0.01 --out-dir run/
    kernel-tsne trust       --data blobs.csv --embedding run/embedding.csv --out trust.json
    kernel-tsne grid-search --dataset synthetic --n 300 --out-dir grid/

Exit status: 0 on success, 1 on input or parameter errors, 2 when the
optimizer diverges.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from pathlib import Path


from . import __version__
from .dataio import (
    IDX_IMAGES_MAGIC,
    LabeledDataset,
    generate_blobs,
    load_csv,
    load_idx,
    render_scatter_svg,
    write_dataset_csv,
    write_embedding_csv,
    write_report_json,
)
from .embedding import OptimizerConfig, Variant, run_reduction
from .errors import DivergenceError, InputError, KernelTSNEError, ParameterError
from .grid import DEFAULT_GAMMAS, DEFAULT_PERPLEXITIES, grid_search
from .kernels import KernelSpec
from .metrics import trustworthiness_curve

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2
DEFAULT_GAMMA = 0.01


def _notice(msg: str) -> None:
    print(f"notice: {msg}", file=sys.stderr)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# -- data loading --------------------------------------------------------------

def _csv_header(path: Path) -> list[str]:
    with path.open(newline="") as fh:
        return [c.strip() for c in next(csv.reader(fh), [])]


def load_table(path, label_column=None, labels_path=None, standardize=False) -> LabeledDataset:
    """Load a CSV or IDX file; a CSV column named ``label`` is used as labels
    unless ``label_column`` says otherwise."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    with path.open("rb") as fh:
        head = fh.read(4)
    if len(head) == 4 and int.from_bytes(head, "big") == IDX_IMAGES_MAGIC:
        return load_idx(path, labels_path, standardize=standardize)
    if label_column is None and "label" in _csv_header(path):
        label_column = "label"
    return load_csv(path, label_column=label_column, standardize=standardize)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="CSV or IDX image file")
    src.add_argument("--dataset", choices=["synthetic"], help="generate Gaussian blobs instead of reading a file")
    p.add_argument("--labels", type=Path, help="IDX label file matching --input")
    p.add_argument("--label-column", help="CSV label column name or 0-based index")
    p.add_argument("--standardize", action="store_true", help="scale features to zero mean, unit variance")
    p.add_argument("--subsample", type=int, help="use a seeded random subset of this many rows")
    p.add_argument("--n", type=int, default=2000, help="synthetic: number of points")
    p.add_argument("--d", type=int, default=100, help="synthetic: dimension")
    p.add_argument("--clusters", type=int, default=10, help="synthetic: number of blobs")
    p.add_argument("--spread", type=float, default=1.0, help="synthetic: blob standard deviation")


def _load_dataset(args) -> LabeledDataset:
    if args.dataset == "synthetic":
        ds = generate_blobs(args.n, args.d, args.clusters, args.spread, seed=args.seed)
        if args.standardize:
            ds = ds.standardized()
    else:
        ds = load_table(args.input, args.label_column, args.labels, args.standardize)
    if args.subsample is not None:
        ds = ds.subsample(args.subsample, seed=args.seed)
    return ds


def _describe(ds: LabeledDataset, args) -> dict:
    return {
        "name": ds.name,
        "source": "synthetic" if args.dataset == "synthetic" else str(args.input),
        "n": ds.n,
        "d": int(ds.X.shape[1]),
        "labeled": ds.labels is not None,
        "subsample": args.subsample,
        "standardized": bool(args.standardize),
    }


# -- optimizer config ------------------------------------------------------------

def _add_optimizer_args(p: argparse.ArgumentParser, variant_default: str | None) -> None:
    p.add_argument("--variant", choices=[v.value for v in Variant], default=variant_default)
    p.add_argument("--kernel", choices=["rbf", "linear"])
    p.add_argument("--dim", type=int, default=2, help="embedding dimension")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--exaggeration", type=float, default=12.0)
    p.add_argument("--exaggeration-iters", type=int, default=250)
    p.add_argument("--learning-rate", default="auto", help="'auto' or a positive number")
    p.add_argument("--momentum", type=float, default=0.5)
    p.add_argument("--final-momentum", type=float, help="switch to this momentum after the exaggeration phase")
    p.add_argument("--alpha", default="auto", help="Student-t degrees of freedom for e2e ('auto' = max(dim-1, 1))")
    p.add_argument("--init", choices=["pca", "kpca"], default="pca")
    p.add_argument("--fd-grad", action="store_true", help="finite-difference kernel gradients (e2e)")
    p.add_argument("--seed", type=int, default=0)


def _auto_or_float(value: str, name: str):
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except ValueError:
        raise ParameterError(f"{name} must be 'auto' or a number, got {value!r}") from None


def _resolve_kernel(args) -> KernelSpec:
    variant = Variant(args.variant)
    if variant is Variant.PLAIN:
        if args.kernel is not None:
            _notice("--kernel has no effect with --variant plain")
        return KernelSpec.rbf(DEFAULT_GAMMA)
    kind = args.kernel
    if kind is None:
        kind = "rbf"
        _notice(f"--variant {variant.value} without --kernel; using rbf")
    if kind == "linear":
        if getattr(args, "gamma", None) is not None:
            print("warning: --gamma is ignored with the linear kernel", file=sys.stderr)
        return KernelSpec.linear()
    gamma = getattr(args, "gamma", None)
    return KernelSpec.rbf(DEFAULT_GAMMA if gamma is None else gamma)


def _build_config(args, perplexity: float) -> OptimizerConfig:
    return OptimizerConfig(
        variant=Variant(args.variant),
        n_components=args.dim,
        perplexity=perplexity,
        kernel=_resolve_kernel(args),
        n_iter=args.iters,
        early_exaggeration=args.exaggeration,
        early_exaggeration_iters=min(args.exaggeration_iters, args.iters),
        learning_rate=_auto_or_float(args.learning_rate, "--learning-rate"),
        momentum=args.momentum,
        final_momentum=args.final_momentum,
        init=args.init,
        alpha=_auto_or_float(args.alpha, "--alpha"),
        seed=args.seed,
        fd_gradient=args.fd_grad,
    )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


# -- commands ------------------------------------------------------------------

def cmd_reduce(args) -> int:
    ds = _load_dataset(args)
    config = _build_config(args, args.perplexity)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    result = run_reduction(ds.X, config)

    outputs = {"embedding": str(out / "embedding.csv"), "manifest": str(out / "manifest.json")}
    write_embedding_csv(result, ds.labels, out / "embedding.csv")
    if config.n_components == 2:
        outputs["scatter"] = str(out / "scatter.svg")
        render_scatter_svg(result.Y, ds.labels, out / "scatter.svg",
                           title=f"{ds.name} ({config.variant.value})")
    manifest = {
        "command": "reduce",
        "version": __version__,
        "config": result.config,
        "dataset": _describe(ds, args),
        "outputs": outputs,
        "timing": {**result.timings, "variant": config.variant.value, "wall_time_s": result.wall_time},
        "final_kl": result.final_kl,
        "kl_trace": [[int(i), float(v)] for i, v in zip(result.kl_iterations, result.kl_trace)],
    }
    _write_json(out / "manifest.json", manifest)
    print(f"final KL: {result.final_kl:.6f}")
    print(f"wall time: {result.wall_time:.2f} s")
    return EXIT_OK


def cmd_trust(args) -> int:
    data = load_table(args.data, args.label_column, standardize=args.standardize)
    emb = load_table(args.embedding)
    if data.n != emb.n:
        raise InputError(f"row counts differ: data has {data.n}, embedding has {emb.n}")
    report = trustworthiness_curve(data.X, emb.X, args.k_list, repeats=args.repeats,
                                   subsample=args.subsample, seed=args.seed, name=data.name)
    write_report_json(report, args.out)
    print(f"{'k':>6}  trustworthiness")
    for k, s in zip(report.k_values, report.scores):
        print(f"{k:>6}  {s:.6f}")
    print(f"(n={report.n}, repeats={report.repeats})")
    return EXIT_OK


def _parse_overrides(items) -> dict:
    """``GAMMA:PERPLEXITY:key=value`` strings to a per-cell override map."""
    numeric = {"learning_rate", "momentum", "alpha", "early_exaggeration"}
    integer = {"n_iter", "early_exaggeration_iters"}
    out: dict = {}
    for item in items or []:
        try:
            g, p, kv = item.split(":", 2)
            key, value = kv.split("=", 1)
        except ValueError:
            raise ParameterError(f"bad --override {item!r}; expected GAMMA:PERPLEXITY:key=value") from None
        key = key.replace("-", "_")
        if key in numeric:
            val = float(value)
        elif key in integer:
            val = int(value)
        else:
            raise ParameterError(f"--override cannot set {key!r}")
        cell = (None if g in ("", "-") else float(g), float(p))
        out.setdefault(cell, {})[key] = val
    return out


def cmd_grid_search(args) -> int:
    ds = _load_dataset(args)
    base = _build_config(args, DEFAULT_PERPLEXITIES[0])
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    cells = grid_search(ds.X, base, args.gammas, args.perplexities, metric_k=args.metric_k,
                        jobs=args.jobs, overrides=_parse_overrides(args.override))
    elapsed = time.perf_counter() - t0

    rows = [dict(rank=i + 1, **c.row()) for i, c in enumerate(cells)]
    with (out / "results.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    outputs = {"results_csv": str(out / "results.csv"), "results_json": str(out / "results.json")}

    best = cells[0] if cells[0].status == "ok" else None
    if best is not None:
        write_embedding_csv(best.Y, ds.labels, out / "best_embedding.csv")
        outputs["best_embedding"] = str(out / "best_embedding.csv")
        if best.Y.shape[1] == 2:
            render_scatter_svg(best.Y, ds.labels, out / "best_scatter.svg",
                               title=f"{ds.name} gamma={best.gamma} perplexity={best.perplexity}")
            outputs["best_scatter"] = str(out / "best_scatter.svg")
    _write_json(out / "results.json", {
        "command": "grid-search",
        "version": __version__,
        "metric": {"name": "trustworthiness", "k": args.metric_k},
        "base_config": base.resolved(ds.n),
        "dataset": _describe(ds, args),
        "results": rows,
        "best": None if best is None else {**best.row(), "config": best.config},
        "outputs": outputs,
        "timing": {"total_s": elapsed},
    })

    print(f"{'rank':>4}  {'gamma':>8}  {'perp':>5}  {'status':>6}  trust@{args.metric_k}")
    for r in rows:
        score = "-" if r["trustworthiness"] is None else f"{r['trustworthiness']:.6f}"
        gamma = "-" if r["gamma"] is None else f"{r['gamma']:g}"
        print(f"{r['rank']:>4}  {gamma:>8}  {r['perplexity']:>5g}  {r['status']:>6}  {score}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    ds = generate_blobs(args.n, args.d, args.clusters, args.spread, seed=args.seed)
    write_dataset_csv(ds, args.out)
    print(f"wrote {ds.n} x {ds.X.shape[1]} dataset to {args.out}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernel-tsne", description="t-SNE and kernel t-SNE embeddings")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="embed a dataset")
    _add_data_args(p)
    _add_optimizer_args(p, variant_default="plain")
    p.add_argument("--gamma", type=float, help=f"RBF gamma (default {DEFAULT_GAMMA})")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("trust", help="trustworthiness of an embedding")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--label-column", help="CSV label column of --data to exclude from features")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--k-list", type=_int_list, default=[10, 50, 100, 500])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--subsample", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("trust_report.json"))
    p.set_defaults(func=cmd_trust)

    p = sub.add_parser("grid-search", help="search gamma x perplexity by trustworthiness")
    _add_data_args(p)
    _add_optimizer_args(p, variant_default="e2e")
    p.add_argument("--gammas", type=_float_list, default=list(DEFAULT_GAMMAS))
    p.add_argument("--perplexities", type=_float_list, default=list(DEFAULT_PERPLEXITIES))
    p.add_argument("--metric-k", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--override", action="append", metavar="GAMMA:PERPLEXITY:KEY=VALUE",
                   help="per-cell config override, e.g. 0.01:30:learning_rate=1e9")
    p.add_argument("--out-dir", type=Path, default=Path("grid"))
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("gen-data", help="write the synthetic Gaussian-blob dataset as CSV")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--clusters", type=int, default=10)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("blobs.csv"))
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (KernelTSNEError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
