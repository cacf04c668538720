"""The ``manifold-repair`` command line interface.

Every subcommand writes its outputs plus ``resolved-config.json`` into
``--out-dir``.  Exit codes: 0 on success, 1 when a pipeline fails (repair does
not converge, graph too disconnected, bound check fails), 2 on usage or input
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from . import io
from ._config import MaskConfig, RepairConfig, RunConfig
from ._embedding import Neighborhood, geodesics_to_train, out_of_sample
from ._evaluation import accuracy, evaluate_embeddings, knn_classify
from ._exceptions import (
    EmptyComponent,
    FixpointNotReached,
    FormatError,
    ShapeMismatch,
)
from ._masked import (
    Dissimilarity,
    masked_cross_distances,
    masked_euclidean,
    zero_overlap_pairs,
)
from ._numba import HAS_NUMBA, resolve_threads, set_threads
from ._pipeline import (
    PipelineEvents,
    PipelineResult,
    embed_plain,
    mr_missing,
    repair_corrupted,
)
from ._repair import (
    RepairEvents,
    check_metric,
    default_tolerance,
    repair_to_fixpoint,
)
from ._synthetic import (
    ManifoldKind,
    ManifoldSpec,
    corrupt_distances_gaussian,
    generate,
    mask_bernoulli,
    mask_uniform_fraction,
)
from ._theory import MonteCarloEvents, TheoryParams, monte_carlo_bound_check
from .utils import log_events

if TYPE_CHECKING:
    from collections.abc import Sequence

__all__ = ["build_parser", "main"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

log = logging.getLogger("manifold_repair")


def _version() -> str:
    from . import __version__

    return __version__


# ---------------------------------------------------------------------------
# argument parsing


def _manifold_kind(value: str) -> ManifoldKind:
    try:
        return ManifoldKind(value)
    except ValueError:
        choices = ", ".join(k.value for k in ManifoldKind)
        raise argparse.ArgumentTypeError(
            f"unknown manifold {value!r} (choose from {choices})"
        ) from None


def _digits(value: str) -> list[int]:
    try:
        digits = sorted({int(v) for v in value.split(",") if v.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid digit list {value!r}") from None
    if not digits or not all(0 <= d <= 9 for d in digits):
        raise argparse.ArgumentTypeError(f"digits must be in 0..9, got {value!r}")
    return digits


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="root random seed")
    p.add_argument(
        "--out-dir", type=Path, default=Path("."), help="directory for outputs"
    )
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads, 0 = all cores (default: $MANIFOLD_REPAIR_THREADS or 0)",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress events")
    return p


def _embed_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "-k", "--neighbors", type=int, default=None, help="k-NN graph (default 10)"
    )
    group.add_argument("--eps", type=float, default=None, help="radius graph")
    p.add_argument("--dim", type=int, default=2, help="embedding dimension")
    return p


def _repair_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--max-iters", type=int, default=20, help="repair passes")
    p.add_argument(
        "--tol", type=float, default=None, help="tolerance (default 1e-9 * max(D))"
    )
    p.add_argument(
        "--count-violations",
        action="store_true",
        help="count triangle violations before repair",
    )
    return p


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one sub-parser per command."""
    parser = argparse.ArgumentParser(
        prog="manifold-repair",
        description="Manifold embeddings of incomplete data via metric repair.",
    )
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common, embed, repair = _common_parser(), _embed_parser(), _repair_parser()

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic manifold")
    p.add_argument("--manifold", type=_manifold_kind, required=True)
    p.add_argument("--n", type=int, default=2000, help="number of points")
    p.add_argument("--mask-fraction", type=float, default=None)
    p.add_argument(
        "--mask-mode",
        choices=["uniform", "bernoulli"],
        default="uniform",
        help="exact fraction of entries, or independent per entry",
    )
    p.add_argument(
        "--corrupt-sigma",
        type=float,
        default=None,
        help="also write Gaussian-corrupted exact distances (std dev)",
    )
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "embed", parents=[common, embed, repair], help="MR-Missing embedding"
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="dataset CSV (empty/NaN = missing)")
    src.add_argument("--distances", type=Path, help="precomputed dissimilarities")
    p.add_argument("--mask", type=Path, default=None, help="0/1 mask CSV")
    p.add_argument("--no-repair", action="store_true", help="embed without repair")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser(
        "repair", parents=[common, embed, repair], help="repair a distance matrix"
    )
    p.add_argument("--distances", type=Path, required=True)
    p.add_argument(
        "--embed", action="store_true", help="also embed the repaired matrix"
    )
    p.add_argument(
        "--max-report", type=int, default=1000, help="violations listed per file"
    )
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser(
        "evaluate", parents=[common], help="compare two embeddings after Procrustes"
    )
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--candidate", type=Path, required=True)
    p.add_argument("-k", type=int, default=10, help="neighborhood size")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "theory-check", parents=[common], help="Monte Carlo check of the bound"
    )
    p.add_argument("--params", type=Path, required=True, help="JSON parameters")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--grid", type=int, default=200, help="gamma search grid")
    p.set_defaults(func=cmd_theory_check)

    p = sub.add_parser("classify", parents=[common], help="k-NN classification")
    p.add_argument("--train-embedding", type=Path, required=True)
    p.add_argument("--train-labels", type=Path, required=True)
    p.add_argument("--test-embedding", type=Path, required=True)
    p.add_argument("--test-labels", type=Path, required=True)
    p.add_argument("-k", type=int, default=5)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser(
        "project",
        parents=[common, embed, repair],
        help="embed a training set and project a test set into it",
    )
    p.add_argument("--train-data", type=Path, required=True)
    p.add_argument("--train-mask", type=Path, default=None)
    p.add_argument("--test-data", type=Path, required=True)
    p.add_argument("--test-mask", type=Path, default=None)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("ingest-mnist", parents=[common], help="convert IDX files")
    p.add_argument("--images", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--digits", type=_digits, default=list(range(10)))
    p.add_argument("--limit", type=int, default=None, help="keep the first N images")
    p.add_argument(
        "--per-digit", type=int, default=None, help="keep the first N of each digit"
    )
    p.set_defaults(func=cmd_ingest_mnist)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _neighborhood(args: argparse.Namespace) -> Neighborhood:
    if args.eps is not None:
        return Neighborhood.radius(args.eps)
    return Neighborhood.knn(10 if args.neighbors is None else args.neighbors)


def _repair_config(args: argparse.Namespace) -> RepairConfig:
    return RepairConfig(
        max_iters=args.max_iters, tol=args.tol, count_violations=args.count_violations
    )


def _prepare(args: argparse.Namespace, **fields: Any) -> RunConfig:
    """Resolve threads, create the output directory, write the resolved config."""
    threads = resolve_threads(args.threads)
    if threads > 1 and not HAS_NUMBA:
        warnings.warn(
            "numba is not installed; running single-threaded", UserWarning, stacklevel=2
        )
    in_use = set_threads(threads)
    log.debug("using %d thread(s)", in_use)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    cfg = RunConfig(
        command=args.command,
        seed=args.seed,
        threads=threads,
        out_dir=args.out_dir,
        version=_version(),
        **fields,
    )
    io.write_json(args.out_dir / "resolved-config.json", cfg.resolved())
    return cfg


def _write_result(out: Path, result: PipelineResult) -> None:
    io.write_embedding(out / "embedding.csv", result.embedding)
    io.write_matrix(out / "distances.csv", result.dissimilarity.d)
    io.write_matrix(out / "repair.csv", result.repair.p)
    io.write_json(out / "diagnostics.json", result.diagnostics.to_dict())
    dropped = result.diagnostics.dropped_points
    log.info(
        "embedded %d point(s) in %d dimension(s); repair raised %d entries",
        result.embedding.n,
        result.embedding.dim,
        result.diagnostics.repair_l0,
    )
    if dropped:
        log.warning("%d point(s) outside the largest component", len(dropped))


def _emit(out: Path, name: str, payload: dict[str, Any]) -> None:
    io.write_json(out / name, payload)
    print(json.dumps(payload, sort_keys=True))


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args: argparse.Namespace) -> int:
    """Write ``dataset.csv`` and ``intrinsic.csv``, plus the masked copies."""
    spec = ManifoldSpec(kind=args.manifold, n=args.n, seed=args.seed)
    mask_cfg = None
    if args.mask_fraction is not None:
        mask_cfg = MaskConfig(mode=args.mask_mode, rate=args.mask_fraction)
    if args.corrupt_sigma is not None and args.corrupt_sigma < 0:
        raise ValueError(f"--corrupt-sigma must be >= 0, got {args.corrupt_sigma}")
    _prepare(
        args,
        mask=mask_cfg,
        options={
            "manifold": spec.kind.value,
            "n": spec.n,
            "corrupt_sigma": args.corrupt_sigma,
        },
    )
    out = args.out_dir
    data, params = generate(spec)
    io.write_matrix(out / "dataset.csv", data.values)
    io.write_matrix(out / "intrinsic.csv", params)
    if mask_cfg is not None:
        if mask_cfg.mode == "uniform":
            masked = mask_uniform_fraction(data, mask_cfg.rate, args.seed)
        else:
            masked = mask_bernoulli(data, 1.0 - mask_cfg.rate, args.seed)
        io.write_mask(out / "mask.csv", masked.mask)
        io.write_dataset(out / "masked.csv", masked)
        log.info("masked %d of %d entries", int((~masked.mask).sum()), masked.mask.size)
    if args.corrupt_sigma is not None:
        clean = Dissimilarity.from_points(data.values)
        noisy = corrupt_distances_gaussian(clean, args.corrupt_sigma, args.seed)
        io.write_matrix(out / "distances.csv", noisy.d)
    log.info("wrote %s with %d point(s) to %s", spec.kind.value, spec.n, out)
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    """Embed a dataset (or a dissimilarity matrix), repairing it first."""
    if args.distances is not None and args.mask is not None:
        raise ValueError("--mask applies to --data, not to --distances")
    nb, repair_cfg = _neighborhood(args), _repair_config(args)
    source = args.data if args.data is not None else args.distances
    inputs = {"data" if args.data is not None else "distances": str(source)}
    if args.mask is not None:
        inputs["mask"] = str(args.mask)
    _prepare(
        args,
        neighborhood=nb,
        dim=args.dim,
        repair=repair_cfg,
        inputs=inputs,
        options={"no_repair": args.no_repair},
    )
    pipe_events, repair_events = PipelineEvents(), RepairEvents()
    with log_events(pipe_events, repair_events):
        if args.distances is not None:
            d = io.read_distances(args.distances)
            if args.no_repair:
                result = embed_plain(d, nb, args.dim, events=pipe_events)
            else:
                result = repair_corrupted(
                    d,
                    nb,
                    args.dim,
                    repair_cfg,
                    events=pipe_events,
                    repair_events=repair_events,
                )
        else:
            data = io.read_dataset(args.data, args.mask)
            if args.no_repair:
                result = embed_plain(
                    masked_euclidean(data), nb, args.dim, events=pipe_events
                )
                diag = replace(
                    result.diagnostics, zero_overlap_pairs=zero_overlap_pairs(data)
                )
                result = replace(result, diagnostics=diag)
            else:
                result = mr_missing(
                    data,
                    nb,
                    args.dim,
                    repair_cfg,
                    events=pipe_events,
                    repair_events=repair_events,
                )
    _write_result(args.out_dir, result)
    return EXIT_OK


def cmd_repair(args: argparse.Namespace) -> int:
    """Repair a dissimilarity matrix and report violations before and after."""
    nb, repair_cfg = _neighborhood(args), _repair_config(args)
    _prepare(
        args,
        neighborhood=nb,
        dim=args.dim,
        repair=repair_cfg,
        inputs={"distances": str(args.distances)},
        options={"embed": args.embed, "max_report": args.max_report},
    )
    out = args.out_dir
    d = io.read_distances(args.distances)
    tol = default_tolerance(d) if repair_cfg.tol is None else repair_cfg.tol
    before = check_metric(d, tol, max_violations=args.max_report)
    io.write_violations(out / "violations_before.jsonl", before)
    log.info("%d triangle violation(s) before repair", before.count)

    pipe_events, repair_events = PipelineEvents(), RepairEvents()
    with log_events(pipe_events, repair_events):
        if args.embed:
            result = repair_corrupted(
                d,
                nb,
                args.dim,
                repair_cfg.model_copy(update={"tol": tol}),
                events=pipe_events,
                repair_events=repair_events,
            )
            delta, iterations = result.repair, result.diagnostics.repair_iterations
            io.write_embedding(out / "embedding.csv", result.embedding)
        else:
            _, delta, iterations = repair_to_fixpoint(
                d, repair_cfg.max_iters, tol, events=repair_events
            )
    repaired = d + delta
    after = check_metric(repaired, tol, max_violations=args.max_report)
    io.write_matrix(out / "repaired.csv", repaired.d)
    io.write_matrix(out / "repair.csv", delta.p)
    io.write_violations(out / "violations_after.jsonl", after)
    io.write_json(
        out / "diagnostics.json",
        {
            "max_slack_before": before.max_slack,
            "repair_iterations": iterations,
            "repair_l0": delta.l0,
            "repair_l1": delta.l1,
            "tol": tol,
            "violations_after": after.count,
            "violations_before": before.count,
        },
    )
    log.info("repaired in %d pass(es), raised %d entries", iterations, delta.l0)
    return EXIT_OK


def _match_rows(
    path_a: Path, path_b: Path
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx_a, a = io.read_embedding(path_a)
    idx_b, b = io.read_embedding(path_b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"embeddings differ in shape: {a.shape} vs {b.shape}")
    order_a = np.argsort(idx_a, kind="stable")
    order_b = np.argsort(idx_b, kind="stable")
    if not np.array_equal(idx_a[order_a], idx_b[order_b]):
        raise ShapeMismatch("embeddings cover different points (index columns differ)")
    return idx_a[order_a], a[order_a], b[order_b]


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Write ``metrics.json`` comparing two embedding files."""
    _prepare(
        args,
        inputs={"reference": str(args.reference), "candidate": str(args.candidate)},
        options={"k": args.k},
    )
    _, ref, cand = _match_rows(args.reference, args.candidate)
    _emit(args.out_dir, "metrics.json", evaluate_embeddings(ref, cand, args.k))
    return EXIT_OK


def cmd_theory_check(args: argparse.Namespace) -> int:
    """Monte Carlo check of the masked-distance bound; exit 1 if it fails."""
    raw = io.read_json(args.params)
    if not isinstance(raw, dict):
        raise FormatError(f"{args.params}: expected a JSON object")
    params = TheoryParams(**raw)
    _prepare(
        args,
        inputs={"params": str(args.params)},
        options={
            "params": params.model_dump(),
            "trials": args.trials,
            "grid": args.grid,
        },
    )
    events = MonteCarloEvents()
    with log_events(events):
        result = monte_carlo_bound_check(
            params, args.trials, args.seed, grid=args.grid, events=events
        )
    _emit(args.out_dir, "theory.json", result.to_dict())
    if not result.ok:
        log.error(
            "empirical probability %.6g exceeds the bound %.6g",
            result.empirical,
            result.bound,
        )
        return EXIT_FAILURE
    return EXIT_OK


def _labels_for(index: np.ndarray, labels: np.ndarray, what: str) -> np.ndarray:
    if labels.size < index.size or (index.size and index.max() >= labels.size):
        raise ShapeMismatch(
            f"{labels.size} {what} label(s) do not cover {index.size} embedded points"
        )
    return labels[index]


def cmd_classify(args: argparse.Namespace) -> int:
    """Classify test embeddings with k-NN on train embeddings."""
    _prepare(
        args,
        inputs={
            "train_embedding": str(args.train_embedding),
            "train_labels": str(args.train_labels),
            "test_embedding": str(args.test_embedding),
            "test_labels": str(args.test_labels),
        },
        options={"k": args.k},
    )
    train_idx, train = io.read_embedding(args.train_embedding)
    test_idx, test = io.read_embedding(args.test_embedding)
    y_train = _labels_for(train_idx, io.read_labels(args.train_labels), "train")
    y_test = _labels_for(test_idx, io.read_labels(args.test_labels), "test")
    predicted = knn_classify(train, y_train, test, args.k)
    io.write_labels(args.out_dir / "predictions.csv", predicted)
    payload = {
        "accuracy": accuracy(predicted, y_test),
        "k": args.k,
        "n_test": int(test.shape[0]),
        "n_train": int(train.shape[0]),
    }
    _emit(args.out_dir, "classify.json", payload)
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    """Embed the training set with MR-Missing and project the test set into it."""
    nb, repair_cfg = _neighborhood(args), _repair_config(args)
    inputs = {"train_data": str(args.train_data), "test_data": str(args.test_data)}
    for key in ("train_mask", "test_mask"):
        if getattr(args, key) is not None:
            inputs[key] = str(getattr(args, key))
    _prepare(args, neighborhood=nb, dim=args.dim, repair=repair_cfg, inputs=inputs)
    train = io.read_dataset(args.train_data, args.train_mask)
    test = io.read_dataset(args.test_data, args.test_mask)

    pipe_events, repair_events = PipelineEvents(), RepairEvents()
    with log_events(pipe_events, repair_events):
        result = mr_missing(
            train,
            nb,
            args.dim,
            repair_cfg,
            events=pipe_events,
            repair_events=repair_events,
        )
    kept = result.embedding.kept_indices
    direct = masked_cross_distances(test, train)[:, kept]
    attach = min(nb.k if nb.kind == "knn" and nb.k else 10, kept.size)
    geo = geodesics_to_train(direct, result.geodesics, attach)
    coords = out_of_sample(result.geodesics, result.embedding, geo)

    _write_result(args.out_dir, result)
    io.write_coords(args.out_dir / "test_embedding.csv", coords)
    log.info("projected %d test point(s)", coords.shape[0])
    return EXIT_OK


def cmd_ingest_mnist(args: argparse.Namespace) -> int:
    """Convert MNIST IDX files into ``dataset.csv`` and ``labels.csv``."""
    _prepare(
        args,
        inputs={"images": str(args.images), "labels": str(args.labels)},
        options={
            "digits": args.digits,
            "limit": args.limit,
            "per_digit": args.per_digit,
        },
    )
    images = io.read_idx_images(args.images)
    labels = io.read_idx_labels(args.labels)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images.shape[0]} image(s) but {labels.shape[0]} label(s)"
        )
    keep = np.flatnonzero(np.isin(labels, args.digits))
    if args.per_digit is not None:
        keep = np.sort(
            np.concatenate(
                [keep[labels[keep] == digit][: args.per_digit] for digit in args.digits]
            )
        )
    if args.limit is not None:
        keep = keep[: args.limit]
    io.write_matrix(args.out_dir / "dataset.csv", images[keep])
    io.write_labels(args.out_dir / "labels.csv", labels[keep])
    log.info("wrote %d image(s) of digits %s", keep.size, args.digits)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _log_warning(
    message: Warning | str,
    category: type[Warning],
    filename: str,
    lineno: int,
    file: Any = None,
    line: str | None = None,
) -> None:
    log.warning("%s", message)


def _install_handler(verbose: bool) -> logging.Handler:
    handler = RichHandler(
        console=Console(stderr=True), show_time=False, show_path=False
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    return handler


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    handler = _install_handler(args.verbose)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            warnings.showwarning = _log_warning
            return int(args.func(args))
    except (FixpointNotReached, EmptyComponent) as e:
        log.error("%s", e)
        return EXIT_FAILURE
    except (ValueError, OSError) as e:
        log.error("%s", e)
        return EXIT_USAGE
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
