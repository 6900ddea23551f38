"""Command-line front end.

Subcommands: ``estimate`` (CV + fit + SMI), ``match`` (align two
feature tables), ``summarize`` (items onto a grid), ``generate``
(synthetic datasets to files), ``benchmark`` (size sweep of the fit
loop), and ``replay`` (re-run a recorded manifest and verify outputs).

Every run writes a ``manifest.json`` capturing the argv, resolved
configuration, input/output digests, and phase timings; all randomness
flows from ``--seed``, so re-running a manifest reproduces the
deterministic outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import KINDS, SyntheticSpec, generate, load_table
from .estimator import EstimatorConfig, SampleSet, fit, smi_estimate
from .matching import GridSpec, grid_summarize, normalize_positions, plan_to_assignment, topk_accuracy
from .model_selection import CvGrid, cross_validate

__all__ = ["main"]


# ---------------------------------------------------------------------------
# Run bookkeeping


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunRecorder:
    """Collects inputs, outputs, and timings; writes the manifest."""

    def __init__(self, command: str, argv: list, out_dir: Path, config: dict):
        self.command = command
        self.argv = list(argv)
        self.out_dir = out_dir
        self.config = config
        self.inputs: dict = {}
        self.outputs: dict = {}
        self.timings: dict = {}

    def note_input(self, path) -> None:
        p = Path(path)
        self.inputs[str(p)] = _sha256(p)

    def note_output(self, name: str, deterministic: bool = True) -> None:
        self.outputs[name] = {
            "sha256": _sha256(self.out_dir / name),
            "deterministic": deterministic,
        }

    def write_manifest(self) -> None:
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings": self.timings,
        }
        with open(self.out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


class _Phase:
    """Context manager recording one wall-clock phase."""

    def __init__(self, recorder: RunRecorder, name: str):
        self.recorder = recorder
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.recorder.timings[self.name] = time.perf_counter() - self.start
        return False


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _write_record(path: Path, record: dict) -> None:
    with open(path, "w") as fh:
        for key, value in record.items():
            fh.write(f"{key}: {_format_value(value)}\n")


def _save_matrix(path: Path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.asarray(matrix), delimiter=",", fmt="%.17e")


# ---------------------------------------------------------------------------
# Shared argument handling


def _add_io_args(parser):
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)


def _add_config_args(parser):
    parser.add_argument("--b", type=int, default=200, help="number of basis functions")
    parser.add_argument("--epsilon", type=float, default=0.3, help="entropic weight")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="ridge weight")
    parser.add_argument("--beta", type=float, default=None, help="paired/unpaired mixing weight")
    parser.add_argument("--iters", type=int, default=20, help="max outer iterations")
    parser.add_argument(
        "--cv", action="store_true",
        help="select lambda and beta by cross-validation (implied when either is omitted)",
    )


def _add_synthetic_args(parser):
    parser.add_argument("--synthetic", choices=KINDS, help="generate data instead of reading files")
    parser.add_argument("--n", type=int, default=20, help="paired sample count")
    parser.add_argument("--nx", type=int, default=100, help="unpaired x pool size")
    parser.add_argument("--ny", type=int, default=100, help="unpaired y pool size")
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--noise-sd", dest="noise_sd", type=float, default=None)


def _add_file_args(parser):
    parser.add_argument("--x", help="x feature table")
    parser.add_argument("--y", help="y feature table")
    parser.add_argument("--paired", help="two-column index file: x row, y row of each known pair")


def _resolve_config(args) -> EstimatorConfig:
    defaults = EstimatorConfig()
    return EstimatorConfig(
        n_basis=args.b,
        epsilon=args.epsilon,
        lam=defaults.lam if args.lam is None else args.lam,
        beta=defaults.beta if args.beta is None else args.beta,
        max_outer_iters=args.iters,
        seed=args.seed,
    )


def _load_indexed(args, recorder: RunRecorder):
    """Build a SampleSet from --x/--y tables plus an optional pair index.

    Returns (data, x_rows, y_rows) where the row lists map unpaired
    pool positions back to table rows.
    """
    if not args.x or not args.y:
        raise ValueError("file input needs both --x and --y")
    recorder.note_input(args.x)
    recorder.note_input(args.y)
    x = load_table(args.x)
    y = load_table(args.y)
    if args.paired:
        recorder.note_input(args.paired)
        idx = load_table(args.paired).astype(int)
        if idx.shape[1] != 2:
            raise ValueError("--paired file must have two columns (x row, y row)")
        px, py = idx[:, 0], idx[:, 1]
        for name, ids, limit in (("x", px, x.shape[0]), ("y", py, y.shape[0])):
            if len(set(ids.tolist())) != len(ids):
                raise ValueError(f"--paired repeats a {name} row")
            if ids.min(initial=0) < 0 or ids.max(initial=-1) >= limit:
                raise ValueError(f"--paired {name} row index out of range")
    else:
        px = np.array([], dtype=int)
        py = np.array([], dtype=int)
    x_rows = [i for i in range(x.shape[0]) if i not in set(px.tolist())]
    y_rows = [j for j in range(y.shape[0]) if j not in set(py.tolist())]
    data = SampleSet(x[px], y[py], x[x_rows], y[y_rows])
    return data, x_rows, y_rows


def _resolve_data(args, recorder: RunRecorder):
    if args.synthetic and (args.x or args.y):
        raise ValueError("choose either --synthetic or --x/--y, not both")
    if args.synthetic:
        spec = SyntheticSpec(
            kind=args.synthetic,
            n=args.n,
            n_x=args.nx,
            n_y=args.ny,
            dim=args.dim,
            noise_sd=args.noise_sd,
            seed=args.seed,
        )
        return generate(spec), None, None
    return _load_indexed(args, recorder)


def _maybe_cross_validate(data, config, args, recorder: RunRecorder):
    """Run CV when requested or when lambda/beta were not pinned."""
    wants_cv = args.cv or args.lam is None or args.beta is None
    if not wants_cv:
        return config, None
    grid = CvGrid(seed=args.seed)
    report = cross_validate(data, config, grid)
    config = replace(config, lam=report.best_lambda, beta=report.best_beta)
    recorder.config["lam"] = config.lam
    recorder.config["beta"] = config.beta
    return config, report


def _write_cv_scores(out_dir: Path, recorder: RunRecorder, report) -> None:
    lines = ["lambda,beta,score"]
    for (lam, beta), score in sorted(report.scores.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
        lines.append(f"{lam!r},{beta!r},{score!r}")
    (out_dir / "cv.csv").write_text("\n".join(lines) + "\n")
    recorder.note_output("cv.csv")


def _prepare(args, command: str) -> tuple[Path, RunRecorder]:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "_argv")}
    config["out"] = str(out_dir)
    recorder = RunRecorder(command, args._argv, out_dir, config)
    return out_dir, recorder


# ---------------------------------------------------------------------------
# Commands


def cmd_estimate(args) -> int:
    out_dir, recorder = _prepare(args, "estimate")
    with _Phase(recorder, "load_seconds"):
        data, _, _ = _resolve_data(args, recorder)
    config = _resolve_config(args)
    with _Phase(recorder, "cv_seconds"):
        config, report = _maybe_cross_validate(data, config, args, recorder)
    with _Phase(recorder, "fit_seconds"):
        result = fit(data, config)
        smi = smi_estimate(result.model, data)
    with _Phase(recorder, "write_seconds"):
        record = {
            "command": "estimate",
            "smi": smi,
            "lambda": config.lam,
            "beta": config.beta,
            "epsilon": config.epsilon,
            "b": result.model.basis.b,
            "n": data.n,
            "n_x": data.n_x,
            "n_y": data.n_y,
            "seed": args.seed,
            "cv": report is not None,
            "iterations": result.iterations_run,
            "converged": result.converged,
            "plan_feasible": result.plan.converged,
            "objective_trace": result.objective_trace,
        }
        _write_record(out_dir / "result.txt", record)
        recorder.note_output("result.txt")
        if report is not None:
            _write_cv_scores(out_dir, recorder, report)
        if args.save_plan:
            _save_matrix(out_dir / "plan.csv", result.plan.pi)
            recorder.note_output("plan.csv")
    recorder.write_manifest()
    return 0


def cmd_match(args) -> int:
    out_dir, recorder = _prepare(args, "match")
    with _Phase(recorder, "load_seconds"):
        data, x_rows, y_rows = _resolve_data(args, recorder)
    config = _resolve_config(args)
    with _Phase(recorder, "cv_seconds"):
        config, report = _maybe_cross_validate(data, config, args, recorder)
    with _Phase(recorder, "fit_seconds"):
        result = fit(data, config)
        assignment = plan_to_assignment(result.plan, method=args.method)
    if x_rows is None:
        x_rows = list(range(data.n_x))
        y_rows = list(range(data.n_y))

    record = {
        "command": "match",
        "lambda": config.lam,
        "beta": config.beta,
        "matched": len(assignment.pairs),
        "smi": smi_estimate(result.model, data),
        "iterations": result.iterations_run,
        "converged": result.converged,
    }
    if args.truth:
        recorder.note_input(args.truth)
        truth = load_table(args.truth).astype(int)
        x_pos = {row: i for i, row in enumerate(x_rows)}
        y_pos = {row: j for j, row in enumerate(y_rows)}
        local = [
            (x_pos[i], y_pos[j])
            for i, j in truth
            if int(i) in x_pos and int(j) in y_pos
        ]
        if local:
            record["top1_accuracy"] = topk_accuracy(result.plan, local, 1)
            record["top2_accuracy"] = topk_accuracy(result.plan, local, 2)
    if args.labels_x and args.labels_y:
        recorder.note_input(args.labels_x)
        recorder.note_input(args.labels_y)
        lx = [line.strip() for line in Path(args.labels_x).read_text().splitlines() if line.strip()]
        ly = [line.strip() for line in Path(args.labels_y).read_text().splitlines() if line.strip()]
        same = [
            lx[x_rows[i]] == ly[y_rows[j]] for i, j in assignment.pairs
        ]
        record["class_accuracy"] = float(np.mean(same))

    with _Phase(recorder, "write_seconds"):
        lines = ["x_row,y_row"]
        lines += [f"{x_rows[i]},{y_rows[j]}" for i, j in assignment.pairs]
        (out_dir / "assignment.csv").write_text("\n".join(lines) + "\n")
        recorder.note_output("assignment.csv")
        _write_record(out_dir / "result.txt", record)
        recorder.note_output("result.txt")
        if report is not None:
            _write_cv_scores(out_dir, recorder, report)
        if args.save_plan:
            _save_matrix(out_dir / "plan.csv", result.plan.pi)
            recorder.note_output("plan.csv")
    recorder.write_manifest()
    return 0


def _parse_grid(args) -> np.ndarray:
    if bool(args.grid) == bool(args.grid_file):
        raise ValueError("summarize needs exactly one of --grid RxC or --grid-file")
    if args.grid:
        try:
            rows, cols = (int(part) for part in args.grid.lower().split("x"))
        except ValueError:
            raise ValueError(f"--grid must look like 16x20, got {args.grid!r}") from None
        if rows < 1 or cols < 1:
            raise ValueError("--grid dimensions must be >= 1")
        return np.array([(r, c) for r in range(rows) for c in range(cols)], dtype=float)
    return load_table(args.grid_file)


def cmd_summarize(args) -> int:
    out_dir, recorder = _prepare(args, "summarize")
    with _Phase(recorder, "load_seconds"):
        recorder.note_input(args.items)
        items = load_table(args.items)
        if args.grid_file:
            recorder.note_input(args.grid_file)
        positions = _parse_grid(args)
        anchors = []
        if args.anchors:
            recorder.note_input(args.anchors)
            idx = load_table(args.anchors).astype(int)
            if idx.size and idx.shape[1] != 2:
                raise ValueError("--anchors file must have two columns (item, position)")
            anchors = [(int(i), int(p)) for i, p in idx]
        grid = GridSpec(positions, anchors)

    config = _resolve_config(args)
    report = None
    with _Phase(recorder, "cv_seconds"):
        if (args.cv or args.lam is None or args.beta is None) and len(anchors) >= 4:
            anchored_items = [i for i, _ in anchors]
            anchored_spots = [p for _, p in anchors]
            coords = normalize_positions(positions)
            free_items = sorted(set(range(items.shape[0])) - set(anchored_items))
            free_spots = sorted(set(range(positions.shape[0])) - set(anchored_spots))
            cv_data = SampleSet(
                items[anchored_items], coords[anchored_spots],
                items[free_items], coords[free_spots],
            )
            config, report = _maybe_cross_validate(cv_data, config, args, recorder)

    with _Phase(recorder, "fit_seconds"):
        placements = grid_summarize(items, grid, config)
    with _Phase(recorder, "write_seconds"):
        lines = ["position_index,item_index"]
        lines += [f"{p},{i}" for i, p in placements]
        (out_dir / "placements.csv").write_text("\n".join(lines) + "\n")
        recorder.note_output("placements.csv")
        placed = {i for i, _ in placements}
        unplaced = [i for i in range(items.shape[0]) if i not in placed]
        (out_dir / "unplaced.csv").write_text(
            "item_index\n" + "".join(f"{i}\n" for i in unplaced)
        )
        recorder.note_output("unplaced.csv")
        record = {
            "command": "summarize",
            "items": items.shape[0],
            "positions": positions.shape[0],
            "anchors": len(anchors),
            "placed": len(placements),
            "unplaced": len(unplaced),
            "lambda": config.lam,
            "beta": config.beta,
        }
        _write_record(out_dir / "result.txt", record)
        recorder.note_output("result.txt")
        if report is not None:
            _write_cv_scores(out_dir, recorder, report)
    recorder.write_manifest()
    return 0


def cmd_generate(args) -> int:
    out_dir, recorder = _prepare(args, "generate")
    if not args.synthetic:
        raise ValueError("generate requires --synthetic KIND")
    with _Phase(recorder, "generate_seconds"):
        spec = SyntheticSpec(
            kind=args.synthetic,
            n=args.n,
            n_x=args.nx,
            n_y=args.ny,
            dim=args.dim,
            noise_sd=args.noise_sd,
            seed=args.seed,
        )
        data = generate(spec)
    with _Phase(recorder, "write_seconds"):
        for name, block in (
            ("paired_x.csv", data.paired_x),
            ("paired_y.csv", data.paired_y),
            ("unpaired_x.csv", data.unpaired_x),
            ("unpaired_y.csv", data.unpaired_y),
        ):
            _save_matrix(out_dir / name, block)
            recorder.note_output(name)
    recorder.write_manifest()
    return 0


def cmd_benchmark(args) -> int:
    out_dir, recorder = _prepare(args, "benchmark")
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if len(sizes) < 2:
        raise ValueError("--sizes needs at least two comma-separated sizes")
    if args.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    config = _resolve_config(args)
    rows = []
    with _Phase(recorder, "sweep_seconds"):
        for size in sizes:
            spec = SyntheticSpec(kind="linear", n=args.n, n_x=size, n_y=size, seed=args.seed)
            data = generate(spec)
            # minimum across repeats strips scheduler noise, which otherwise
            # drowns the smallest sizes in constant overhead
            best = min(
                (fit(data, config) for _ in range(args.repeats)),
                key=lambda r: r.timings["per_iteration_seconds"],
            )
            rows.append(
                (
                    size,
                    best.iterations_run,
                    best.timings["setup_seconds"],
                    best.timings["iteration_seconds"],
                    best.timings["per_iteration_seconds"],
                )
            )
    slope = float(
        np.polyfit(
            np.log([r[0] for r in rows]), np.log([r[4] for r in rows]), 1
        )[0]
    )
    with _Phase(recorder, "write_seconds"):
        lines = ["size,iterations,setup_seconds,iteration_seconds,per_iteration_seconds"]
        lines += [f"{s},{it},{su!r},{io!r},{pi!r}" for s, it, su, io, pi in rows]
        (out_dir / "benchmark.csv").write_text("\n".join(lines) + "\n")
        recorder.note_output("benchmark.csv", deterministic=False)
        record = {
            "command": "benchmark",
            "sizes": sizes,
            "repeats": args.repeats,
            "slope": slope,
            "b": config.n_basis,
            "n": args.n,
        }
        _write_record(out_dir / "result.txt", record)
        recorder.note_output("result.txt", deterministic=False)
    recorder.write_manifest()
    return 0


def cmd_replay(args) -> int:
    manifest_path = Path(args.manifest)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if "--out" not in argv:
        raise ValueError("manifest argv has no --out to redirect")
    argv[argv.index("--out") + 1] = args.out
    code = main(argv)
    if code != 0:
        print(f"replay: re-run failed with exit code {code}", file=sys.stderr)
        return code
    failures = 0
    for name, rec in sorted(manifest["outputs"].items()):
        if not rec.get("deterministic", True):
            print(f"replay: {name}: skipped (timing-dependent)")
            continue
        new_digest = _sha256(Path(args.out) / name)
        if new_digest == rec["sha256"]:
            print(f"replay: {name}: ok")
        else:
            print(f"replay: {name}: MISMATCH")
            failures += 1
    if failures:
        print(f"replay: {failures} file(s) differ", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semismi",
        description="Squared-loss mutual information from few pairs plus unpaired pools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate SMI (CV + fit)")
    _add_io_args(p_est)
    _add_config_args(p_est)
    _add_synthetic_args(p_est)
    _add_file_args(p_est)
    p_est.add_argument("--save-plan", action="store_true", help="write plan.csv")
    p_est.set_defaults(func=cmd_estimate)

    p_match = sub.add_parser("match", help="match two feature tables")
    _add_io_args(p_match)
    _add_config_args(p_match)
    _add_synthetic_args(p_match)
    _add_file_args(p_match)
    p_match.add_argument("--truth", help="two-column file of true (x row, y row) pairs")
    p_match.add_argument("--labels-x", dest="labels_x", help="one label per x row")
    p_match.add_argument("--labels-y", dest="labels_y", help="one label per y row")
    p_match.add_argument("--method", choices=("greedy", "optimal"), default="optimal")
    p_match.add_argument("--save-plan", action="store_true", help="write plan.csv")
    p_match.set_defaults(func=cmd_match)

    p_sum = sub.add_parser("summarize", help="lay items out on a grid")
    _add_io_args(p_sum)
    _add_config_args(p_sum)
    p_sum.add_argument("--items", required=True, help="item feature table")
    p_sum.add_argument("--grid", help="grid shape, e.g. 16x20")
    p_sum.add_argument("--grid-file", dest="grid_file", help="explicit coordinate table")
    p_sum.add_argument("--anchors", help="two-column file of fixed (item, position) pairs")
    p_sum.set_defaults(func=cmd_summarize)

    p_gen = sub.add_parser("generate", help="write a synthetic dataset")
    _add_io_args(p_gen)
    _add_synthetic_args(p_gen)
    p_gen.set_defaults(func=cmd_generate)

    p_bench = sub.add_parser("benchmark", help="time the fit loop across sizes")
    _add_io_args(p_bench)
    _add_config_args(p_bench)
    p_bench.add_argument("--sizes", default="100,200,400,800", help="comma-separated pool sizes")
    p_bench.add_argument("--n", type=int, default=10, help="paired count per run")
    p_bench.add_argument("--repeats", type=int, default=5, help="timing repeats per size (min is kept)")
    # A basis small enough that no sweep size clamps it, so every run
    # prices the same number of features.
    p_bench.set_defaults(func=cmd_benchmark, b=100)

    p_replay = sub.add_parser("replay", help="re-run a manifest and verify outputs")
    p_replay.add_argument("manifest", help="path to manifest.json")
    p_replay.add_argument("--out", required=True, help="directory for the re-run")
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(raw)
    args._argv = raw
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
