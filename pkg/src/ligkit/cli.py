"""Batch command-line front end.

Subcommands: refine, score, decompose, mask, analyze, gsnr, schedule.
Exit status 0 on success, 1 when some inputs failed, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .diffsched import make_schedule
from .energy import VINA_WEIGHTS, evaluate
from .ibstats import DEFAULT_THRESHOLDS, classify_interactions, gradient_snr, information_density, summarize
from .molio import parse_ligand, parse_receptor, write_ligand
from .refine import lbfgs_refine
from .scaffold import TASKS, decompose, make_mask, sample_mask

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path) -> bytes:
    return Path(path).read_bytes()


def _load_pocket(path, clip_radius: float | None = None, ligand=None):
    clip = None
    if clip_radius is not None and ligand is not None:
        clip = (ligand.coords[ligand.heavy_mask].mean(axis=0), clip_radius)
    return parse_receptor(_read(path), clip=clip, source=str(path))


def _read_manifest(path) -> list[tuple[str, str]]:
    pairs = []
    base = Path(path).parent
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise UsageError(f"manifest line must hold receptor<TAB>ligand: {line!r}")
        pairs.append(tuple(str(base / p.strip()) if not os.path.isabs(p.strip()) else p.strip() for p in parts))
    return pairs


def _provenance(args, command: str) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    return {"tool": "ligkit", "version": __version__, "command": command, "config": cfg}


def _weights(args):
    if getattr(args, "weights", None):
        w = [float(v) for v in args.weights.split(",")]
        if len(w) != 5:
            raise UsageError("--weights needs five comma-separated values")
        return w
    return None


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(type(o))


def _refine_job(job):
    receptor, ligand, params = job
    try:
        lig = parse_ligand(_read(ligand))
        pocket = _load_pocket(receptor, params["clip_radius"], lig)
        res = lbfgs_refine(
            pocket, lig, T_max=params["epochs"], step=params["step"], memory=params["memory"],
            eps=params["eps"], central=params["central"], weights=params["weights"],
        )
    except Exception as exc:  # per-ligand isolation
        return {"receptor": receptor, "ligand": ligand, "error": f"{type(exc).__name__}: {exc}"}
    annotations = {
        "E_init": res.e_init,
        "E_opt": res.e_opt,
        "accepted": int(res.accepted),
        "iterations": res.iterations_used,
        "pose_u": res.pose.u,
    }
    return {
        "receptor": receptor,
        "ligand": ligand,
        "sdf": write_ligand(lig, res.pose, annotations),
        "E_init": res.e_init,
        "E_opt": res.e_opt,
        "accepted": res.accepted,
        "iterations": res.iterations_used,
        "pose": res.pose.as_dict(),
        "trace": list(zip(res.raw_trace, res.energy_trace)),
        "error": res.error,
    }


def _map(fn, jobs, n_jobs: int):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs))


def _jobs_from(args) -> list[tuple[str, str]]:
    if args.manifest:
        return _read_manifest(args.manifest)
    if not args.receptor or not args.ligand:
        raise UsageError("give --receptor and --ligand, or --manifest")
    return [(args.receptor, lig) for lig in args.ligand]


def cmd_refine(args) -> int:
    pairs = _jobs_from(args)
    params = {
        "epochs": args.epochs, "step": args.step, "eps": args.eps, "memory": args.memory,
        "central": args.central, "weights": _weights(args), "clip_radius": args.clip_radius,
    }
    results = _map(_refine_job, [(r, l, params) for r, l in pairs], args.jobs)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    failures = 0
    for k, res in enumerate(results):
        if "sdf" not in res:
            failures += 1
            summary.append({"index": k, "receptor": res["receptor"], "ligand": res["ligand"], "error": res["error"]})
            continue
        stem = f"{k:04d}_{Path(res['ligand']).stem}"
        if len(results) == 1 and args.out:
            sdf_path, trace_path = Path(args.out), Path(args.trace) if args.trace else None
        else:
            base = out_dir or Path(".")
            sdf_path, trace_path = base / f"{stem}.refined.sdf", base / f"{stem}.trace.csv"
        sdf_path.write_text(res["sdf"])
        if trace_path is not None:
            with open(trace_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "energy", "best_energy"])
                for it, (e, best) in enumerate(res["trace"]):
                    w.writerow([it, repr(e), repr(best)])
        summary.append({
            "index": k, "receptor": res["receptor"], "ligand": res["ligand"], "output": str(sdf_path),
            "E_init": res["E_init"], "E_opt": res["E_opt"], "accepted": res["accepted"],
            "iterations": res["iterations"], "pose": res["pose"], "error": res["error"],
        })
    doc = {"provenance": _provenance(args, "refine"), "results": summary, "failures": failures}
    summary_path = args.summary or (out_dir / "summary.json" if out_dir else None)
    _dump(doc, summary_path)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_score(args) -> int:
    lig = parse_ligand(_read(args.ligand))
    pocket = _load_pocket(args.receptor, args.clip_radius, lig)
    br = evaluate(pocket, lig, weights=_weights(args))
    doc = br.as_dict()
    doc["provenance"] = _provenance(args, "score")
    _dump(doc, args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    lig = parse_ligand(_read(args.ligand))
    d = decompose(lig)
    doc = {
        "scaffold": sorted(d.scaffold_atoms),
        "sidechain": sorted(d.sidechain_atoms),
        "ring_systems": [sorted(r) for r in d.ring_systems],
        "linker": sorted(d.linker_atoms),
        "exocyclic": sorted(d.exocyclic_atoms),
        "dropped": sorted(d.dropped_atoms),
        "provenance": _provenance(args, "decompose"),
    }
    if args.fragments_dir:
        out = Path(args.fragments_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.ligand).stem
        for label, atoms in (("scaffold", d.scaffold_atoms), ("sidechain", d.sidechain_atoms)):
            if atoms:
                (out / f"{stem}.{label}.sdf").write_text(write_ligand(lig.subgraph(sorted(atoms))))
    _dump(doc, args.out)
    return EXIT_OK


def cmd_mask(args) -> int:
    lig = parse_ligand(_read(args.ligand))
    d = decompose(lig)
    if args.task == "random":
        m = sample_mask(d, args.seed)
    else:
        m = make_mask(d, args.task)
    doc = m.as_dict()
    doc["provenance"] = _provenance(args, "mask")
    _dump(doc, args.out)
    return EXIT_OK


def _analyze_job(job):
    receptor, ligand, tasks, clip_radius, threshold, thresholds = job
    rows, errors = [], []
    try:
        lig = parse_ligand(_read(ligand))
        pocket = _load_pocket(receptor, clip_radius, lig)
        records = classify_interactions(pocket, lig, thresholds)
        d = decompose(lig)
    except Exception as exc:
        return rows, [{"receptor": receptor, "ligand": ligand, "error": f"{type(exc).__name__}: {exc}"}]
    for task in tasks:
        try:
            s = summarize(pocket, lig, make_mask(d, task), threshold, thresholds, records)
            rows.append((receptor, ligand, s))
        except Exception as exc:
            errors.append({"receptor": receptor, "ligand": ligand, "task": task, "error": f"{type(exc).__name__}: {exc}"})
    return rows, errors


def cmd_analyze(args) -> int:
    pairs = _jobs_from(args)
    tasks = [t.strip().upper() for t in args.tasks.split(",")]
    for t in tasks:
        if t not in TASKS:
            raise UsageError(f"unknown task {t!r}")
    thresholds = dict(DEFAULT_THRESHOLDS)
    if args.thresholds:
        thresholds.update(json.loads(args.thresholds))
    jobs = [(r, l, tasks, args.clip_radius, args.threshold, thresholds) for r, l in pairs]
    results = _map(_analyze_job, jobs, args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["receptor", "ligand", "task", "n_bar", "d_bar", "t_bar", "k_bar", "context_size"])
    by_task: dict[str, list] = {t: [] for t in tasks}
    errors = []
    for rows, errs in results:
        errors.extend(errs)
        for receptor, ligand, s in rows:
            w.writerow([receptor, ligand, s.task, repr(s.n_bar), "" if s.d_bar is None else repr(s.d_bar),
                        repr(s.t_bar), repr(s.k_bar), s.context_size])
            by_task[s.task].append(s)
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    corpus = {}
    for t, summaries in by_task.items():
        est = information_density(summaries, seed=args.seed)
        corpus[t] = est.as_dict()
    doc = {"provenance": _provenance(args, "analyze"), "tasks": corpus, "errors": errors}
    if args.json:
        _dump(doc, args.json)
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_gsnr(args) -> int:
    rows = []
    with open(args.input, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh)):
            if not rec:
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if lineno == 0:
                    continue  # header
                raise UsageError(f"{args.input}: non-numeric value on line {lineno + 1}")
    res = gradient_snr(rows, window=args.window, rolling=args.rolling)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "snr", "capped", "rolling_variance"])
    for i, (s, c, v) in enumerate(zip(res.snr, res.capped, res.rolling_variance)):
        w.writerow([i, repr(float(s)), int(c), "" if np.isnan(v) else repr(float(v))])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_schedule(args) -> int:
    sched = make_schedule(args.steps, args.kind, args.beta_start, args.beta_end)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "alpha", "alpha_bar", "lambda", "gamma"])
    for row in sched.table():
        w.writerow([row[0]] + [repr(v) for v in row[1:]])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _non_negative_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ligkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of default option values (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, batch=False):
        p.add_argument("--receptor", help="receptor PDB file")
        if batch:
            p.add_argument("--ligand", nargs="+", help="ligand SDF/MOL file(s)")
            p.add_argument("--manifest", help="TSV of receptor<TAB>ligand paths")
            p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        else:
            p.add_argument("--ligand", required=True, help="ligand SDF/MOL file")
        p.add_argument("--clip-radius", type=_positive_float, default=None,
                       help="keep receptor atoms within this radius of the ligand centroid")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("refine", help="rigid-body L-BFGS pose refinement")
    common(p, batch=True)
    p.add_argument("--epochs", type=_non_negative_int, default=100, help="maximum iterations")
    p.add_argument("--step", type=_positive_float, default=0.1)
    p.add_argument("--eps", type=_positive_float, default=1e-3, help="finite-difference step")
    p.add_argument("--memory", type=int, default=5)
    p.add_argument("--central", action="store_true", help="central instead of forward differences")
    p.add_argument("--weights", help="five comma-separated term weights")
    p.add_argument("--out", help="refined SDF (single ligand)")
    p.add_argument("--trace", help="trace CSV (single ligand)")
    p.add_argument("--out-dir", help="directory for batch outputs")
    p.add_argument("--summary", help="summary JSON path (default stdout)")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("score", help="contact-energy breakdown")
    common(p)
    p.add_argument("--weights", help="five comma-separated term weights")
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("decompose", help="Murcko scaffold decomposition")
    p.add_argument("--ligand", required=True)
    p.add_argument("--fragments-dir", help="write scaffold/sidechain SDF files here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("mask", help="target/context mask for a task")
    p.add_argument("--ligand", required=True)
    p.add_argument("--task", choices=list(TASKS) + ["random"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("analyze", help="context statistics and information density")
    common(p, batch=True)
    p.add_argument("--tasks", default="SH,SC,DN")
    p.add_argument("--threshold", type=_positive_float, default=6.0, help="virtual-edge cutoff")
    p.add_argument("--thresholds", help="JSON object overriding interaction thresholds")
    p.add_argument("--csv", help="per-complex CSV path (default stdout)")
    p.add_argument("--json", help="corpus JSON path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gsnr", help="gradient signal-to-noise ratio per window")
    p.add_argument("--input", required=True, help="CSV, one flattened gradient per row")
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--rolling", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gsnr)

    p = sub.add_parser("schedule", help="print a variance schedule table")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--kind", choices=["sigmoid", "linear", "cosine"], default="sigmoid")
    p.add_argument("--beta-start", type=float, default=None)
    p.add_argument("--beta-end", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = json.loads(Path(known.config).read_text())
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            valid = {a.dest for a in sp._actions}
            sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items() if k.replace("-", "_") in valid})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ligkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"ligkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
