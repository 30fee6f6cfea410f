"""Command-line front end for filtering, scoring, ranking, and diagnostics.

Subcommands
-----------
filter     apply one spatial filter to GRID1 fields, with a JSON sidecar
           recording the post-filter pixel sum
score      evaluate loss configs as metrics over matched prediction and
           observation files; one CSV row per (model, config)
eval       reliability + performance diagnostics with bootstrap intervals,
           written as a JSON + CSV report
rank       orientation-aware ranks from a scores CSV: rank matrix,
           per-filter summary, and per-filter winners
gradcheck  finite-difference verification of every config's analytic
           gradient on random fields
synth      deterministic synthetic event masks and forecast fields

All randomness is seeded (``--seed``); outputs are written atomically and
carry no timestamps, so a repeated invocation is byte-identical.  Exit
codes: 0 success, 1 validation/usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .evaluation import (attributes_diagram, atomic_write_text, bootstrap_ci,
                         consistency_bars, emit_report, paired_bootstrap_test,
                         performance_diagram)
from .fourier import NumericError
from .grid import GridField, read_grid, write_grid
from .losses import (apply_filter, enumerate_configs, grad_check, metric_table,
                     parse_filter_id, parse_spec_id, prepare_target)
from .ranking import (MetricMatrix, best_per_filter, filter_mean_ranks,
                      overall_mean_ranks, rank_models)
from .synthetic import SynthSpec, synth_mask, synth_prob


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (validation) on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _expand_paths(text: str) -> list[str]:
    """Comma-separated paths/globs -> sorted concrete path list."""
    out: list[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        hits = sorted(globmod.glob(part))
        out.extend(hits if hits else [part])
    return out


def _read_fields(paths: list[str]) -> list[GridField]:
    return [read_grid(p) for p in paths]


def _float_cell(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# filter

def cmd_filter(args) -> int:
    fspec = parse_filter_id(args.spec)
    if args.out_dir is None:
        if len(args.paths) != 2:
            raise ValueError("without --out-dir, give exactly one input and one output path")
        inputs = _expand_paths(args.paths[0])
        if len(inputs) != 1:
            raise ValueError("input glob matched more than one file; use --out-dir")
        pairs = [(inputs[0], args.paths[1])]
    else:
        inputs = []
        for text in args.paths:
            inputs.extend(_expand_paths(text))
        os.makedirs(args.out_dir, exist_ok=True)
        pairs = [(p, os.path.join(args.out_dir, os.path.basename(p))) for p in inputs]
    if args.dump_stages is not None and len(pairs) != 1:
        raise ValueError("--dump-stages needs exactly one input field")

    def run_one(pair: tuple[str, str]) -> None:
        src, dst = pair
        field = read_grid(src)
        if args.dump_stages is not None:
            out, stages = apply_filter(field, fspec, return_stages=True)
            os.makedirs(args.dump_stages, exist_ok=True)
            for name, stage in stages.items():
                if isinstance(stage, np.ndarray) and stage.ndim == 2:
                    stage_field = GridField(np.ascontiguousarray(stage, dtype=np.float64),
                                            field.spacing_deg, "real")
                    write_grid(os.path.join(args.dump_stages, f"{name}.grid"), stage_field)
        else:
            out = apply_filter(field, fspec)
        write_grid(dst, out)
        sidecar = {
            "filter_id": fspec.filter_id,
            "input": src,
            "rows": out.rows,
            "cols": out.cols,
            "spacing_deg": out.spacing_deg,
            "pixel_sum": float(out.values.sum()),
        }
        atomic_write_text(dst + ".json", json.dumps(sidecar, indent=2) + "\n")

    if args.jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(run_one, pairs))
    else:
        for pair in pairs:
            run_one(pair)
    print(f"filtered {len(pairs)} field(s) with {fspec.filter_id}")
    return 0


# ---------------------------------------------------------------------------
# score

def _parse_model_args(pred_args: list[str]) -> list[tuple[str, list[str]]]:
    models = []
    for text in pred_args:
        if "=" in text:
            name, paths = text.split("=", 1)
            name = name.strip()
        elif len(pred_args) == 1:
            name, paths = "model", text
        else:
            raise ValueError("with multiple --pred entries each needs a NAME= prefix")
        if not name:
            raise ValueError("empty model name in --pred")
        models.append((name, _expand_paths(paths)))
    if len({m for m, _ in models}) != len(models):
        raise ValueError("duplicate model names in --pred")
    return models


def cmd_score(args) -> int:
    if args.all_336:
        specs = enumerate_configs()
    elif args.specs:
        specs = [parse_spec_id(s) for s in args.specs.split(",") if s.strip()]
    else:
        raise ValueError("give --specs or --all-336")
    specs = sorted(specs, key=lambda s: s.spec_id)
    models = _parse_model_args(args.pred)
    obs_paths = _expand_paths(args.obs)
    obs_fields = _read_fields(obs_paths)
    for name, paths in models:
        if len(paths) != len(obs_paths):
            raise ValueError(f"model {name!r} has {len(paths)} fields but "
                             f"there are {len(obs_paths)} observations")

    model_paths = dict(models)

    def step_table(task: tuple[str, int]) -> dict:
        name, i = task
        pred = read_grid(model_paths[name][i])
        return metric_table(specs, pred, obs_fields[i])

    tasks = [(name, i) for name, paths in models for i in range(len(obs_paths))]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            tables = list(pool.map(step_table, tasks))
    else:
        tables = [step_table(t) for t in tasks]

    rows = []
    for name, paths in models:
        per_model = [tbl for (mname, _), tbl in zip(tasks, tables) if mname == name]
        for spec in specs:
            values = [tbl[spec.spec_id].value for tbl in per_model]
            flags = sorted({f for tbl in per_model for f in tbl[spec.spec_id].fallbacks})
            rows.append([name, spec.spec_id, _float_cell(float(np.mean(values))),
                         ";".join(flags)])
    rows.sort(key=lambda r: (r[0], r[1]))
    out_lines = [["model", "spec_id", "value", "fallbacks"]] + rows
    buf = []
    for row in out_lines:
        buf.append(",".join(row))
    atomic_write_text(args.out, "\n".join(buf) + "\n")
    print(f"wrote {len(rows)} rows ({len(models)} model(s) x {len(specs)} configs) "
          f"to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# eval

def _step_brier_parts(pred: GridField, obs: GridField) -> tuple[float, float, float]:
    """(sum squared error, sum of events, scored pixel count) for one step."""
    w = np.ones(pred.shape, dtype=bool)
    if pred.eval_mask is not None:
        w &= pred.eval_mask
    if obs.eval_mask is not None:
        w &= obs.eval_mask
    pv, yv = pred.values[w], obs.values[w]
    return float(np.sum((pv - yv) ** 2)), float(np.sum(yv)), float(pv.size)


def _pooled_bs(parts: list[tuple[float, float, float]]) -> float:
    sse = sum(p[0] for p in parts)
    n = sum(p[2] for p in parts)
    return sse / n


def _pooled_bss(parts: list[tuple[float, float, float]]) -> float:
    sse = sum(p[0] for p in parts)
    events = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    base = events / n
    bs_clim = base * (1.0 - base)  # mean((base - y)^2) for binary y
    if bs_clim == 0.0:
        return 0.0
    return 1.0 - (sse / n) / bs_clim


def cmd_eval(args) -> int:
    pred_paths = _expand_paths(args.pred)
    obs_paths = _expand_paths(args.obs)
    if len(pred_paths) != len(obs_paths):
        raise ValueError(f"{len(pred_paths)} prediction files vs {len(obs_paths)} observations")
    preds = _read_fields(pred_paths)
    obs = _read_fields(obs_paths)

    attr = attributes_diagram(preds, obs)
    consistency_bars(attr, n_boot=args.n_boot_bars, seed=args.seed)
    perf = performance_diagram(preds, obs, np.linspace(0.0, 1.0, args.thresholds))

    parts = [_step_brier_parts(p, y) for p, y in zip(preds, obs)]
    bs_ci = bootstrap_ci(_pooled_bs, parts, n_boot=args.n_boot, seed=args.seed)
    bss_ci = bootstrap_ci(_pooled_bss, parts, n_boot=args.n_boot, seed=args.seed)
    extra = {"bootstrap": {
        "n_boot": args.n_boot, "seed": args.seed, "statistic_unit": "time step",
        "bs": {"point": bs_ci[0], "lo": bs_ci[1], "hi": bs_ci[2]},
        "bss": {"point": bss_ci[0], "lo": bss_ci[1], "hi": bss_ci[2]},
    }}

    if args.compare is not None:
        cmp_paths = _expand_paths(args.compare)
        if len(cmp_paths) != len(obs_paths):
            raise ValueError("--compare file count does not match observations")
        cmp_parts = [_step_brier_parts(read_grid(p), y) for p, y in zip(cmp_paths, obs)]
        paired = [(a, b) for a, b in zip(parts, cmp_parts)]
        result = paired_bootstrap_test(
            lambda s: _pooled_bs([a for a, _ in s]),
            lambda s: _pooled_bs([b for _, b in s]),
            paired, n_boot=args.n_boot, seed=args.seed)
        extra["compare"] = {
            "statistic": "pooled brier score", "diff": result.diff,
            "p_value": result.p_value, "significant_95": result.significant_95,
        }
        verdict = "significant" if result.significant_95 else "not significant"
        print(f"compare: diff={result.diff:.6g} p={result.p_value:.3f} ({verdict} at 95%)")

    json_path, csv_path = emit_report(attr, perf, args.out_dir, extra_sections=extra)
    print(f"BSS={attr.bss:.4f} REL={attr.rel:.6f} AUPD={perf.aupd:.4f}")
    print(f"wrote {json_path} and {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# rank

def cmd_rank(args) -> int:
    with open(args.scores, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"model", "spec_id", "value"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValueError(f"scores CSV must have columns {sorted(needed)}")
        cells: dict[tuple[str, str], float] = {}
        for rec in reader:
            key = (rec["model"], rec["spec_id"])
            if key in cells:
                raise ValueError(f"duplicate row for model={key[0]!r} spec={key[1]!r}")
            cells[key] = float(rec["value"])
    model_names = sorted({m for m, _ in cells})
    spec_ids = sorted({s for _, s in cells})
    if not cells:
        raise ValueError("scores CSV is empty")
    values = np.empty((len(model_names), len(spec_ids)))
    for i, m in enumerate(model_names):
        for j, s in enumerate(spec_ids):
            if (m, s) not in cells:
                raise ValueError(f"missing value for model={m!r} spec={s!r}")
            values[i, j] = cells[(m, s)]
    matrix = MetricMatrix(tuple(model_names), tuple(parse_spec_id(s) for s in spec_ids),
                          values)
    ranks = rank_models(matrix)
    fids, means = filter_mean_ranks(matrix, ranks)
    winners = best_per_filter(matrix)
    overall = overall_mean_ranks(matrix, ranks)

    os.makedirs(args.out_dir, exist_ok=True)

    def write_csv(name: str, header: list[str], rows: list[list[str]]) -> str:
        path = os.path.join(args.out_dir, name)
        lines = [",".join(header)] + [",".join(r) for r in rows]
        atomic_write_text(path, "\n".join(lines) + "\n")
        return path

    write_csv("ranks.csv", ["model"] + [s.spec_id for s in matrix.specs],
              [[m] + [_float_cell(ranks[i, j]) for j in range(len(spec_ids))]
               for i, m in enumerate(matrix.models)])
    write_csv("filter_summary.csv", ["model"] + list(fids),
              [[m] + [_float_cell(means[i, k]) for k in range(len(fids))]
               for i, m in enumerate(matrix.models)])
    write_csv("winners.csv", ["filter_id", "model", "mean_rank"],
              [[w.filter_id, w.model, _float_cell(w.mean_rank)] for w in winners])

    order = np.argsort(overall, kind="stable")
    top = ", ".join(f"{matrix.models[i]} ({overall[i]:.2f})" for i in order[:3])
    print(f"ranked {len(model_names)} models over {len(spec_ids)} configs; "
          f"best mean ranks: {top}")
    print(f"wrote ranks.csv, filter_summary.csv, winners.csv to {args.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# gradcheck

def cmd_gradcheck(args) -> int:
    if args.specs is None:
        specs = enumerate_configs()
    else:
        specs = [parse_spec_id(s) for s in args.specs.split(",") if s.strip()]
    specs = sorted(specs, key=lambda s: s.spec_id)
    rng = np.random.default_rng(args.seed)
    shape = (args.rows, args.cols)
    # Keep clear of the cross-entropy clamp so its exclusion set is empty.
    p = GridField(rng.uniform(0.01, 0.99, size=shape), args.spacing, "prob")
    y = GridField((rng.uniform(size=shape) < 0.3).astype(np.float64), args.spacing, "mask")

    targets = {}
    failures = 0
    print(f"{'spec':<24} {'checked':>8} {'excluded':>9} {'max_rel':>12}  status")
    for spec in specs:
        if spec.filter_id not in targets:
            targets[spec.filter_id] = prepare_target(spec, y)
        report = grad_check(spec, p, targets[spec.filter_id], step=args.step)
        ok = report.passed(rel_tol=args.tol)
        failures += 0 if ok else 1
        print(f"{report.spec_id:<24} {report.n_checked:>8} {report.n_excluded:>9} "
              f"{report.max_rel_diff:>12.3e}  {'ok' if ok else 'FAIL'}")
        if len(specs) == 1:
            print(f"worst pixel: {report.worst_pixel} "
                  f"(max abs diff {report.max_abs_diff:.3e})")
    if failures:
        print(f"{failures} of {len(specs)} configs exceeded rel tol {args.tol}",
              file=sys.stderr)
        return 2
    print(f"all {len(specs)} configs within rel tol {args.tol}")
    return 0


# ---------------------------------------------------------------------------
# synth

def _parse_pair(text: str, caster, what: str) -> tuple:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"{what} must be two comma-separated values, got {text!r}")
    return caster(parts[0]), caster(parts[1])


def cmd_synth(args) -> int:
    radius = _parse_pair(args.radius_range, float, "--radius-range")
    elong = _parse_pair(args.elongation_range, float, "--elongation-range")
    offset = _parse_pair(args.offset, int, "--offset")
    if args.count == 1 and args.out_mask is None:
        raise ValueError("give --out-mask (or --count with --out-dir)")
    if args.count > 1 and args.out_dir is None:
        raise ValueError("--count needs --out-dir")

    for i in range(args.count):
        spec = SynthSpec(rows=args.rows, cols=args.cols, spacing_deg=args.spacing,
                         n_cells=args.n_cells, radius_range=radius,
                         elongation_range=elong, seed=args.seed + i)
        mask = synth_mask(spec)
        if args.count == 1:
            mask_path, prob_path = args.out_mask, args.out_prob
        else:
            os.makedirs(args.out_dir, exist_ok=True)
            mask_path = os.path.join(args.out_dir, f"mask_{i:03d}.grid")
            prob_path = os.path.join(args.out_dir, f"prob_{i:03d}.grid")
        write_grid(mask_path, mask)
        fraction = float(mask.values.mean())
        print(f"{mask_path}: event_fraction={fraction:.6f}")
        if prob_path is not None:
            prob = synth_prob(mask, blur_r=args.blur_r, offset_px=offset,
                              noise_sd=args.noise_sd, seed=spec.seed + 1)
            write_grid(prob_path, prob)
    return 0


# ---------------------------------------------------------------------------
# parser wiring

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selfscore",
                     description="Spatial filtering, scoring, and verification "
                                 "of gridded binary-event forecasts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "filter", parents=[], help="apply one spatial filter to GRID1 fields",
        description="Apply a neighbourhood or spectral filter to GRID1 fields. "
                    "Writes the filtered field plus a .json sidecar with the "
                    "post-filter pixel sum.")
    p.add_argument("--spec", required=True,
                   help="filter id: nbhd_max_r<k>, nbhd_mean_r<k>, F<lo>-<hi>, W<lo>-<hi>")
    p.add_argument("paths", nargs="+",
                   help="IN OUT for a single field, or inputs/globs with --out-dir")
    p.add_argument("--out-dir", default=None, help="write outputs here, one per input")
    p.add_argument("--dump-stages", default=None, metavar="DIR",
                   help="also write each pipeline stage as a GRID1 field (single input only)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for many files")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser(
        "score", help="evaluate loss configs as metrics over field pairs",
        description="Score model predictions against observations under the "
                    "selected configs; values are averaged over time steps. "
                    "One CSV row per (model, config), sorted.")
    p.add_argument("--pred", action="append", required=True, metavar="NAME=PATHS",
                   help="prediction files/globs for one model (repeatable)")
    p.add_argument("--obs", required=True, help="observation mask files/globs")
    p.add_argument("--specs", default=None, help="comma-separated spec ids")
    p.add_argument("--all-336", action="store_true", dest="all_336",
                   help="use the full 336-config census")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over (model, step)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser(
        "eval", help="reliability and performance diagnostics report",
        description="Attributes-diagram and performance-diagram data with "
                    "bootstrap intervals, written as JSON + CSV.")
    p.add_argument("--pred", required=True, help="prediction files/globs")
    p.add_argument("--obs", required=True, help="observation mask files/globs")
    p.add_argument("--out-dir", required=True, help="report output directory")
    p.add_argument("--thresholds", type=int, default=101,
                   help="number of probability thresholds (default 101)")
    p.add_argument("--n-boot", type=int, default=1000, dest="n_boot",
                   help="bootstrap resamples for confidence intervals")
    p.add_argument("--n-boot-bars", type=int, default=100, dest="n_boot_bars",
                   help="resamples for reliability consistency bars")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare", default=None, metavar="PATHS",
                   help="second model's prediction files: paired bootstrap test on "
                        "the pooled Brier score")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "rank", help="rank models from a scores CSV",
        description="Orientation-aware ranking: per-config ranks, mean rank "
                    "per filter, and the winning model under each filter.")
    p.add_argument("--scores", required=True, help="CSV from the score subcommand")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser(
        "gradcheck", help="verify analytic gradients by finite differences",
        description="Compare every config's analytic gradient against central "
                    "finite differences on a random field; exits 2 if any "
                    "config exceeds the tolerance away from documented "
                    "non-smooth points.")
    p.add_argument("--specs", default=None,
                   help="comma-separated spec ids (default: all 336)")
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--spacing", type=float, default=0.02, help="grid spacing in degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--tol", type=float, default=1e-5, help="relative tolerance")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser(
        "synth", help="generate synthetic masks and forecasts",
        description="Deterministic synthetic event masks (union of random "
                    "elliptical cells) and optional derived forecast fields "
                    "(translate + blur + noise).")
    p.add_argument("--rows", type=int, default=205)
    p.add_argument("--cols", type=int, default=205)
    p.add_argument("--spacing", type=float, default=0.02, help="grid spacing in degrees")
    p.add_argument("--n-cells", type=int, default=12, dest="n_cells")
    p.add_argument("--radius-range", default="2,6", dest="radius_range")
    p.add_argument("--elongation-range", default="1,3", dest="elongation_range")
    p.add_argument("--seed", type=int, default=0,
                   help="mask seed; step i uses seed+i, noise uses seed+i+1")
    p.add_argument("--count", type=int, default=1,
                   help="generate this many time steps into --out-dir")
    p.add_argument("--out-mask", default=None, help="mask output path (count=1)")
    p.add_argument("--out-prob", default=None, help="forecast output path (count=1)")
    p.add_argument("--out-dir", default=None, help="output directory (count>1)")
    p.add_argument("--blur-r", type=int, default=0, dest="blur_r",
                   help="mean-filter half-width for the forecast")
    p.add_argument("--offset", default="0,0", help="forecast translation, pixels: dr,dc")
    p.add_argument("--noise-sd", type=float, default=0.0, dest="noise_sd")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
