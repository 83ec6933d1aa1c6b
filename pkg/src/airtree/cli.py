"""Command-line interface.

Subcommands: eval, batch, leaderboard, rank-stability, phantom,
skeletonize.  Exit codes: 0 success, 1 usage error, 2 evaluation or
data error.  Option precedence is flags > config file > defaults; the
AIRTREE_JOBS environment variable sets the worker count when no flag
is given.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import AirtreeError
from .metrics import case_to_json_text, evaluate_case, read_csv_rows
from .phantom import PhantomSpec, degrade, generate
from .ranking import (
    PRESET_NORMALIZE,
    PRESETS,
    ScoreWeights,
    aggregate,
    board_to_json_dict,
    kendall_tau,
    rank,
    read_board_csv,
    write_board_csv,
)
from .runner import RunConfig, run_batch
from .topology import parse_branches, skeletonize, tree_length
from .volume import Spacing, load_mask, save_mask

log = logging.getLogger("airtree")

USAGE_ERROR, DATA_ERROR = 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _metric_table(case) -> str:
    header = f"{'case':<20}{'TD':>10}{'BD':>10}{'DSC':>10}{'Precision':>12}{'Sen':>10}{'Spe':>10}"
    row = (
        f"{case.case_id or '-':<20}"
        f"{case.td:>10.3f}{case.bd:>10.3f}{case.dsc:>10.3f}"
        f"{case.precision:>12.3f}{case.sen:>10.3f}{case.spe:>10.3f}"
    )
    return header + "\n" + row


def _parse_weights(text: str) -> tuple[ScoreWeights, bool]:
    if text in PRESETS:
        return PRESETS[text], PRESET_NORMALIZE[text]
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise AirtreeError(f"weights need 4 comma-separated values or a preset name, got {text!r}")
    return ScoreWeights(*parts), False


def _load_config_file(path: str | None, section: str) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise AirtreeError(f"cannot read config file {path}")
    out: dict[str, str] = dict(parser.defaults())
    if parser.has_section(section):
        out.update(dict(parser.items(section)))
    return out


def _resolve(flag, cfg: dict, key: str, default, cast=str):
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    return default


def _resolve_jobs(flag, cfg: dict) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("AIRTREE_JOBS")
    if env:
        return int(env)
    if "jobs" in cfg:
        return int(cfg["jobs"])
    return 1


def cmd_eval(args) -> int:
    pred = load_mask(args.pred, args.binarize_threshold)
    gt = load_mask(args.gt, args.binarize_threshold)
    case = evaluate_case(
        pred,
        gt,
        case_id=Path(args.pred).name,
        coverage_direction=args.coverage_direction,
        min_branch_mm=args.min_branch_mm,
    )
    print(_metric_table(case))
    if args.json:
        Path(args.json).write_text(case_to_json_text(case) + "\n")
    return 0


def cmd_batch(args) -> int:
    cfg = _load_config_file(args.config, "batch")
    config = RunConfig(
        pred_dir=args.pred,
        gt_dir=args.gt,
        pairs_file=args.pairs,
        output_dir=args.out,
        jobs=_resolve_jobs(args.jobs, cfg),
        binarize_threshold=_resolve(args.binarize_threshold, cfg, "binarize_threshold", 0.0, float),
        min_branch_mm=_resolve(args.min_branch_mm, cfg, "min_branch_mm", 0.0, float),
        coverage_direction=_resolve(args.coverage_direction, cfg, "coverage_direction", "reference"),
        cache_dir=_resolve(args.cache_dir, cfg, "cache_dir", None),
        no_cache=args.no_cache or cfg.get("no_cache", "").lower() in ("1", "true", "yes"),
    )
    results, manifest, results_path, manifest_path = run_batch(config)
    counts = manifest.counts
    print(f"evaluated {counts['ok']} case(s), {counts['error']} error(s)")
    print(f"results:  {results_path}")
    print(f"manifest: {manifest_path}")
    if counts["ok"] + counts["error"] == 0:
        print("no cases found", file=sys.stderr)
        return DATA_ERROR
    return 0 if counts["error"] == 0 else DATA_ERROR


def _read_team_rows(results: str) -> dict[str, list[dict]]:
    path = Path(results)
    teams: dict[str, list[dict]] = {}
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".csv")
        if not files:
            raise AirtreeError(f"no per-team CSV files in {path}")
        for f in files:
            with open(f, newline="") as fh:
                teams[f.stem] = read_csv_rows(fh)
    else:
        import csv as _csv

        with open(path, newline="") as fh:
            reader = _csv.DictReader(fh)
            if reader.fieldnames is None or "team" not in reader.fieldnames:
                raise AirtreeError(f"{path}: combined CSV needs a 'team' column")
            for rec in reader:
                row = {k: float(rec[k]) for k in ("TD", "BD", "DSC", "Precision", "Sen", "Spe") if k in rec}
                teams.setdefault(rec["team"], []).append(row)
    return teams


def cmd_leaderboard(args) -> int:
    weights, preset_norm = _parse_weights(args.weights)
    normalize = preset_norm if args.normalize is None else args.normalize
    team_rows = _read_team_rows(args.results)
    aggregates = {team: aggregate(team, rows) for team, rows in team_rows.items()}
    board = rank(list(aggregates.values()), weights, normalize)
    with open(args.out, "w", newline="") as fh:
        write_board_csv(board, aggregates, fh)
    print(f"board: {args.out}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(board_to_json_dict(board, aggregates), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.plot_data:
        arrays = {
            m: {team: [r[m] for r in rows if m in r] for team, rows in sorted(team_rows.items())}
            for m in ("TD", "BD", "DSC", "Precision", "Sen", "Spe")
        }
        with open(args.plot_data, "w") as fh:
            json.dump(arrays, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_rank_stability(args) -> int:
    with open(args.board_a, newline="") as fh:
        a = read_board_csv(fh)
    with open(args.board_b, newline="") as fh:
        b = read_board_csv(fh)
    tau, p = kendall_tau(a, b)
    print(f"tau = {tau:.3g}")
    print(f"p = {p:.3g}")
    return 0


def cmd_phantom(args) -> int:
    dims = tuple(int(v) for v in args.grid.split(","))
    if len(dims) == 1:
        dims = dims * 3
    sp = tuple(float(v) for v in args.spacing.split(","))
    if len(sp) == 1:
        sp = sp * 3
    lengths = [float(v) for v in args.segment_length.split(",")]
    spec = PhantomSpec(
        depth=args.depth,
        root_radius_vox=args.root_radius,
        radius_decay=args.radius_decay,
        segment_length_vox=lengths[0] if len(lengths) == 1 else tuple(lengths),
        branching_angle_deg=args.angle,
        dims=dims,
        spacing=Spacing(*sp),
        rng_seed=args.seed,
    )
    truth = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mask_path = out / f"{args.name}.{args.format}"
    save_mask(truth.mask, mask_path)
    truth.write_truth_json(out / f"{args.name}.truth.json")
    print(f"mask:  {mask_path}")
    print(f"truth: {out / (args.name + '.truth.json')}")
    if args.degrade:
        params = {}
        if args.branch_id is not None:
            params["branch_id"] = args.branch_id
        if args.gap_vox is not None:
            params["gap_vox"] = args.gap_vox
        if args.size_vox is not None:
            params["size_vox"] = args.size_vox
        if args.steps is not None:
            params["steps"] = args.steps
        degraded = degrade(truth, args.degrade, **params)
        pred_path = out / f"{args.name}.{args.degrade}.{args.format}"
        save_mask(degraded, pred_path)
        print(f"degraded: {pred_path}")
    return 0


def cmd_skeletonize(args) -> int:
    mask = load_mask(args.mask, args.binarize_threshold)
    skel = parse_branches(skeletonize(mask), mask.spacing, args.min_branch_mm)
    with open(args.out, "w") as fh:
        json.dump(skel.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"skeleton: {args.out} ({skel.n_voxels} voxels, "
          f"{len(skel.branches)} branches, {tree_length(skel):.3f} mm)")
    if args.mask_out:
        save_mask(skel.to_mask(), args.mask_out)
        print(f"skeleton mask: {args.mask_out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="airtree", description=__doc__)
    parser.add_argument("--version", action="version", version=f"airtree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate one prediction against one ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--json", help="also write the metrics as JSON to this path")
    p.add_argument("--binarize-threshold", type=float, default=0.0)
    p.add_argument("--min-branch-mm", type=float, default=0.0)
    p.add_argument("--coverage-direction", choices=("reference", "prediction"), default="reference")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("batch", help="evaluate a directory of prediction/ground-truth pairs")
    p.add_argument("--pred", required=True, help="directory of prediction masks")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pairs", help="explicit pairs.csv (case_id,pred,gt) overriding stem pairing")
    p.add_argument("--jobs", type=int, help="concurrent cases (default 1; env AIRTREE_JOBS)")
    p.add_argument("--config", help="INI config file ([batch] section)")
    p.add_argument("--binarize-threshold", type=float)
    p.add_argument("--min-branch-mm", type=float)
    p.add_argument("--coverage-direction", choices=("reference", "prediction"))
    p.add_argument("--cache-dir")
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("leaderboard", help="rank teams from per-case result CSVs")
    p.add_argument("--results", required=True, help="directory of per-team CSVs, or combined CSV with a team column")
    p.add_argument("--out", required=True, help="board CSV path")
    p.add_argument("--json", help="also write the board as JSON")
    p.add_argument("--weights", default="mean", help="'mean', 'weighted', or four comma-separated values")
    norm = p.add_mutually_exclusive_group()
    norm.add_argument("--normalize", dest="normalize", action="store_true", default=None)
    norm.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.add_argument("--plot-data", help="write per-team metric arrays as JSON for external plotting")
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("rank-stability", help="Kendall tau between two leaderboards")
    p.add_argument("board_a")
    p.add_argument("board_b")
    p.set_defaults(func=cmd_rank_stability)

    p = sub.add_parser("phantom", help="generate a synthetic tree with exact truth")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default="phantom")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default="160,160,160")
    p.add_argument("--spacing", default="1,1,1")
    p.add_argument("--root-radius", type=float, default=3.0)
    p.add_argument("--radius-decay", type=float, default=0.8)
    p.add_argument("--segment-length", default="22")
    p.add_argument("--angle", type=float, default=70.0)
    p.add_argument("--format", choices=("tbm", "nii", "nii.gz"), default="tbm")
    p.add_argument("--degrade", choices=("erase_subtree", "break_branch", "dilate", "noise_blob"))
    p.add_argument("--branch-id", type=int)
    p.add_argument("--gap-vox", type=float)
    p.add_argument("--size-vox", type=int)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("skeletonize", help="extract and export a mask's centerline")
    p.add_argument("mask")
    p.add_argument("--out", required=True, help="skeleton JSON path")
    p.add_argument("--mask-out", help="also save the skeleton as a volume")
    p.add_argument("--binarize-threshold", type=float, default=0.0)
    p.add_argument("--min-branch-mm", type=float, default=0.0)
    p.set_defaults(func=cmd_skeletonize)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AirtreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
