"""Batch evaluation: case discovery, parallel execution, reports."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import __version__
from .cache import SkeletonCache, cache_key, file_sha256
from .errors import AirtreeError
from .metrics import build_reference_skeleton, evaluate_case, write_csv
from .topology import parse_branches
from .volume import load_mask

_MASK_SUFFIXES = (".nii.gz", ".img.gz", ".nii", ".tbm")


def case_stem(path: Path) -> str | None:
    name = path.name
    lower = name.lower()
    for suf in _MASK_SUFFIXES:
        if lower.endswith(suf):
            return name[: -len(suf)]
    return None


@dataclass
class RunConfig:
    pred_dir: str = ""
    gt_dir: str = ""
    pairs_file: str | None = None
    output_dir: str = "."
    jobs: int = 1
    binarize_threshold: float = 0.0
    min_branch_mm: float = 0.0
    coverage_direction: str = "reference"
    cache_dir: str | None = None
    no_cache: bool = False
    weights: str = "mean"
    normalize: bool | None = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def snapshot(self) -> dict:
        return asdict(self)


@dataclass
class CaseStatus:
    case_id: str
    status: str  # "ok" | "error"
    message: str = ""
    seconds: float = 0.0
    pred_sha256: str = ""
    gt_sha256: str = ""


@dataclass
class RunManifest:
    version: str
    config: dict
    cases: list = field(default_factory=list)

    @property
    def counts(self) -> dict:
        ok = sum(1 for c in self.cases if c.status == "ok")
        return {"ok": ok, "error": len(self.cases) - ok}

    def to_json_dict(self) -> dict:
        return {
            "tool": "airtree",
            "version": self.version,
            "config": self.config,
            "counts": self.counts,
            "cases": [asdict(c) for c in sorted(self.cases, key=lambda c: c.case_id)],
        }


def discover_pairs(config: RunConfig) -> tuple[list[tuple[str, Path, Path]], list[CaseStatus]]:
    """Pair prediction and ground-truth files by filename stem."""
    if config.pairs_file:
        pairs, errors = [], []
        with open(config.pairs_file, newline="") as fh:
            for rec in csv.DictReader(fh):
                pairs.append((rec["case_id"], Path(rec["pred"]), Path(rec["gt"])))
        return sorted(pairs, key=lambda p: p[0]), errors

    pred_dir, gt_dir = Path(config.pred_dir), Path(config.gt_dir)
    preds = {case_stem(p): p for p in pred_dir.iterdir() if p.is_file() and case_stem(p)}
    gts = {case_stem(p): p for p in gt_dir.iterdir() if p.is_file() and case_stem(p)}
    pairs = [(stem, preds[stem], gts[stem]) for stem in sorted(preds.keys() & gts.keys())]
    errors = [
        CaseStatus(stem, "error", "unpaired prediction (no ground truth with this stem)")
        for stem in sorted(preds.keys() - gts.keys())
    ] + [
        CaseStatus(stem, "error", "missing prediction for ground truth")
        for stem in sorted(gts.keys() - preds.keys())
    ]
    return pairs, errors


def _evaluate_one(config: RunConfig, cache: SkeletonCache | None, case):
    case_id, pred_path, gt_path = case
    t0 = time.perf_counter()
    status = CaseStatus(case_id=case_id, status="ok")
    try:
        status.pred_sha256 = file_sha256(pred_path)
        status.gt_sha256 = file_sha256(gt_path)
        pred = load_mask(pred_path, config.binarize_threshold)
        gt = load_mask(gt_path, config.binarize_threshold)
        if cache is not None:
            skel = cache.skeleton_for(gt, cache_key(status.gt_sha256, config.binarize_threshold))
            skel = parse_branches(skel, gt.spacing, config.min_branch_mm)
        else:
            skel = build_reference_skeleton(gt, config.min_branch_mm)
        result = evaluate_case(
            pred,
            gt,
            case_id=case_id,
            ref_skel=skel,
            coverage_direction=config.coverage_direction,
            min_branch_mm=config.min_branch_mm,
        )
    except (AirtreeError, OSError, ValueError) as exc:
        status.status = "error"
        status.message = f"{type(exc).__name__}: {exc}"
        result = None
    status.seconds = round(time.perf_counter() - t0, 3)
    return result, status


def run_batch(config: RunConfig):
    """Evaluate every discovered pair; partial failures never abort the run.

    Returns (results, manifest, results_csv_path, manifest_path).
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(version=__version__, config=config.snapshot())

    pairs, pairing_errors = discover_pairs(config)
    manifest.cases.extend(pairing_errors)

    cache = None
    if not config.no_cache:
        cache_dir = Path(config.cache_dir) if config.cache_dir else out_dir / "skeleton-cache"
        cache = SkeletonCache(cache_dir)

    results = []
    if pairs:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for result, status in pool.map(lambda c: _evaluate_one(config, cache, c), pairs):
                manifest.cases.append(status)
                if result is not None:
                    results.append(result)

    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="") as fh:
        write_csv(results, fh)
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return results, manifest, results_path, manifest_path
