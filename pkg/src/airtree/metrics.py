"""Per-case segmentation metrics.

The overlap metrics (DSC, Precision, Sen, Spe) are voxel tallies; the
topology metrics (TD, BD) measure how much of the reference centerline
the prediction covers.  All are reported as percentages and, following
the challenge convention, are computed after reducing the prediction to
its largest connected component.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError
from .topology import (
    SkeletonGraph,
    _polyline_steps,
    flat_indices,
    largest_component,
    parse_branches,
    skeletonize,
    tree_length,
)
from .volume import ConfusionCounts, VoxelMask, confusion, shape_check

CSV_COLUMNS = [
    "case_id", "TD", "BD", "DSC", "Precision", "Sen", "Spe",
    "tp", "fp", "fn", "tn", "t_det_mm", "t_ref_mm", "b_det", "b_ref",
]


def dsc(c: ConfusionCounts) -> float:
    """Dice overlap: twice the intersection over the summed mask sizes."""
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        raise EvaluationError("DSC undefined: both masks are empty")
    return 100.0 * 2 * c.tp / denom


def precision(c: ConfusionCounts) -> float:
    """Fraction of predicted voxels that are correct; 0 for an empty prediction."""
    denom = c.tp + c.fp
    if denom == 0:
        return 0.0
    return 100.0 * c.tp / denom


def sensitivity(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    if denom == 0:
        raise EvaluationError("sensitivity undefined: ground truth is empty")
    return 100.0 * c.tp / denom


def specificity(c: ConfusionCounts) -> float:
    denom = c.tn + c.fp
    if denom == 0:
        raise EvaluationError("specificity undefined: ground truth fills the grid")
    return 100.0 * c.tn / denom


@dataclass(frozen=True)
class TreeCoverage:
    """Centerline coverage of the reference tree by a prediction mask."""

    t_det: float  # detected centerline length, mm
    t_ref: float  # total reference centerline length, mm
    b_det: int  # branches with strictly more than 80% of their voxels covered
    b_ref: int
    per_branch_coverage: tuple

    @property
    def td(self) -> float:
        return 100.0 * self.t_det / self.t_ref

    @property
    def bd(self) -> float:
        return 100.0 * self.b_det / self.b_ref


# a reference branch counts as detected only when STRICTLY more than 80%
# of its own centerline voxels are inside the prediction
DETECTED_NUM, DETECTED_DEN = 4, 5


def tree_coverage(pred_lcc: VoxelMask, ref_skel: SkeletonGraph) -> TreeCoverage:
    """Coverage of a parsed reference skeleton by a (LCC-reduced) prediction."""
    if ref_skel.branches is None:
        raise EvaluationError("reference skeleton has no parsed branches")
    if not ref_skel.branches:
        raise EvaluationError("reference skeleton is empty")
    if tuple(pred_lcc.dims) != tuple(ref_skel.dims):
        raise EvaluationError(
            f"prediction grid {pred_lcc.dims} does not match skeleton grid {ref_skel.dims}"
        )
    flat = pred_lcc.flat()
    spacing = ref_skel.spacing
    t_det = 0.0
    t_ref = 0.0
    b_det = 0
    coverages = []
    for b in ref_skel.branches:
        inside = flat[flat_indices(b.path, ref_skel.dims)]
        steps = _polyline_steps(b.path, spacing)
        t_ref += float(steps.sum())
        if steps.size:
            t_det += float(steps[inside[:-1] & inside[1:]].sum())
        a, z = b.owned_slice
        own = inside[a:z]
        covered = int(own.sum())
        coverages.append(covered / own.size)
        if DETECTED_DEN * covered > DETECTED_NUM * own.size:  # exact integer 80% rule
            b_det += 1
    return TreeCoverage(
        t_det=t_det,
        t_ref=t_ref,
        b_det=b_det,
        b_ref=len(ref_skel.branches),
        per_branch_coverage=tuple(coverages),
    )


@dataclass(frozen=True)
class CaseMetrics:
    case_id: str
    td: float
    bd: float
    dsc: float
    precision: float
    sen: float
    spe: float
    confusion: ConfusionCounts
    coverage: TreeCoverage
    flags: tuple = ()

    def metric_dict(self) -> dict:
        return {
            "TD": self.td, "BD": self.bd, "DSC": self.dsc,
            "Precision": self.precision, "Sen": self.sen, "Spe": self.spe,
        }

    def to_json_dict(self) -> dict:
        c, v = self.confusion, self.coverage
        return {
            "case_id": self.case_id,
            "metrics": self.metric_dict(),
            "confusion": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn},
            "coverage": {
                "t_det_mm": v.t_det, "t_ref_mm": v.t_ref,
                "b_det": v.b_det, "b_ref": v.b_ref,
            },
            "flags": list(self.flags),
        }

    def to_csv_row(self) -> list:
        c, v = self.confusion, self.coverage
        return [
            self.case_id,
            f"{self.td:.3f}", f"{self.bd:.3f}", f"{self.dsc:.3f}",
            f"{self.precision:.3f}", f"{self.sen:.3f}", f"{self.spe:.3f}",
            c.tp, c.fp, c.fn, c.tn,
            f"{v.t_det:.3f}", f"{v.t_ref:.3f}", v.b_det, v.b_ref,
        ]


def build_reference_skeleton(gt: VoxelMask, min_branch_mm: float = 0.0) -> SkeletonGraph:
    """Skeletonize the ground truth and parse branches (the cacheable step)."""
    return parse_branches(skeletonize(gt), gt.spacing, min_branch_mm)


def evaluate_case(
    pred: VoxelMask,
    gt: VoxelMask,
    case_id: str = "",
    ref_skel: SkeletonGraph | None = None,
    coverage_direction: str = "reference",
    min_branch_mm: float = 0.0,
) -> CaseMetrics:
    """Evaluate one prediction/ground-truth pair.

    Pipeline: reduce the prediction to its largest component, tally the
    confusion counts against the ground truth, then measure centerline
    coverage of the reference skeleton (computed here unless a cached one
    is passed in).  ``coverage_direction="prediction"`` instead
    skeletonizes the prediction and measures its coverage by the ground
    truth; that reading is unbounded and off by default.
    """
    shape_check(gt, pred)
    if coverage_direction not in ("reference", "prediction"):
        raise ValueError(f"unknown coverage direction {coverage_direction!r}")

    flags = []
    pred_lcc = largest_component(pred)
    conf = confusion(pred_lcc, gt)
    if conf.tp + conf.fp == 0:
        flags.append("empty_prediction")

    dsc_v = dsc(conf)
    prec_v = precision(conf)
    sen_v = sensitivity(conf)
    spe_v = specificity(conf)

    if ref_skel is None:
        ref_skel = build_reference_skeleton(gt, min_branch_mm)
    if ref_skel.branches is None:
        ref_skel = parse_branches(ref_skel, gt.spacing, min_branch_mm)

    if coverage_direction == "reference":
        cov = tree_coverage(pred_lcc, ref_skel)
        td_v, bd_v = cov.td, cov.bd
    else:
        # prose reading: branches detected in the prediction, centerlines
        # checked against the ground truth; denominators stay reference-side
        if not ref_skel.branches:
            raise EvaluationError("reference skeleton is empty")
        pred_skel = parse_branches(skeletonize(pred_lcc), gt.spacing, min_branch_mm)
        t_ref = tree_length(ref_skel)
        if not pred_skel.branches:
            cov = TreeCoverage(0.0, t_ref, 0, len(ref_skel.branches), ())
        else:
            onto_gt = tree_coverage(gt, pred_skel)
            cov = TreeCoverage(
                t_det=onto_gt.t_det,
                t_ref=t_ref,
                b_det=onto_gt.b_det,
                b_ref=len(ref_skel.branches),
                per_branch_coverage=onto_gt.per_branch_coverage,
            )
        td_v = 100.0 * cov.t_det / cov.t_ref
        bd_v = 100.0 * cov.b_det / cov.b_ref
        flags.append("coverage_direction=prediction")

    return CaseMetrics(
        case_id=case_id,
        td=td_v,
        bd=bd_v,
        dsc=dsc_v,
        precision=prec_v,
        sen=sen_v,
        spe=spe_v,
        confusion=conf,
        coverage=cov,
        flags=tuple(flags),
    )


def write_csv(cases: list, fh) -> None:
    """Write CaseMetrics rows (sorted by case id) as the standard CSV."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cm in sorted(cases, key=lambda c: c.case_id):
        w.writerow(cm.to_csv_row())


def cases_to_csv_text(cases: list) -> str:
    buf = io.StringIO()
    write_csv(cases, buf)
    return buf.getvalue()


def read_csv_rows(fh) -> list[dict]:
    """Read rows written by write_csv back into plain dicts of floats/ints."""
    rows = []
    for rec in csv.DictReader(fh):
        row = {"case_id": rec["case_id"]}
        for k in ("TD", "BD", "DSC", "Precision", "Sen", "Spe", "t_det_mm", "t_ref_mm"):
            row[k] = float(rec[k])
        for k in ("tp", "fp", "fn", "tn", "b_det", "b_ref"):
            row[k] = int(rec[k])
        rows.append(row)
    return rows


def case_to_json_text(case: CaseMetrics) -> str:
    return json.dumps(case.to_json_dict(), indent=2, sort_keys=True)
