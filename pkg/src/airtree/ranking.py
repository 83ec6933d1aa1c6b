"""Team-level aggregation, scores, leaderboards, and rank stability."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

from .errors import EvaluationError

METRICS = ("TD", "BD", "DSC", "Precision", "Sen", "Spe")
SCORED_METRICS = ("TD", "BD", "DSC", "Precision")


@dataclass(frozen=True)
class ScoreWeights:
    """Non-negative weights over TD, BD, DSC and Precision."""

    w_td: float
    w_bd: float
    w_dsc: float
    w_prec: float

    def __post_init__(self):
        w = self.as_tuple()
        if any(x < 0 for x in w) or not any(x > 0 for x in w):
            raise ValueError(f"weights must be non-negative with a positive sum, got {w}")

    def as_tuple(self):
        return (self.w_td, self.w_bd, self.w_dsc, self.w_prec)

    @property
    def total(self) -> float:
        return sum(self.as_tuple())


# the two ranking presets: the equal-weight mean score, and the variant
# that leans on the topology metrics (its printed coefficients sum to
# 0.90, so that preset is normalized by default downstream)
MEAN_SCORE = ScoreWeights(0.25, 0.25, 0.25, 0.25)
TOPOLOGY_WEIGHTED = ScoreWeights(0.30, 0.30, 0.15, 0.15)

PRESETS = {"mean": MEAN_SCORE, "weighted": TOPOLOGY_WEIGHTED}
# presets whose weights do not sum to 1 get normalized unless told otherwise
PRESET_NORMALIZE = {"mean": False, "weighted": True}


@dataclass(frozen=True)
class TeamAggregate:
    """Per-team mean and population standard deviation of each metric."""

    team_id: str
    n_cases: int
    means: dict
    stds: dict
    error_cases: tuple = ()

    @property
    def rankable(self) -> bool:
        return self.n_cases > 0


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n  # population (divisor N)
    return mean, math.sqrt(var)


def aggregate(team_id: str, cases: list, error_cases=()) -> TeamAggregate:
    """Aggregate per-case metric dicts (or CaseMetrics) into team statistics."""
    rows = [c.metric_dict() if hasattr(c, "metric_dict") else c for c in cases]
    if not rows:
        return TeamAggregate(team_id, 0, {}, {}, tuple(error_cases))
    means, stds = {}, {}
    for m in METRICS:
        if m not in rows[0]:
            continue
        vals = [float(r[m]) for r in rows]
        means[m], stds[m] = _mean_std(vals)
    return TeamAggregate(team_id, len(rows), means, stds, tuple(error_cases))


def score(agg: TeamAggregate, weights: ScoreWeights, normalize: bool = False) -> float:
    """Weighted combination of the four scored metric means."""
    if not agg.rankable:
        raise EvaluationError(f"team {agg.team_id!r} has no evaluable cases")
    w = weights.as_tuple()
    s = sum(wi * agg.means[m] for wi, m in zip(w, SCORED_METRICS))
    return s / weights.total if normalize else s


@dataclass(frozen=True)
class Leaderboard:
    """Teams ordered by descending score; exact ties share a rank."""

    entries: tuple  # ((rank, team_id, score), ...)
    weights: ScoreWeights
    normalize: bool = False

    @property
    def team_order(self) -> tuple:
        return tuple(team for _, team, _ in self.entries)

    def ranks(self) -> dict:
        return {team: rank for rank, team, _ in self.entries}


def rank(teams: list[TeamAggregate], weights: ScoreWeights, normalize: bool = False) -> Leaderboard:
    rankable = [t for t in teams if t.rankable]
    if not rankable:
        raise EvaluationError("no rankable teams")
    scored = sorted(
        ((score(t, weights, normalize), t.team_id) for t in rankable),
        key=lambda st: (-st[0], st[1]),
    )
    entries = []
    for i, (s, team) in enumerate(scored):
        if i > 0 and s == entries[-1][2]:
            r = entries[-1][0]  # exact tie shares the rank, next rank skips
        else:
            r = i + 1
        entries.append((r, team, s))
    return Leaderboard(entries=tuple(entries), weights=weights, normalize=normalize)


def leaderboard_from_ranking(team_order, weights=MEAN_SCORE, scores=None) -> Leaderboard:
    """Build a board from an already-ordered team list (external rankings)."""
    entries = []
    for i, team in enumerate(team_order):
        s = float(scores[i]) if scores is not None else float(len(team_order) - i)
        entries.append((i + 1, team, s))
    return Leaderboard(entries=tuple(entries), weights=weights)


def kendall_tau(a: Leaderboard, b: Leaderboard) -> tuple[float, float]:
    """Tie-corrected rank correlation between two boards of the same teams.

    Returns (tau, p) where p comes from the normal approximation of the
    concordant-minus-discordant statistic.
    """
    teams = sorted(a.team_order)
    if teams != sorted(b.team_order):
        raise EvaluationError("leaderboards rank different team sets")
    ra, rb = a.ranks(), b.ranks()
    x = [ra[t] for t in teams]
    y = [rb[t] for t in teams]
    n = len(teams)
    if n < 2:
        raise EvaluationError("need at least two teams")

    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (x[i] - x[j]) * (y[i] - y[j])
            if s > 0:
                concordant += 1
            elif s < 0:
                discordant += 1
    s_stat = concordant - discordant

    def tie_groups(v):
        counts = {}
        for r in v:
            counts[r] = counts.get(r, 0) + 1
        return [c for c in counts.values() if c > 1]

    tx, ty = tie_groups(x), tie_groups(y)
    n0 = n * (n - 1) / 2
    n1 = sum(t * (t - 1) / 2 for t in tx)
    n2 = sum(t * (t - 1) / 2 for t in ty)
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0:
        raise EvaluationError("all ranks tied in one board; tau undefined")
    tau = s_stat / denom

    # normal approximation with tie correction for Var(S)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = sum(t * (t - 1) * (2 * t + 5) for t in tx)
    vu = sum(t * (t - 1) * (2 * t + 5) for t in ty)
    v1 = sum(t * (t - 1) for t in tx) * sum(t * (t - 1) for t in ty) / (2 * n * (n - 1))
    v2 = 0.0
    if n > 2:
        v2 = (
            sum(t * (t - 1) * (t - 2) for t in tx)
            * sum(t * (t - 1) * (t - 2) for t in ty)
            / (9 * n * (n - 1) * (n - 2))
        )
    var_s = (v0 - vt - vu) / 18 + v1 + v2
    if var_s <= 0:
        return tau, 1.0
    z = s_stat / math.sqrt(var_s)
    p = math.erfc(abs(z) / math.sqrt(2))
    return tau, p


BOARD_COLUMNS = ["rank", "team", "score"] + [
    f"{m}_{s}" for m in SCORED_METRICS for s in ("mean", "std")
]


def write_board_csv(board: Leaderboard, aggregates: dict, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(BOARD_COLUMNS)
    for r, team, s in board.entries:
        agg = aggregates.get(team)
        row = [r, team, f"{s:.3f}"]
        for m in SCORED_METRICS:
            if agg is not None and m in agg.means:
                row += [f"{agg.means[m]:.3f}", f"{agg.stds[m]:.3f}"]
            else:
                row += ["", ""]
        w.writerow(row)


def board_to_json_dict(board: Leaderboard, aggregates: dict) -> dict:
    teams = []
    for r, team, s in board.entries:
        agg = aggregates.get(team)
        rec = {"rank": r, "team": team, "score": s}
        if agg is not None:
            rec["means"] = {m: agg.means[m] for m in agg.means}
            rec["stds"] = {m: agg.stds[m] for m in agg.stds}
            rec["n_cases"] = agg.n_cases
            rec["error_cases"] = list(agg.error_cases)
        teams.append(rec)
    return {
        "weights": dict(zip(("TD", "BD", "DSC", "Precision"), board.weights.as_tuple())),
        "normalized": board.normalize,
        "teams": teams,
    }


def read_board_csv(fh) -> Leaderboard:
    entries = []
    for rec in csv.DictReader(fh):
        entries.append((int(rec["rank"]), rec["team"], float(rec["score"])))
    if not entries:
        raise EvaluationError("empty leaderboard file")
    entries.sort(key=lambda e: (e[0], e[1]))
    return Leaderboard(entries=tuple(entries), weights=MEAN_SCORE)
