"""Selection metrics: SA, FAR, SR and study-table bookkeeping.

Three percentages summarize a scored trial set:

* selection accuracy   SA  = 100 * TP / (TP + FN)
* false alarm rate     FAR = 100 * FP / (TP + FP)
* success rate         SR  = 100 * SA / (SA + FAR)

All math runs in full precision; only display formatting rounds, matching
the precision conventions of the bundled study table (SA as an integer,
FAR and SR to one decimal).  The bundled 12-user counts table ships with
the package and ``check_published_rows`` recomputes it, flagging rows whose
printed values cannot be reproduced from their own counts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from math import ceil
from typing import List, Optional, Sequence, Tuple

__all__ = [
    "EmptyDenominator",
    "EmptyInput",
    "TrialOutcome",
    "MetricsSummary",
    "selection_accuracy",
    "false_alarm_rate",
    "success_rate",
    "summarize",
    "aggregate",
    "display_sa",
    "display_rate",
    "PublishedRow",
    "RowCheck",
    "load_counts_csv",
    "bundled_counts_path",
    "check_published_rows",
    "published_aggregate",
]


class EmptyDenominator(ZeroDivisionError):
    """Metric requested over an empty attempt set."""


class EmptyInput(ValueError):
    """Aggregate of zero users."""


@dataclass(frozen=True)
class TrialOutcome:
    """Counts over a scored trial set plus the total selection time."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    selection_time_s: float = 0.0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def scored(self) -> int:
        return self.tp + self.fp + self.fn

    def merged(self, other: "TrialOutcome") -> "TrialOutcome":
        return TrialOutcome(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            selection_time_s=self.selection_time_s + other.selection_time_s,
        )


@dataclass(frozen=True)
class MetricsSummary:
    sa_pct: float
    far_pct: float
    sr_pct: float
    avg_selection_time_s: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("sa_pct", "far_pct", "sr_pct"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"{name}={v} outside 0..100")


def selection_accuracy(tp: int, fn: int) -> float:
    """Percent of wanted objects actually selected."""
    if tp + fn <= 0:
        raise EmptyDenominator("selection accuracy needs tp + fn > 0")
    return 100.0 * tp / (tp + fn)


def false_alarm_rate(tp: int, fp: int) -> float:
    """Percent of performed selections that were wrong."""
    if tp + fp <= 0:
        raise EmptyDenominator("false alarm rate needs tp + fp > 0")
    return 100.0 * fp / (tp + fp)


def success_rate(sa_pct: float, far_pct: float) -> float:
    """Accuracy weighed against false alarms; 100 whenever FAR is 0."""
    if sa_pct + far_pct <= 0:
        raise EmptyDenominator("success rate needs sa + far > 0")
    if far_pct == 0:
        return 100.0  # exact, not subject to float division noise
    return 100.0 * sa_pct / (sa_pct + far_pct)


def summarize(outcome: TrialOutcome) -> MetricsSummary:
    """Full summary of one user's scored trials."""
    sa = selection_accuracy(outcome.tp, outcome.fn)
    far = false_alarm_rate(outcome.tp, outcome.fp)
    avg = (
        outcome.selection_time_s / outcome.scored if outcome.scored else None
    )
    return MetricsSummary(
        sa_pct=sa,
        far_pct=far,
        sr_pct=success_rate(sa, far),
        avg_selection_time_s=avg,
    )


def aggregate(
    users: Sequence[Tuple[TrialOutcome, MetricsSummary]]
) -> MetricsSummary:
    """Arithmetic mean of per-user summaries (times averaged where known)."""
    if not users:
        raise EmptyInput("aggregate of zero users")
    n = len(users)
    times = [s.avg_selection_time_s for _, s in users if s.avg_selection_time_s is not None]
    return MetricsSummary(
        sa_pct=sum(s.sa_pct for _, s in users) / n,
        far_pct=sum(s.far_pct for _, s in users) / n,
        sr_pct=sum(s.sr_pct for _, s in users) / n,
        avg_selection_time_s=(sum(times) / len(times)) if times else None,
    )


def display_sa(value: float) -> str:
    """SA display: integer percent, exact halves rounding down."""
    return str(ceil(value - 0.5))


def display_rate(value: float) -> str:
    """FAR/SR display: one decimal."""
    return f"{value:.1f}"


# ---------------------------------------------------------------------------
# Published study-table replay

@dataclass(frozen=True)
class PublishedRow:
    """One user row of the bundled evaluation table, values as printed."""

    user: int
    tasks: int
    tp: int
    fp: int
    fn: int
    sa_printed: str
    far_printed: str
    sr_printed: str
    total_time_s: Optional[float] = None


@dataclass(frozen=True)
class RowCheck:
    row: PublishedRow
    sa_computed: float
    far_computed: float
    sr_computed: float
    mismatches: Tuple[str, ...]

    @property
    def consistent(self) -> bool:
        return not self.mismatches


def _printed_ok(printed: str, computed: float) -> bool:
    """A printed value is consistent when it equals the computed value
    rounded to the precision it was printed at (half-unit tolerance)."""
    decimals = len(printed.split(".", 1)[1]) if "." in printed else 0
    return abs(computed - float(printed)) <= 0.5 * 10.0 ** (-decimals) + 1e-9


def check_published_rows(rows: Sequence[PublishedRow]) -> List[RowCheck]:
    """Recompute every row and flag values its own counts cannot produce.

    SA and FAR are recomputed from the raw counts.  SR is recomputed from
    the row's printed SA/FAR (the precision the original computation had
    available), which separates chained-rounding artifacts from genuine
    inconsistencies.  A row where tp + fn disagrees with the task count is
    also flagged.
    """
    checks = []
    for row in rows:
        sa = selection_accuracy(row.tp, row.fn)
        far = false_alarm_rate(row.tp, row.fp)
        sr = success_rate(float(row.sa_printed), float(row.far_printed))
        mismatches = []
        if row.tp + row.fn != row.tasks:
            mismatches.append("task-count")
        if not _printed_ok(row.sa_printed, sa):
            mismatches.append("sa")
        if not _printed_ok(row.far_printed, far):
            mismatches.append("far")
        if not _printed_ok(row.sr_printed, sr):
            mismatches.append("sr")
        checks.append(
            RowCheck(
                row=row,
                sa_computed=sa,
                far_computed=far,
                sr_computed=sr,
                mismatches=tuple(mismatches),
            )
        )
    return checks


def published_aggregate(rows: Sequence[PublishedRow]) -> MetricsSummary:
    """Mean of the rows' printed values, as the published average row did."""
    users = []
    for row in rows:
        outcome = TrialOutcome(
            tp=row.tp,
            fp=row.fp,
            fn=row.fn,
            selection_time_s=row.total_time_s or 0.0,
        )
        # per-task time: wrong selections happen during a task and do not
        # add attempts, so the divisor is the session's task count
        avg_t = (
            row.total_time_s / row.tasks
            if row.total_time_s is not None and row.tasks
            else None
        )
        summary = MetricsSummary(
            sa_pct=float(row.sa_printed),
            far_pct=float(row.far_printed),
            sr_pct=float(row.sr_printed),
            avg_selection_time_s=avg_t,
        )
        users.append((outcome, summary))
    return aggregate(users)


def load_counts_csv(path) -> List[PublishedRow]:
    """Read a study counts table: user,tasks,tp,fp,fn,sa,far,sr[,total_time_s]."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            time_s = rec.get("total_time_s", "").strip()
            rows.append(
                PublishedRow(
                    user=int(rec["user"]),
                    tasks=int(rec["tasks"]),
                    tp=int(rec["tp"]),
                    fp=int(rec["fp"]),
                    fn=int(rec["fn"]),
                    sa_printed=rec["sa"].strip(),
                    far_printed=rec["far"].strip(),
                    sr_printed=rec["sr"].strip(),
                    total_time_s=float(time_s) if time_s else None,
                )
            )
    if not rows:
        raise EmptyInput(f"no rows in {path}")
    return rows


def bundled_counts_path():
    """Path of the packaged 12-user evaluation counts table."""
    return resources.files("blinkscan.data") / "user_study_counts.csv"
