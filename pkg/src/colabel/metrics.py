"""Evaluation measures for simulated sessions.

CA compares the evolving final labels with the ground truth of the
stream; MA is the model's accuracy on the held-out test split.  CD and
MD are the positive-rate gaps of, respectively, the final labels and the
model's test predictions.  UC counts label disagreements between records
identical modulo the sensitive attribute.  Per-step CA/CD series back
the time-evolution plots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .checks import InsufficientGroupData, disc, uc_count
from .data import Dataset, Record


@dataclass
class MetricsReport:
    ca: float
    ma: float
    cd: Optional[float]
    md: Optional[float]
    uc: float
    series_ca: list[float] = field(default_factory=list)
    series_cd: list[Optional[float]] = field(default_factory=list)
    interaction: dict = field(default_factory=dict)
    runs: int = 1

    def to_dict(self) -> dict:
        return {
            "ca": self.ca, "ma": self.ma, "cd": self.cd, "md": self.md,
            "uc": self.uc, "runs": self.runs, "interaction": dict(self.interaction),
            "series_ca": list(self.series_ca), "series_cd": list(self.series_cd),
        }


def accuracy(predicted: list[str], truth: list[str]) -> float:
    if not truth:
        return 0.0
    return sum(1 for p, t in zip(predicted, truth) if p == t) / len(truth)


def safe_disc(records: list[Record], labels: list[str], ds: Dataset) -> Optional[float]:
    try:
        return disc(records, labels, ds.sensitive_attribute,
                    ds.discriminated_value, ds.positive_label)
    except InsufficientGroupData:
        return None


def aggregate_reports(reports: list[MetricsReport]) -> MetricsReport:
    """Element-wise mean over repeats; None-valued gaps are skipped."""
    n = len(reports)
    if n == 1:
        return reports[0]

    def mean(values):
        values = [v for v in values if v is not None]
        return sum(values) / len(values) if values else None

    length = min(len(r.series_ca) for r in reports)
    series_ca = [mean([r.series_ca[i] for r in reports]) for i in range(length)]
    series_cd = [mean([r.series_cd[i] for r in reports]) for i in range(length)]
    interaction = {}
    for key in reports[0].interaction:
        interaction[key] = mean([r.interaction.get(key) for r in reports])
    return MetricsReport(
        ca=mean([r.ca for r in reports]),
        ma=mean([r.ma for r in reports]),
        cd=mean([r.cd for r in reports]),
        md=mean([r.md for r in reports]),
        uc=mean([r.uc for r in reports]),
        series_ca=series_ca,
        series_cd=series_cd,
        interaction=interaction,
        runs=n,
    )
