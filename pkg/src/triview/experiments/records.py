"""Per-trial records, summary statistics and result files."""
import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "experiment",
    "group_label",
    "trial_index",
    "model_seed",
    "feature_set",
    "feature_dim",
    "labeled_n",
    "unlabeled_n",
    "loss",
    "ratio_to_s1",
    "principal_angle_max",
    "failed",
)
FEATURE_SETS = ("s1", "s2", "s3")

NAN = float("nan")


def _quotient(numerator: float, denominator: float) -> float:
    if math.isnan(numerator) or math.isnan(denominator) or denominator == 0:
        return NAN
    return numerator / denominator


@dataclass(frozen=True)
class TrialRecord:
    """Losses of one trial on the feature sets S1 (raw views), S2 (fused), S3 (summed).

    Feature sets an experiment does not measure hold NaN.
    """
    experiment: str
    trial_index: int
    model_seed: int
    loss_s1: float = NAN
    loss_s2: float = NAN
    loss_s3: float = NAN
    principal_angle_max: float = NAN
    feature_dims: tuple[int, int, int] = (0, 0, 0)
    feature_sets: tuple[str, ...] = FEATURE_SETS
    labeled_n: int = 0
    unlabeled_n: int = 0
    group_label: str | None = None
    group_index: int = 0
    failed: bool = False
    failure_reason: str = ""

    def __post_init__(self):
        for name in self.feature_sets:
            loss = self.loss(name)
            if not self.failed and not loss >= 0:
                raise ValueError(f"trial {self.trial_index}: loss_{name} must be nonnegative, got {loss}")

    @property
    def ratio_s2_s1(self) -> float:
        return _quotient(self.loss_s2, self.loss_s1)

    @property
    def ratio_s3_s1(self) -> float:
        return _quotient(self.loss_s3, self.loss_s1)

    @property
    def sort_key(self) -> tuple[int, int]:
        return self.group_index, self.trial_index

    def loss(self, feature_set: str) -> float:
        return getattr(self, f"loss_{feature_set}")

    def ratio_to_s1(self, feature_set: str) -> float:
        return _quotient(self.loss(feature_set), self.loss_s1)

    def rows(self) -> list[tuple]:
        """One CSV row per measured feature set."""
        return [
            (
                self.experiment,
                self.group_label or "",
                self.trial_index,
                self.model_seed,
                name,
                self.feature_dims[FEATURE_SETS.index(name)],
                self.labeled_n,
                self.unlabeled_n,
                repr(self.loss(name)),
                repr(self.ratio_to_s1(name)),
                repr(self.principal_angle_max),
                int(self.failed),
            )
            for name in self.feature_sets
        ]


def describe(values) -> dict:
    """Box-plot statistics of the finite entries of ``values``."""
    values = np.asarray([v for v in values if math.isfinite(v)], dtype=float)
    if values.size == 0:
        return {"count": 0, "mean": None, "median": None, "q1": None, "q3": None, "min": None, "max": None}
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(values.min()),
        "max": float(values.max()),
    }


def summarize_groups(records: list[TrialRecord]) -> list[dict]:
    """Per-group statistics of losses and ratios; failed trials are excluded and counted."""
    groups: dict[int, list[TrialRecord]] = {}
    for record in sorted(records, key=lambda r: r.sort_key):
        groups.setdefault(record.group_index, []).append(record)

    summary = []
    for index, members in groups.items():
        kept = [r for r in members if not r.failed]
        feature_sets = members[0].feature_sets
        summary.append({
            "group_index": index,
            "group_label": members[0].group_label,
            "trials": len(members),
            "failed": len(members) - len(kept),
            "loss": {name: describe(r.loss(name) for r in kept) for name in feature_sets},
            "ratio_to_s1": {name: describe(r.ratio_to_s1(name) for r in kept) for name in feature_sets if name != "s1"},
            "principal_angle_max": describe(r.principal_angle_max for r in kept),
        })
    return summary


def write_atomic(path: Path, text: str) -> Path:
    """Write ``text`` to a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def records_csv(records: list[TrialRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in sorted(records, key=lambda r: r.sort_key):
        writer.writerows(record.rows())
    return buffer.getvalue()


def json_ready(value):
    """Copy of ``value`` with NaN and infinities replaced by ``None``."""
    if isinstance(value, dict):
        return {key: json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _json_text(payload) -> str:
    return json.dumps(json_ready(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_results(
    output_dir: Path, records: list[TrialRecord], summary: dict, projections: list[dict] | None = None
) -> tuple[Path, ...]:
    """Write ``records.csv`` and ``summary.json`` into ``output_dir``.

    Fitted projections, when given, go to ``projections.json`` alongside.
    """
    output_dir = Path(output_dir)
    paths = [
        write_atomic(output_dir / "records.csv", records_csv(records)),
        write_atomic(output_dir / "summary.json", _json_text(summary)),
    ]
    if projections is not None:
        paths.append(write_atomic(output_dir / "projections.json", _json_text(projections)))
    logger.info("wrote %s", ", ".join(str(p) for p in paths))
    return tuple(paths)
